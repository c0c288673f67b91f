"""Exact solitons of the derivative NLS family.

Two equations are covered:

* ``DNLS``:  i u_t + u_xx + i |u|^2 u_x + b |u|^4 u = 0
* ``GDNLS``: i u_t + u_xx + i |u|^{2 sigma} u_x = 0

A soliton is R(t, x) = e^{i theta0} e^{i omega t} phi(x - x0 - c t) with
phi = Phi * exp(i c x / 2 - i k * int_{-inf}^x Phi^{2 s} dy), k = 1/4 for DNLS
and 1/(2 sigma + 2) for GDNLS.  The prefix integral of Phi^{2 s} is evaluated
in closed form (arctan / artanh primitives), so profiles can be sampled at
arbitrary, e.g. wrapped, positions without quadrature error.
"""
import enum
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .grid import Grid, deriv, taper, wrap

ENDPOINT_RTOL = 1e-13


class Equation(str, enum.Enum):
    DNLS = "dnls_b"
    GDNLS = "gdnls_sigma"


class InadmissibleParameters(ValueError):
    """Soliton parameters outside the existence region."""


class TruncationWarning(UserWarning):
    """A localized object comes too close to the edge of the periodic box."""


@dataclass(frozen=True)
class SolitonParams:
    equation: Equation
    omega: float
    c: float
    b: float = 0.0
    sigma: float = 1.0
    theta0: float = 0.0
    x0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "equation", Equation(self.equation))

    @classmethod
    def dnls(cls, b, omega, c, theta0=0.0, x0=0.0):
        return cls(Equation.DNLS, omega, c, b=b, sigma=1.0, theta0=theta0, x0=x0)

    @classmethod
    def gdnls(cls, sigma, omega, c, theta0=0.0, x0=0.0):
        return cls(Equation.GDNLS, omega, c, b=0.0, sigma=sigma, theta0=theta0, x0=x0)

    @property
    def is_dnls(self) -> bool:
        return self.equation is Equation.DNLS

    @property
    def s(self) -> float:
        """Power in the nonlinearity: |u|^{2s} u_x."""
        return 1.0 if self.is_dnls else self.sigma

    @property
    def gamma(self) -> float:
        return 1 + 16 * self.b / 3 if self.is_dnls else 1.0

    @property
    def s_star(self) -> float | None:
        g = self.gamma
        return float(np.sqrt(-g / (1 - g))) if g <= 0 else None

    @property
    def h(self) -> float:
        return float(np.sqrt(max(4 * self.omega - self.c**2, 0.0)))

    @property
    def is_endpoint(self) -> bool:
        if not self.is_dnls or self.omega <= 0:
            return False
        e = 2 * np.sqrt(self.omega)
        return abs(self.c - e) <= ENDPOINT_RTOL * e

    def moved(self, **kw) -> "SolitonParams":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        d = {"equation": self.equation.value, "omega": self.omega, "c": self.c,
             "theta0": self.theta0, "x0": self.x0}
        if self.is_dnls:
            d["b"] = self.b
        else:
            d["sigma"] = self.sigma
        return d


@dataclass(frozen=True)
class Admissibility:
    ok: bool
    reason: str = ""

    def __bool__(self):
        return self.ok


def validate_params(p: SolitonParams) -> Admissibility:
    """Existence region check; returns the violated condition if any."""
    vals = [p.omega, p.c, p.b, p.sigma, p.theta0, p.x0]
    if not all(np.isfinite(v) for v in vals):
        return Admissibility(False, f"non-finite parameter in {p.to_dict()}")
    if p.omega <= 0:
        return Admissibility(False, f"omega must be positive (omega={p.omega})")
    rw = 2 * np.sqrt(p.omega)
    if not p.is_dnls:
        if p.sigma <= 0:
            return Admissibility(False, f"sigma must be positive (sigma={p.sigma})")
        if p.c**2 >= 4 * p.omega:
            return Admissibility(False, f"need c^2 < 4 omega (c={p.c}, omega={p.omega})")
        return Admissibility(True)
    g = p.gamma
    if g > 0:
        if not (-rw < p.c <= rw or p.is_endpoint):
            return Admissibility(
                False, f"gamma>0 requires -2 sqrt(omega) < c <= 2 sqrt(omega) "
                f"(c={p.c}, 2 sqrt(omega)={rw:.6g})")
        return Admissibility(True)
    upper = -2 * p.s_star * np.sqrt(p.omega)
    if not (-rw < p.c < upper):
        return Admissibility(
            False, f"gamma<=0 requires -2 sqrt(omega) < c < -2 s* sqrt(omega) "
            f"(c={p.c}, bounds=({-rw:.6g}, {upper:.6g}))")
    return Admissibility(True)


def check_params(p: SolitonParams) -> SolitonParams:
    v = validate_params(p)
    if not v:
        raise InadmissibleParameters(v.reason)
    return p


# --- closed forms ----------------------------------------------------------

def _branch_constants(p: SolitonParams):
    """(A, c, A^2 - c^2, A - c, scale, rate) for Phi^{2s} = scale / (A cosh(rate x) - c)."""
    h = p.h
    c = p.c
    if p.is_dnls:
        A = np.sqrt(c * c + p.gamma * h * h)
        disc = p.gamma * h * h
        scale, rate = 2 * h * h, h
    else:
        A = 2 * np.sqrt(p.omega)
        disc = h * h
        scale, rate = (p.sigma + 1) * h * h, p.sigma * h
    amc = disc / (A + c) if c > 0 else A - c
    return A, c, disc, amc, scale, rate


def _inv_cosh_form(A, c, amc, z):
    """1 / (A cosh z - c) without overflow or cancellation."""
    e = np.exp(-np.abs(z))
    if c > 0:
        den = amc * (1 + e * e) + c * (1 - e) ** 2
    else:
        den = A * (1 + e * e) - 2 * c * e
    return 2 * e / den


def _primitive(A, c, disc, z):
    """int_{-inf}^z dz' / (A cosh z' - c)."""
    t = np.tanh(0.5 * z)
    if disc > 0:
        r = np.sqrt(disc)
        K = (A + c) / r
        return 2 / r * (np.arctan(K * t) + np.arctan(K))
    if disc < 0:
        r = np.sqrt(-disc)
        kap = -(A + c) / r
        return 2 / r * (np.arctanh(kap * t) + np.arctanh(kap))
    return (t + 1) / abs(c)


def amplitude_squared(p: SolitonParams, x) -> np.ndarray:
    """Phi^2 for DNLS (Phi^{2 sigma} for GDNLS), centred at the origin."""
    check_params(p)
    x = np.asarray(x, dtype=float)
    if p.is_endpoint:
        return 4 * p.c / ((p.c * x) ** 2 + p.gamma)
    A, c, disc, amc, scale, rate = _branch_constants(p)
    return scale * _inv_cosh_form(A, c, amc, rate * x)


def amplitude(p: SolitonParams, x) -> np.ndarray:
    """Phi itself."""
    return amplitude_squared(p, x) ** (0.5 / p.s)


def phase_integral(p: SolitonParams, x) -> np.ndarray:
    """int_{-inf}^x Phi^{2s}(y) dy in closed form."""
    check_params(p)
    x = np.asarray(x, dtype=float)
    if p.is_endpoint:
        sg = np.sqrt(p.gamma)
        return 4 / sg * (np.arctan(p.c * x / sg) + 0.5 * np.pi)
    A, c, disc, amc, scale, rate = _branch_constants(p)
    return scale / rate * _primitive(A, c, disc, rate * x)


def phase_coefficient(p: SolitonParams) -> float:
    return 0.25 if p.is_dnls else 1.0 / (2 * p.sigma + 2)


def profile_at(p: SolitonParams, xi) -> np.ndarray:
    """phi_{omega,c}(xi) centred at the origin (no theta0 / x0 applied)."""
    xi = np.asarray(xi, dtype=float)
    ph = 0.5 * p.c * xi - phase_coefficient(p) * phase_integral(p, xi)
    return amplitude(p, xi) * np.exp(1j * ph)


def soliton_profile(p: SolitonParams, g: Grid) -> np.ndarray:
    """e^{i theta0} phi_{omega,c}(x - x0), sampled periodically on g."""
    check_params(p)
    if not p.is_endpoint and not g.truncation_ok(p.h):
        warnings.warn(f"L={g.L} too short for decay rate h={p.h:.4g}", TruncationWarning,
                      stacklevel=2)
    xi = wrap(g.x - p.x0, g.L)
    return np.exp(1j * p.theta0) * profile_at(p, xi)


def traveling_soliton(p: SolitonParams, g: Grid, t: float) -> np.ndarray:
    """R(t, x) = e^{i theta0} e^{i omega t} phi(x - x0 - c t), periodic sampling."""
    centre = wrap(p.x0 + p.c * t, g.L)
    if abs(centre) > 0.5 * g.L - 0.125 * g.L:
        warnings.warn(f"soliton centre {centre:.4g} within L/8 of the box edge",
                      TruncationWarning, stacklevel=2)
    q = p.moved(x0=float(centre), theta0=p.theta0 + p.omega * t)
    return soliton_profile(q, g)


@dataclass(frozen=True)
class MultiProfile:
    values: np.ndarray
    v_star: float
    h_min: float


def speed_gap(params) -> float:
    """v_* = min_{j != k} |c_j - c_k| / 9 (infinite for a single soliton)."""
    cs = [q.c for q in params]
    if len(cs) < 2:
        return np.inf
    return min(abs(a - b) for i, a in enumerate(cs) for b in cs[i + 1:]) / 9.0


def multi_profile(params, g: Grid, t: float) -> MultiProfile:
    """Sum of traveling solitons at time t, with v_* and min h_j."""
    params = list(params)
    if not params:
        raise ValueError("need at least one soliton")
    vals = sum(traveling_soliton(q, g, t) for q in params)
    return MultiProfile(vals, speed_gap(params), min(q.h for q in params))


# --- residual of the profile equation --------------------------------------

def stationary_residual(phi, p: SolitonParams, g: Grid, window: bool = True) -> float:
    """Sup norm of -phi_xx + w phi + i c phi_x - i |phi|^{2s} phi_x - b |phi|^4 phi.

    With ``window`` the field is first multiplied by a smooth taper that is 1
    on |x| <= L/4, and the sup is taken there.  This removes the seam of the
    periodic box from the measurement (needed for slowly decaying profiles)
    and changes nothing inside the window.
    """
    phi = np.asarray(g.check(phi), dtype=complex)
    if window:
        f = phi * taper(g)
        mask = np.abs(g.x) <= 0.25 * g.L
    else:
        f = phi
        mask = slice(None)
    fx = deriv(f, g, 1)
    fxx = deriv(f, g, 2)
    a2 = np.abs(f) ** 2
    r = -fxx + p.omega * f + 1j * p.c * fx - 1j * a2**p.s * fx
    if p.is_dnls:
        r = r - p.b * a2**2 * f
    return float(np.max(np.abs(r[mask]), initial=0.0))
