"""Approximate solutions built on the unstable eigenmode.

In the co-moving, co-rotating frame a perturbation W of the soliton obeys

    W_t + L W + M(W) = 0,   M(v) = f(phi + v) - f(phi) - f'(phi) v,

with f(u) = |u|^{2s} u_x - i b |u|^4 u.  At first order W = a Y(t) solves the
linear part exactly.  At second order the quadratic part of M(a Y) is
collected into e^{-2 rho t} {1, cos, sin}(j theta t) components and each is
removed by one resolvent solve.  The dressed ansatz U = R_1 + V_1 then solves
the PDE up to a residual Err = O(e^{-(N0+1) rho t}).
"""
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, deriv, sobolev_norm, translate
from .linearized import (ResonanceError, SpectrumReport, Y_of_t, dY_dt, field_to_vec,
                         resolvent_solve, vec_to_field)
from .solitons import SolitonParams, traveling_soliton

N_PHASES = 8


def _f(u, ux, p: SolitonParams):
    a2 = np.abs(u) ** 2
    out = a2**p.s * ux
    if p.is_dnls and p.b != 0:
        out = out - 1j * p.b * a2**2 * u
    return out


def _f_prime(v, vx, base, bx, p: SolitonParams):
    a2 = np.abs(base) ** 2
    s = p.s
    with np.errstate(divide="ignore", invalid="ignore"):
        kap = np.where(a2 > 0, 2 * s * a2 ** (s - 1), 0.0)
    R = (base * np.conj(v)).real
    out = a2**s * vx + kap * bx * R
    if p.is_dnls and p.b != 0:
        out = out - 1j * p.b * (a2**2 * v + 4 * a2 * base * R)
    return out


def nonlinear_remainder(v, base, p: SolitonParams, g: Grid) -> np.ndarray:
    """f(base + v) - f(base) - f'(base) v, evaluated without cancellation for DNLS."""
    v = np.asarray(g.check(v), dtype=complex)
    base = np.asarray(base, dtype=complex)
    vx = deriv(v, g)
    bx = deriv(base, g)
    if p.is_dnls:
        R = (base * np.conj(v)).real
        v2 = np.abs(v) ** 2
        a2 = np.abs(base) ** 2
        e = 2 * R + v2
        out = 2 * R * vx + v2 * bx + v2 * vx
        if p.b != 0:
            out = out - 1j * p.b * (2 * a2 * v2 * base + 2 * a2 * e * v + e * e * (base + v))
        return out
    u = base + v
    return _f(u, bx + vx, p) - _f(base, bx, p) - _f_prime(v, vx, base, bx, p)


def nonlinear_M(v, phi, p: SolitonParams, g: Grid) -> np.ndarray:
    """Moving-frame nonlinearity M(v) about the profile phi."""
    return nonlinear_remainder(v, phi, p, g)


def nonlinear_N(v, R, p: SolitonParams, g: Grid) -> np.ndarray:
    """Lab-frame nonlinearity N(v) about the traveling soliton R."""
    return nonlinear_remainder(v, R, p, g)


def quadratic_part(v, phi, p: SolitonParams, g: Grid, eps: float = 1e-4) -> np.ndarray:
    """Degree-two part of M(v)."""
    v = np.asarray(v, dtype=complex)
    if p.is_dnls:
        vx = deriv(v, g)
        px = deriv(phi, g)
        R = (phi * np.conj(v)).real
        v2 = np.abs(v) ** 2
        out = 2 * R * vx + v2 * px
        if p.b != 0:
            a2 = np.abs(phi) ** 2
            out = out - 1j * p.b * (4 * phi * R * R + 2 * a2 * v2 * phi + 4 * a2 * v * R)
        return out
    plus = nonlinear_M(eps * v, phi, p, g)
    minus = nonlinear_M(-eps * v, phi, p, g)
    return (plus + minus) / (2 * eps * eps)


# --- the expansion W -------------------------------------------------------------

@dataclass
class ProfileExpansion:
    a: float
    N0: int
    lam: complex
    params: SolitonParams
    grid: Grid
    phi: np.ndarray
    report: SpectrumReport = field(repr=False)
    coeffs: dict = field(default_factory=dict)   # (j, k) -> (A, B) complex fields

    @property
    def rho(self) -> float:
        return float(self.lam.real)

    @property
    def theta(self) -> float:
        return float(self.lam.imag)

    def W(self, t) -> np.ndarray:
        out = self.a * Y_of_t(self.report, t)
        for (j, k), (A, B) in self.coeffs.items():
            if k < 2:
                continue
            jt = j * self.theta * t
            out = out + np.exp(-k * self.rho * t) * (A * np.cos(jt) + B * np.sin(jt))
        return out

    def W_t(self, t) -> np.ndarray:
        out = self.a * dY_dt(self.report, t)
        r, th = self.rho, self.theta
        for (j, k), (A, B) in self.coeffs.items():
            if k < 2:
                continue
            jt = j * th * t
            e = np.exp(-k * r * t)
            out = out + e * (-k * r * (A * np.cos(jt) + B * np.sin(jt))
                             + j * th * (-A * np.sin(jt) + B * np.cos(jt)))
        return out

    def to_dict(self) -> dict:
        return {"a": self.a, "N0": self.N0, "lambda": [self.rho, self.theta],
                "params": self.params.to_dict(), "grid": self.grid.to_dict(),
                "coefficients": sorted(f"A_{j}{k},B_{j}{k}" for j, k in self.coeffs)}


def collect_harmonics(report: SpectrumReport, a: float, phi, p, g):
    """Project Q2(a(cos s Y1 + sin s Y2)) onto {1, cos s, sin s, cos 2s, sin 2s}."""
    Y1, Y2 = report.Y1, report.Y2
    s = 2 * np.pi * np.arange(N_PHASES) / N_PHASES
    q = np.array([quadratic_part(a * (np.cos(si) * Y1 + np.sin(si) * Y2), phi, p, g)
                  for si in s])
    out = {0: (q.mean(axis=0), np.zeros(g.N, complex))}
    for j in (1, 2):
        A = 2 * np.tensordot(np.cos(j * s), q, axes=1) / N_PHASES
        B = 2 * np.tensordot(np.sin(j * s), q, axes=1) / N_PHASES
        out[j] = (A, B)
    return out


def build_W(report: SpectrumReport, a: float, N0: int = 1, gap: float = 1e-4) -> ProfileExpansion:
    """Order-N0 approximate perturbation (N0 in {1, 2})."""
    if N0 not in (1, 2):
        raise ValueError("only N0 = 1 or 2 is supported")
    if report.lam is None or report.rho <= 0:
        raise ValueError("build_W needs an unstable eigenvalue")
    op = report.op
    p, g = report.params, report.grid
    phi = op.phi
    exp = ProfileExpansion(a, N0, report.lam, p, g, phi, report)
    exp.coeffs[(1, 1)] = (a * report.Y1, a * report.Y2)
    if N0 == 1 or a == 0:
        return exp
    rho, th = report.rho, report.theta
    harm = collect_harmonics(report, a, phi, p, g)
    for j, (At, Bt) in harm.items():
        mu = 2 * rho - 1j * j * th
        dist = np.min(np.abs(report.retained - mu), initial=np.inf)
        if dist < gap:
            raise ResonanceError(f"resonant parameter point: shift {mu:.6g} within "
                                 f"{dist:.2e} of the retained spectrum")
        rhs = -(field_to_vec(At) - 1j * field_to_vec(Bt))
        C = resolvent_solve(op, mu, rhs)
        exp.coeffs[(j, 2)] = (vec_to_field(C.real), vec_to_field(-C.imag))
    return exp


def flow_residual(exp: ProfileExpansion, t: float) -> np.ndarray:
    """W_t + L W + M(W) in the moving frame, with L applied spectrally."""
    p, g, phi = exp.params, exp.grid, exp.phi
    W = exp.W(t)
    Wx, Wxx = deriv(W, g), deriv(W, g, 2)
    px = deriv(phi, g)
    LW = -1j * Wxx + 1j * p.omega * W - p.c * Wx + _f_prime(W, Wx, phi, px, p)
    return exp.W_t(t) + LW + nonlinear_M(W, phi, p, g)


def dress_profile(exp: ProfileExpansion, t: float):
    """(V1, U1) = (e^{i w t} W(t, x - c t), R1 + V1) on the lab-frame grid."""
    p, g = exp.params, exp.grid
    base = p.moved(theta0=0.0, x0=0.0)
    V = np.exp(1j * p.omega * t) * translate(exp.W(t), g, p.c * t)
    R = traveling_soliton(base, g, t)
    return V, R + V


def pde_residual(U, U_t, p: SolitonParams, g: Grid) -> np.ndarray:
    """i U_t + U_xx + i |U|^{2s} U_x + b |U|^4 U."""
    Ux, Uxx = deriv(U, g), deriv(U, g, 2)
    a2 = np.abs(U) ** 2
    r = 1j * U_t + Uxx + 1j * a2**p.s * Ux
    if p.is_dnls and p.b != 0:
        r = r + p.b * a2**2 * U
    return r


def err_field(exp: ProfileExpansion, t: float) -> np.ndarray:
    """Err(t) evaluated in co-moving coordinates (up to the unit factor e^{i w t}).

    With U = e^{i w t} (phi + W)(t, x - c t) the time derivative is analytic:
    U_t = e^{i w t} [i w (phi + W) + W_t - c (phi + W)_x].
    """
    p, g = exp.params, exp.grid
    Uf = exp.phi + exp.W(t)
    Ut = 1j * p.omega * Uf + exp.W_t(t) - p.c * deriv(Uf, g)
    return pde_residual(Uf, Ut, p, g)


def err_residual(exp: ProfileExpansion, t: float, s: float = 2) -> float:
    """H^s norm of the PDE residual of U_1 (translation and phase invariant)."""
    return sobolev_norm(err_field(exp, t), exp.grid, s)


@dataclass(frozen=True)
class RateFit:
    rate: float
    prefactor: float
    times: np.ndarray
    values: np.ndarray


def fit_rate(times, values) -> RateFit:
    """Least-squares fit values ~ C e^{-rate t}."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    ok = values > 0
    if ok.sum() < 3:
        raise ValueError("need at least three positive samples to fit a rate")
    slope, icpt = np.polyfit(times[ok], np.log(values[ok]), 1)
    return RateFit(float(-slope), float(np.exp(icpt)), times, values)


def err_decay_fit(exp: ProfileExpansion, window=None, n: int = 9) -> RateFit:
    """Decay rate of ||Err||_{H^2} over t in [2/rho, 6/rho] (default)."""
    rho = exp.rho
    t0, t1 = (2 / rho, 6 / rho) if window is None else window
    if t1 - t0 < 1 / rho or n < 3:
        raise ValueError("time window too short to fit a decay rate")
    ts = np.linspace(t0, t1, n)
    return fit_rate(ts, [err_residual(exp, t) for t in ts])
