"""Linearization about a soliton: dense operators, spectra, unstable modes.

Perturbations v = v+ + i v- of a soliton obey v_t + L v + M(v) = 0 in the
co-moving, co-rotating frame, with the real-linear operator

    L v = -i v_xx + i w v - c v_x + g v_x + G v + F Re(phi conj(v)),

g = |phi|^{2s}.  It is stored as a real 2N x 2N matrix acting on the stacked
vector (v+, v-).  The transport term g v_x is discretized in the
skew-adjoint form (g D + D g)/2 - g_x/2, which keeps L = J H with H exactly
symmetric; the literal product g D breaks that structure and produces
spurious high-frequency unstable modes.
"""
import enum
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.linalg.lapack import zgecon

from .grid import Grid, deriv, diff_matrices
from .solitons import SolitonParams, check_params, profile_at, wrap


class Form(str, enum.Enum):
    PLAIN = "L_plain"
    TILDE = "L_tilde"
    H = "H_form"


class ResonanceError(RuntimeError):
    """Shift too close to the spectrum for a trustworthy resolvent solve."""


@lru_cache(maxsize=4)
def _cached_dmats(L, N):
    return diff_matrices(Grid(L, N))


def dmats(g: Grid):
    return _cached_dmats(g.L, g.N)


# --- pair <-> vector helpers -----------------------------------------------

def field_to_vec(v) -> np.ndarray:
    """Complex field v = v+ + i v- to the stacked real vector (v+, v-)."""
    v = np.asarray(v)
    return np.concatenate([v.real, v.imag], axis=-1)


def vec_to_field(V) -> np.ndarray:
    """Stacked real vector (v+, v-) back to the complex field."""
    V = np.real_if_close(np.asarray(V))
    n = V.shape[-1] // 2
    return V[..., :n] + 1j * V[..., n:]


def pair_norm(V, g: Grid) -> float:
    """L2 norm of a stacked pair (real or complex components)."""
    return float(np.sqrt(np.sum(np.abs(V) ** 2) * g.dx))


# --- assembly ---------------------------------------------------------------

def _power_terms(phi, s, g: Grid):
    a2 = np.abs(phi) ** 2
    gp = a2**s
    with np.errstate(divide="ignore", invalid="ignore"):
        kap = np.where(a2 > 0, 2 * s * a2 ** (s - 1), 0.0)
    px = deriv(phi, g, 1)
    gx = kap * (phi.real * px.real + phi.imag * px.imag)
    return a2, gp, kap, px, gx


def _real_blocks(terms, F, phi, N):
    """Real 2N x 2N matrix of v -> sum alpha_m (M_m v) + F Re(phi conj v).

    ``terms`` is a list of (alpha, M) with alpha a complex scalar or array
    (pointwise multiplier applied after M) and M a real N x N matrix or None
    for the identity.
    """
    A = np.zeros((2 * N, 2 * N))
    for alpha, M in terms:
        al = np.broadcast_to(np.asarray(alpha, dtype=complex), (N,))
        if M is None:
            ar, ai = np.diag(al.real), np.diag(al.imag)
        else:
            ar, ai = al.real[:, None] * M, al.imag[:, None] * M
        A[:N, :N] += ar
        A[:N, N:] -= ai
        A[N:, :N] += ai
        A[N:, N:] += ar
    F = np.asarray(F, dtype=complex)
    A[:N, :N] += np.diag(F.real * phi.real)
    A[:N, N:] += np.diag(F.real * phi.imag)
    A[N:, :N] += np.diag(F.imag * phi.real)
    A[N:, N:] += np.diag(F.imag * phi.imag)
    return A


@dataclass
class BlockOperator:
    matrix: np.ndarray
    grid: Grid
    params: SolitonParams
    form: Form
    phi: np.ndarray  # profile entering the potentials (phi or phi-tilde)

    @property
    def N(self) -> int:
        return self.grid.N

    def apply(self, v) -> np.ndarray:
        """Apply to a complex field (R^2 identification) and return a field."""
        return vec_to_field(self.matrix @ field_to_vec(v))

    @property
    def essential_band(self) -> float:
        return self.params.h**2 / 4


def base_profile(p: SolitonParams, g: Grid, tilde: bool = False) -> np.ndarray:
    """Centred profile (theta0 = x0 = 0); with ``tilde`` the carrier e^{icx/2} is removed."""
    xi = wrap(g.x, g.L)
    phi = profile_at(p, xi)
    if tilde:
        phi = phi * np.exp(-0.5j * p.c * xi)
    return phi


def assemble_L(p: SolitonParams, g: Grid, form=Form.PLAIN) -> BlockOperator:
    """Dense real matrix of L (plain or carrier-conjugated) or of H = -J L."""
    form = Form(form)
    check_params(p)
    D1, D2 = dmats(g)
    s, b, w, c = p.s, (p.b if p.is_dnls else 0.0), p.omega, p.c
    phi = base_profile(p, g, tilde=form is Form.TILDE)
    a2, gp, kap, px, gx = _power_terms(phi, s, g)
    Sg = 0.5 * (gp[:, None] * D1 + D1 * gp[None, :])
    if form is Form.PLAIN:
        terms = [(-1j, D2), (1j * w, None), (-c, D1), (1.0, Sg),
                 (-1j * b * a2**2 - 0.5 * gx, None)]
        F = kap * px - 4j * b * a2 * phi
    elif form is Form.TILDE:
        terms = [(-1j, D2), (1j * (w - 0.25 * c * c), None), (1.0, Sg),
                 (-1j * b * a2**2 - 0.5 * gx + 0.5j * c * gp, None)]
        F = kap * (px + 0.5j * c * phi) - 4j * b * a2 * phi
    else:
        # Hessian of the action: H = -i L coefficientwise
        terms = [(-1.0, D2), (w, None), (1j * c, D1), (-1j, Sg),
                 (0.5j * gx - b * a2**2, None)]
        F = -1j * kap * px - 4 * b * a2 * phi
    A = _real_blocks(terms, F, phi, g.N)
    if not np.all(np.isfinite(A)):
        raise FloatingPointError("non-finite entries in the assembled operator")
    return BlockOperator(A, g, p, form, phi)


def J_matrix(N: int) -> np.ndarray:
    """Real form of multiplication by i: (v+, v-) -> (-v-, v+)."""
    Z = np.zeros((N, N))
    I = np.eye(N)
    return np.block([[Z, -I], [I, Z]])


def carrier_transport(v, g: Grid, c: float, inverse: bool = False) -> np.ndarray:
    """v -> e^{icx/2} v (or the inverse) on the wrapped coordinate."""
    ph = np.exp((-0.5j if inverse else 0.5j) * c * wrap(g.x, g.L))
    return np.asarray(v) * ph


# --- spectrum ---------------------------------------------------------------

@dataclass
class SpectrumReport:
    params: SolitonParams
    grid: Grid
    form: Form
    eigenvalues: np.ndarray
    retained: np.ndarray
    kernel: np.ndarray
    essential_band: float
    scale: float
    lam: complex | None = None
    Z: np.ndarray | None = None           # stacked complex pair, ||Z|| = 1
    lam_grow: complex | None = None
    Z_grow: np.ndarray | None = None
    alpha_fit: float | None = None
    C_fit: float | None = None
    message: str = ""
    op: BlockOperator | None = field(default=None, repr=False)

    @property
    def a1_holds(self) -> bool:
        return self.lam is not None

    @property
    def rho(self) -> float:
        return float(self.lam.real) if self.lam is not None else 0.0

    @property
    def theta(self) -> float:
        return float(self.lam.imag) if self.lam is not None else 0.0

    @property
    def Y1(self) -> np.ndarray:
        return vec_to_field(self.Z.real)

    @property
    def Y2(self) -> np.ndarray:
        return vec_to_field(self.Z.imag)

    @property
    def growing_field(self) -> np.ndarray:
        """Real part of Z_grow, L2-normalized, as a complex field."""
        y = self.Z_grow.real
        return vec_to_field(y / pair_norm(y, self.grid))

    def to_dict(self) -> dict:
        cp = lambda z: [float(np.real(z)), float(np.imag(z))]
        return {
            "params": self.params.to_dict(),
            "grid": self.grid.to_dict(),
            "form": self.form.value,
            "a1_holds": self.a1_holds,
            "message": self.message,
            "lambda": cp(self.lam) if self.lam is not None else None,
            "lambda_grow": cp(self.lam_grow) if self.lam_grow is not None else None,
            "alpha_fit": self.alpha_fit,
            "C_fit": self.C_fit,
            "essential_band": self.essential_band,
            "retained": [cp(z) for z in self.retained],
            "kernel": [cp(z) for z in self.kernel],
            "eigenvalues": [cp(z) for z in self.eigenvalues],
        }


def _normalize(V, g: Grid) -> np.ndarray:
    V = V / pair_norm(V, g)
    i = np.argmax(np.abs(V))
    return V * (np.abs(V[i]) / V[i])


def _pick(vals):
    """Maximal real part; ties (to 1e-10) broken by theta >= 0, then (rho, theta)."""
    rmax = max(v.real for v in vals)
    top = [v for v in vals if v.real >= rmax - 1e-10 * max(1.0, abs(rmax))]
    top.sort(key=lambda v: (v.imag < 0, -v.real, v.imag))
    return top[0]


def eigen_spectrum(op: BlockOperator, loc_tol: float = 1e-4, zero_tol: float = 1e-3,
                   band_margin: float = 1e-3, rho_tol: float | None = None) -> SpectrumReport:
    """Dense eigensolve with essential-spectrum filtering and mode selection."""
    if op.form is Form.H:
        raise ValueError("eigen_spectrum expects L_plain or L_tilde, not H_form")
    g, p = op.grid, op.params
    N = g.N
    scale = max(1.0, p.omega)
    rho_tol = 1e-6 * scale if rho_tol is None else rho_tol
    w, V = np.linalg.eig(op.matrix)
    outer = np.abs(g.x) > 0.25 * g.L
    wt = np.abs(V[:N]) ** 2 + np.abs(V[N:]) ** 2
    frac_out = wt[outer].sum(axis=0) / wt.sum(axis=0)
    band = op.essential_band
    in_band = (np.abs(w.real) < band_margin) & (np.abs(w.imag) >= band - band_margin)
    is_zero = np.abs(w) < zero_tol
    keep = (frac_out < loc_tol) & ~in_band & ~is_zero
    kernel = w[is_zero & (frac_out < loc_tol)]
    retained = w[keep]
    order = np.lexsort((retained.imag, retained.real))
    rep = SpectrumReport(p, g, op.form, w, retained[order], kernel, band, scale, op=op)
    unstable = [z for z in retained if z.real > rho_tol]
    if not unstable:
        rep.message = "(A1) fails at this parameter point: no retained eigenvalue with Re > tol"
        return rep
    lam = _pick(unstable)
    i = int(np.argmin(np.abs(w - lam)))
    rep.lam = complex(w[i])
    rep.Z = _normalize(V[:, i], g)
    target = -np.conj(rep.lam)
    j = int(np.argmin(np.abs(w - target)))
    if abs(w[j] - target) > 1e-6 * scale:
        warnings.warn(f"growing partner found only to {abs(w[j] - target):.2e}")
    rep.lam_grow = complex(w[j])
    rep.Z_grow = _normalize(V[:, j], g)
    fit = decay_fit(rep.Z, g)
    rep.alpha_fit, rep.C_fit = fit.alpha, fit.C
    return rep


def Y_of_t(report: SpectrumReport, t) -> np.ndarray:
    """Y(t) = e^{-rho t}(cos(theta t) Y1 + sin(theta t) Y2) as a complex field."""
    if report.lam is None or report.rho <= 0:
        raise ValueError("Y(t) needs an unstable eigenvalue with rho > 0")
    return vec_to_field(np.real(np.exp(-report.lam * t) * report.Z))


def dY_dt(report: SpectrumReport, t) -> np.ndarray:
    return vec_to_field(np.real(-report.lam * np.exp(-report.lam * t) * report.Z))


# --- resolvent ----------------------------------------------------------------

def resolvent_solve(op, mu: complex, A, rcond_min: float = 1e-12) -> np.ndarray:
    """Solve (L - mu) X = A for stacked vectors A of length 2N.

    ``op`` is a BlockOperator or a square matrix.  Raises ResonanceError when
    the reciprocal condition estimate falls below ``rcond_min``.
    """
    M = op.matrix if isinstance(op, BlockOperator) else np.asarray(op)
    n = M.shape[0]
    A = np.asarray(A)
    if A.shape[0] != n:
        raise ValueError(f"right-hand side has length {A.shape[0]}, operator has {n}")
    Mc = M.astype(complex) - complex(mu) * np.eye(n)
    anorm = np.abs(Mc).sum(axis=0).max()
    lu, piv = lu_factor(Mc, check_finite=False)
    rcond, info = zgecon(lu, anorm, norm="1")
    if info != 0 or rcond < rcond_min:
        raise ResonanceError(f"mu={complex(mu):.6g} too close to the spectrum "
                             f"(condition estimate {1 / max(rcond, 1e-300):.3g})")
    X = lu_solve((lu, piv), A.astype(complex), check_finite=False)
    if np.isrealobj(M) and np.isrealobj(A) and np.imag(mu) == 0:
        X = X.real
    return X


# --- decay ---------------------------------------------------------------------

@dataclass(frozen=True)
class DecayFit:
    alpha: float
    C: float
    npts: int


def _magnitude(f, g: Grid) -> np.ndarray:
    f = np.asarray(f)
    if f.shape[-1] == 2 * g.N:
        return np.sqrt(np.abs(f[..., : g.N]) ** 2 + np.abs(f[..., g.N:]) ** 2)
    return np.abs(g.check(f))


def decay_fit(f, g: Grid, window=(0.125, 0.25), floor: float = 1e-10) -> DecayFit:
    """Least-squares fit of log|f| = log C - alpha |x| on |x| in window * L.

    Samples below ``floor`` times the peak are ignored (roundoff plateau).
    """
    m = _magnitude(f, g)
    ax = np.abs(g.x)
    sel = (ax >= window[0] * g.L) & (ax <= window[1] * g.L) & (m > floor * m.max())
    if sel.sum() < 4:
        raise ValueError("too few samples above the noise floor in the fit window")
    slope, icpt = np.polyfit(ax[sel], np.log(m[sel]), 1)
    return DecayFit(float(-slope), float(np.exp(icpt)), int(sel.sum()))


def envelope_constant(f, g: Grid, alpha: float) -> float:
    """Smallest C with |u|+|v|+|u'|+|v'| <= C e^{-alpha|x|} on the grid."""
    f = np.asarray(f)
    if f.shape[-1] == 2 * g.N:
        u, v = f[..., : g.N], f[..., g.N:]
    else:
        u, v = f.real, f.imag
    s = np.abs(u) + np.abs(v) + np.abs(deriv(u, g)) + np.abs(deriv(v, g))
    return float(np.max(s * np.exp(alpha * np.abs(g.x))))
