"""Conserved quantities, the action, and the orbital-stability classification.

E, Q and P are the energy, mass and momentum of the flow; the action is
S_{w,c} = E + w Q + c P and solitons are its critical points.  Stability is
classified by comparing p(d''), the number of positive eigenvalues of the
parameter Hessian of d(w,c) = S_{w,c}(phi_{w,c}), with n(H), the number of
negative eigenvalues of the Hessian operator H of the action.
"""
import enum
from dataclasses import asdict, dataclass

import numpy as np

from .grid import Grid, deriv
from .linearized import Form, assemble_L
from .solitons import SolitonParams, check_params, soliton_profile, validate_params


class Verdict(str, enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    INCONCLUSIVE = "Inconclusive"


class GridResolutionError(RuntimeError):
    """More near-zero eigenvalues than symmetries can explain."""


def mass(u, g: Grid) -> float:
    u = g.check(u)
    return 0.5 * float(np.sum(np.abs(u) ** 2) * g.dx)


def momentum(u, g: Grid) -> float:
    u = g.check(u)
    ux = deriv(u, g)
    return -0.5 * float(np.imag(np.sum(ux * np.conj(u))) * g.dx)


def energy(u, p: SolitonParams, g: Grid) -> float:
    u = g.check(u)
    ux = deriv(u, g)
    a2 = np.abs(u) ** 2
    s = p.s
    E = 0.5 * np.sum(np.abs(ux) ** 2)
    E += np.imag(np.sum(a2**s * ux * np.conj(u))) / (2 * (s + 1))
    if p.is_dnls:
        E -= p.b / 6 * np.sum(a2**3)
    return float(E * g.dx)


def action(u, p: SolitonParams, g: Grid, omega=None, c=None) -> float:
    omega = p.omega if omega is None else omega
    c = p.c if c is None else c
    return energy(u, p, g) + omega * mass(u, g) + c * momentum(u, g)


# --- parameter Hessian d'' ----------------------------------------------------

@dataclass
class DMatrix:
    d: float
    d2: np.ndarray
    p_count: int
    det: float
    fd_step: float
    richardson_gap: float
    asymmetry: float


def _qp(p: SolitonParams, g: Grid):
    phi = soliton_profile(p, g)
    return np.array([mass(phi, g), momentum(phi, g)])


def _fd_jacobian(p, g, dstep):
    cols = []
    for key in ("omega", "c"):
        v = getattr(p, key)
        hi = _qp(p.moved(**{key: v + dstep}), g)
        lo = _qp(p.moved(**{key: v - dstep}), g)
        cols.append((hi - lo) / (2 * dstep))
    return np.column_stack(cols)  # rows (Q, P), columns (omega, c)


def _stencil_ok(p, dstep):
    for key in ("omega", "c"):
        v = getattr(p, key)
        for sgn in (1, -1):
            q = p.moved(**{key: v + sgn * dstep})
            if not validate_params(q) or q.is_endpoint:
                return False
    return True


def d_matrix(p: SolitonParams, g: Grid, fd_step: float | None = None) -> DMatrix:
    """Central-difference d'' = d(Q, P)/d(w, c) with one Richardson halving."""
    check_params(p)
    dstep = 1e-4 * max(1.0, abs(p.omega), abs(p.c)) if fd_step is None else fd_step
    for _ in range(20):
        if _stencil_ok(p, dstep):
            break
        dstep *= 0.5
    else:
        raise ValueError("finite-difference stencil leaves the admissible region")
    J1 = _fd_jacobian(p, g, dstep)
    J2 = _fd_jacobian(p, g, 0.5 * dstep)
    d2 = (4 * J2 - J1) / 3
    sym = 0.5 * (d2 + d2.T)
    phi = soliton_profile(p, g)
    return DMatrix(
        d=action(phi, p, g),
        d2=d2,
        p_count=int(np.sum(np.linalg.eigvalsh(sym) > 0)),
        det=float(np.linalg.det(sym)),
        fd_step=dstep,
        richardson_gap=float(np.max(np.abs(J1 - J2))),
        asymmetry=float(abs(d2[0, 1] - d2[1, 0])),
    )


# --- Hessian operator count n(H) --------------------------------------------------

@dataclass
class HCount:
    n: int
    near_zero: np.ndarray
    lowest: np.ndarray


def n_of_H(p: SolitonParams, g: Grid, tol_neg: float | None = None,
           zero_window: float | None = None) -> HCount:
    """Negative eigenvalues of H, excluding the two symmetry zero modes."""
    scale = max(1.0, p.omega)
    tol_neg = 1e-6 * scale if tol_neg is None else tol_neg
    zero_window = 1e-4 * scale if zero_window is None else zero_window
    H = assemble_L(p, g, Form.H).matrix
    mu = np.linalg.eigvalsh(H)
    near = np.abs(mu) < zero_window
    if near.sum() > 2:
        raise GridResolutionError(
            f"{int(near.sum())} eigenvalues of H within {zero_window:g} of zero; refine the grid")
    n = int(np.sum((mu < -tol_neg) & ~near))
    return HCount(n, mu[near], mu[:4])


def gss_classify(p_count: int, n_count: int, det: float | None = None,
                 det_tol: float = 1e-6) -> Verdict:
    if det is not None and abs(det) < det_tol:
        return Verdict.INCONCLUSIVE
    if p_count == n_count:
        return Verdict.STABLE
    if (n_count - p_count) % 2 == 1:
        return Verdict.UNSTABLE
    return Verdict.INCONCLUSIVE


@dataclass
class StabilityReport:
    params: SolitonParams
    E: float
    Q: float
    P: float
    S: float
    d: float
    d2: np.ndarray
    p_count: int
    n_count: int
    verdict: Verdict
    fd_step: float
    det: float
    richardson_gap: float
    near_zero: np.ndarray

    def to_dict(self) -> dict:
        out = asdict(self)
        out["params"] = self.params.to_dict()
        out["d2"] = self.d2.tolist()
        out["near_zero"] = self.near_zero.tolist()
        out["verdict"] = self.verdict.value
        return out


def stability_report(p: SolitonParams, g: Grid, fd_step: float | None = None) -> StabilityReport:
    phi = soliton_profile(p, g)
    dm = d_matrix(p, g, fd_step)
    hc = n_of_H(p, g)
    E, Q, P = energy(phi, p, g), mass(phi, g), momentum(phi, g)
    return StabilityReport(
        params=p, E=E, Q=Q, P=P, S=E + p.omega * Q + p.c * P, d=dm.d, d2=dm.d2,
        p_count=dm.p_count, n_count=hc.n,
        verdict=gss_classify(dm.p_count, hc.n, dm.det),
        fd_step=dm.fd_step, det=dm.det, richardson_gap=dm.richardson_gap,
        near_zero=hc.near_zero,
    )
