"""Gauge transformation u <-> (phi, psi) and the gauge-system nonlinearities.

phi = exp((i/2) int_{-L/2}^x |u|^{2s} dy) u and psi = phi_x - (i/2)|phi|^{2s} phi,
which equals the same phase times u_x.  The pair solves

    i phi_t + phi_xx = P(phi, psi),   i psi_t + psi_xx = Q(phi, psi),

with no derivative loss in the nonlinearity.  Prefix integrals start at the
left edge of the box, so the state must stay away from that edge.
"""
import warnings
from dataclasses import dataclass

import numpy as np

from .grid import Grid, deriv, prefix_integral
from .solitons import SolitonParams, TruncationWarning


class LipschitzWarning(UserWarning):
    """Gauge nonlinearity outside the regime where it is locally Lipschitz."""


@dataclass
class GaugePair:
    phi: np.ndarray
    psi: np.ndarray
    grid: Grid

    def stack(self) -> np.ndarray:
        return np.stack([self.phi, self.psi])


def _phase(u, p: SolitonParams, g: Grid) -> np.ndarray:
    return 0.5 * prefix_integral(np.abs(u) ** (2 * p.s), g)


def _check_localized(u, g: Grid, tol=1e-8):
    m = np.abs(u)
    if m.max() > 0 and max(m[0], m[-1]) > tol * m.max():
        warnings.warn("field is not localized at the box edge; prefix integrals are "
                      "truncated", TruncationWarning, stacklevel=3)


def to_gauge(u, p: SolitonParams, g: Grid) -> GaugePair:
    u = np.asarray(g.check(u), dtype=complex)
    _check_localized(u, g)
    e = np.exp(1j * _phase(u, p, g))
    return GaugePair(e * u, e * deriv(u, g), g)


def from_gauge(pair: GaugePair, p: SolitonParams) -> np.ndarray:
    g = pair.grid
    return np.exp(-1j * _phase(pair.phi, p, g)) * pair.phi


def constraint_psi(phi, p: SolitonParams, g: Grid) -> np.ndarray:
    """psi rebuilt from phi: phi_x - (i/2)|phi|^{2s} phi."""
    return deriv(phi, g) - 0.5j * np.abs(phi) ** (2 * p.s) * phi


def lipschitz_regime(sigma: float) -> bool:
    return sigma == 1 or sigma == 2 or sigma >= 2.5


def gauge_nonlinearity(phi, psi, p: SolitonParams, g: Grid, warn: bool = True):
    """(P, Q) of the gauge system for either equation."""
    phi = np.asarray(phi, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    a2 = np.abs(phi) ** 2
    if p.is_dnls:
        b = p.b
        P = 1j * phi**2 * np.conj(psi) - b * a2**2 * phi
        Q = (-1j * psi**2 * np.conj(phi) - 3 * b * a2**2 * psi
             - 2 * b * a2 * phi**2 * np.conj(psi))
        return P, Q
    s = p.sigma
    if warn and not lipschitz_regime(s):
        warnings.warn(f"sigma={s} is outside the Lipschitz regime of the gauge system",
                      LipschitzWarning, stacklevel=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        w1 = np.where(a2 > 0, a2 ** (s - 1), 0.0)
        w2 = np.where(a2 > 0, a2 ** (s - 2), 0.0)
    P = 1j * s * w1 * phi**2 * np.conj(psi)
    Q = -1j * s * w1 * psi**2 * np.conj(phi)
    if s != 1:
        I = prefix_integral(w2 * np.imag(psi**2 * np.conj(phi) ** 2), g)
        P = P - s * (s - 1) * phi * I
        Q = Q - s * (s - 1) * psi * I
    return P, Q
