"""Fundamental solutions of -u'' - mu u = f on the line.

For mu off [0, inf) the decaying solution kernel is

    g_mu(x) = i / (2 sqrt(mu)) * exp(i sqrt(mu) |x|),

with the branch sqrt(r e^{i t}) = r^{1/2} e^{i t/2}, t in (0, 2 pi], so that
Im sqrt(mu) > 0.  Its Fourier transform is 1 / (k^2 - mu); grid convolution
uses that transform on the periodic box, which is the exact transform of the
periodized (sum over images) kernel.
"""
import warnings
from dataclasses import dataclass

import numpy as np

from .grid import Grid
from .linearized import BlockOperator, Form
from .solitons import TruncationWarning


@dataclass(frozen=True)
class KernelSpec:
    mu: complex
    sqrt_mu: complex
    tau: float
    C_bound: float


def branch_sqrt(mu: complex) -> complex:
    """sqrt with argument taken in (0, 2 pi]; Im > 0 off the cut [0, inf)."""
    mu = complex(mu)
    r = abs(mu)
    t = np.angle(mu)
    if t <= 0:
        t += 2 * np.pi
    return np.sqrt(r) * np.exp(0.5j * t)


def kernel_spec(mu: complex) -> KernelSpec:
    mu = complex(mu)
    if not np.isfinite(mu) or (mu.imag == 0 and mu.real >= 0):
        raise ValueError(f"mu={mu} lies on the branch cut [0, inf)")
    sq = branch_sqrt(mu)
    r = abs(mu)
    t = np.angle(mu) % (2 * np.pi)
    st = np.sin(0.5 * t) if t > 0 else 0.0
    tau = r * st * st
    # |g_mu| = e^{-sqrt(tau)|x|} / (2 sqrt r) = sin(t/2) g_{-tau}
    return KernelSpec(mu, sq, float(tau), float(st))


def g_mu(spec: KernelSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return 0.5j / spec.sqrt_mu * np.exp(1j * spec.sqrt_mu * np.abs(x))


def g_minus_tau(spec: KernelSpec, x) -> np.ndarray:
    """Comparison kernel g_{-tau}(x) = e^{-sqrt(tau)|x|} / (2 sqrt(tau))."""
    st = np.sqrt(spec.tau)
    return np.exp(-st * np.abs(np.asarray(x, dtype=float))) / (2 * st)


def kernel_symbol(spec: KernelSpec, k) -> np.ndarray:
    """Fourier transform of g_mu: 1 / (k^2 - mu)."""
    return 1.0 / (np.asarray(k) ** 2 - spec.mu)


def periodized_kernel(spec: KernelSpec, g: Grid) -> np.ndarray:
    """sum_n g_mu(x + n L) on [-L/2, L/2) in closed form (geometric series)."""
    s = spec.sqrt_mu
    x = g.x
    q = np.exp(1j * s * g.L)
    images = np.exp(1j * s * np.abs(x)) + 2 * np.cos(s * x) * q / (1 - q)
    return 0.5j / s * images


def convolve_kernel(spec: KernelSpec, f, g: Grid, tail_tol: float = 1e-8) -> np.ndarray:
    """u = g_mu * f on the periodic box, i.e. (-d_xx - mu) u = f spectrally."""
    f = np.asarray(g.check(f), dtype=complex)
    edge = np.abs(g.x) >= 0.25 * g.L
    if np.max(np.abs(f[edge]), initial=0.0) > tail_tol * max(np.max(np.abs(f)), 1e-300):
        warnings.warn("source is not localized within |x| < L/4", TruncationWarning,
                      stacklevel=2)
    return np.fft.ifft(np.fft.fft(f) * kernel_symbol(spec, g.k))


def helmholtz_apply(spec: KernelSpec, u, g: Grid) -> np.ndarray:
    """(-d_xx - mu) u spectrally (the forward map of convolve_kernel)."""
    uh = np.fft.fft(np.asarray(u, dtype=complex))
    return np.fft.ifft((g.k**2 - spec.mu) * uh)


# --- the conjugated operator L' = i P L P^{-1} -------------------------------------

def _P_blocks(N):
    I = np.eye(N)
    P = np.block([[I, 1j * I], [I, -1j * I]])
    Pinv = 0.5 * np.block([[I, I], [-1j * I, 1j * I]])
    return P, Pinv


@dataclass
class PrimeOperator:
    matrix: np.ndarray
    P: np.ndarray
    Pinv: np.ndarray
    source: BlockOperator

    def transform_vector(self, U) -> np.ndarray:
        """Eigenvector map U -> P U."""
        return self.P @ U


def conjugate_prime(op: BlockOperator) -> PrimeOperator:
    """L' = i P L P^{-1} with P = [[1, i], [1, -i]] acting on (v+, v-)."""
    P, Pinv = _P_blocks(op.N)
    return PrimeOperator(1j * P @ op.matrix @ Pinv, P, Pinv, op)


def helmholtz_part(op: BlockOperator, lam_prime: complex) -> np.ndarray:
    """Dense H-part diag(d_xx - h^2/4 - lam', -d_xx + h^2/4 - lam') of L' - lam'.

    Only meaningful for the carrier-free (tilde) form, where the constant
    coefficient part of L' is exactly diag(d_xx - h^2/4, -d_xx + h^2/4).
    """
    if op.form is not Form.TILDE:
        raise ValueError("the H + K splitting is defined for the L_tilde form")
    from .linearized import dmats
    _, D2 = dmats(op.grid)
    N = op.N
    I = np.eye(N)
    q = op.params.h**2 / 4
    Z = np.zeros((N, N))
    return np.block([[D2 - (q + lam_prime) * I, Z], [Z, -D2 + (q - lam_prime) * I]])


def helmholtz_part_solve(op: BlockOperator, lam_prime: complex, a1, a2):
    """Solve the H-part system by two kernel convolutions.

    (d_xx - h^2/4 - lam') x1 = a1  ->  x1 = g_{mu1} * (-a1), mu1 = -h^2/4 - lam'
    (-d_xx + h^2/4 - lam') x2 = a2 ->  x2 = g_{mu2} * a2,    mu2 = lam' - h^2/4
    """
    q = op.params.h**2 / 4
    s1 = kernel_spec(-q - lam_prime)
    s2 = kernel_spec(lam_prime - q)
    g = op.grid
    return convolve_kernel(s1, -np.asarray(a1), g), convolve_kernel(s2, a2, g)
