"""Periodic grids and Fourier-spectral utilities.

Everything downstream samples fields on the periodic box [-L/2, L/2) with
N equispaced points.  Derivatives are computed either matrix-free through
the FFT or with dense differentiation matrices (for eigenproblems); both
agree to rounding because they represent the same Fourier symbol.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import circulant
from scipy.special import erfc


@dataclass(frozen=True)
class Grid:
    """Truncated periodic domain [-L/2, L/2) sampled at N points.

    ``dt`` is optional; evolution code falls back to ``0.2 * dx**2``.
    """

    L: float
    N: int
    dt: float | None = None

    def __post_init__(self):
        if not np.isfinite(self.L) or self.L <= 0:
            raise ValueError(f"domain length must be positive, got L={self.L}")
        n = int(self.N)
        if n != self.N or n < 16 or n & (n - 1):
            raise ValueError(f"N must be a power of two >= 16, got N={self.N}")
        if self.dt is not None and (not np.isfinite(self.dt) or self.dt == 0):
            raise ValueError(f"dt must be finite and nonzero, got dt={self.dt}")

    @property
    def dx(self) -> float:
        return self.L / self.N

    @cached_property
    def x(self) -> np.ndarray:
        return -0.5 * self.L + self.dx * np.arange(self.N)

    @cached_property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in FFT ordering."""
        return 2 * np.pi * np.fft.fftfreq(self.N, d=self.dx)

    @property
    def default_dt(self) -> float:
        return self.dt if self.dt is not None else 0.2 * self.dx**2

    def check(self, f) -> np.ndarray:
        f = np.asarray(f)
        if f.shape[-1] != self.N:
            raise ValueError(f"field has {f.shape[-1]} samples, grid has N={self.N}")
        return f

    def truncation_ok(self, h: float, tol: float = 1e-10) -> bool:
        """True if exp(-(h/2)(L/4)) < tol, i.e. a soliton of rate h fits."""
        return h > 0 and np.exp(-0.125 * h * self.L) < tol

    def to_dict(self) -> dict:
        return {"L": self.L, "N": self.N, "dx": self.dx, "dt": self.dt}


def min_length(h: float, tol: float = 1e-10) -> float:
    """Smallest L with exp(-(h/2)(L/4)) <= tol."""
    return -8.0 * np.log(tol) / h


# --- matrix-free spectral calculus ------------------------------------------

def _odd_k(g: Grid) -> np.ndarray:
    # Nyquist mode dropped for odd derivatives (keeps real fields real and
    # matches the dense first-derivative matrix).
    k = g.k.copy()
    k[g.N // 2] = 0.0
    return k


def deriv(f, g: Grid, order: int = 1) -> np.ndarray:
    """Spectral derivative of a sampled periodic field (axis -1)."""
    f = g.check(f)
    if order == 0:
        return np.array(f, dtype=complex)
    fh = np.fft.fft(f, axis=-1)
    if order % 2:
        sym = (1j * _odd_k(g)) ** order
    else:
        sym = (1j * g.k) ** order
    out = np.fft.ifft(fh * sym, axis=-1)
    if np.isrealobj(f):
        return out.real
    return out


def prefix_integral(f, g: Grid) -> np.ndarray:
    """Spectral approximation of F(x) = integral of f from -L/2 to x.

    The mean of f is integrated exactly as a linear ramp; the zero-mean part
    is integrated in Fourier space.  Exact (to rounding) for band-limited f,
    unlike the O(dx^2) cumulative trapezoid.
    """
    f = g.check(f)
    fh = np.fft.fft(f, axis=-1)
    mean = fh[..., :1] / g.N
    k = _odd_k(g)
    k[0] = k[g.N // 2] = 1.0
    ah = fh / (1j * k)
    ah[..., 0] = 0.0
    ah[..., g.N // 2] = 0.0
    anti = np.fft.ifft(ah, axis=-1)
    out = mean * (g.x + 0.5 * g.L) + anti - anti[..., :1]
    if np.isrealobj(f):
        return out.real
    return out


def inner(f, h, g: Grid) -> complex:
    """<f, h> = integral of f * conj(h) dx (rectangle rule = exact for trig)."""
    return complex(np.sum(f * np.conj(h)) * g.dx)


def l2_norm(f, g: Grid) -> float:
    f = g.check(f)
    return float(np.sqrt(np.sum(np.abs(f) ** 2) * g.dx))


def sobolev_norm(f, g: Grid, s: float = 1) -> float:
    """H^s norm via the Fourier weight (1 + k^2)^s.  Pairs (2, N) are summed."""
    f = g.check(f)
    fh = np.fft.fft(f, axis=-1)
    w = (1 + g.k**2) ** s
    return float(np.sqrt(np.sum(w * np.abs(fh) ** 2) * g.dx / g.N))


def translate(f, g: Grid, shift: float) -> np.ndarray:
    """Periodic band-limited translation f(x - shift)."""
    f = g.check(f)
    fh = np.fft.fft(f, axis=-1)
    ph = np.exp(-1j * _odd_k(g) * shift)
    nyq = g.N // 2
    ph[nyq] = np.cos(g.k[nyq] * shift)
    out = np.fft.ifft(fh * ph, axis=-1)
    return out.real if np.isrealobj(f) else out


def wrap(x, L: float):
    """Map positions into [-L/2, L/2)."""
    return np.mod(np.asarray(x) + 0.5 * L, L) - 0.5 * L


def resample(f, src: Grid, dst: Grid) -> np.ndarray:
    """Evaluate the trigonometric interpolant of f (on src) at dst.x.

    Points of dst outside the src box are set to zero, which is the right
    extension for localized fields.
    """
    f = src.check(f)
    if src == dst:
        return np.array(f)
    fh = np.fft.fft(f, axis=-1) / src.N
    k = src.k
    nyq = src.N // 2
    xd = dst.x
    inside = np.abs(xd) <= 0.5 * src.L
    xs = xd[inside] - src.x[0]
    E = np.exp(1j * np.outer(xs, k))
    E[:, nyq] = np.cos(k[nyq] * xs)
    vals = fh @ E.T
    out = np.zeros(f.shape[:-1] + (dst.N,), dtype=complex)
    out[..., inside] = vals
    return out.real if np.isrealobj(f) else out


def taper(g: Grid, frac: float = 0.375, width: float = 1 / 48) -> np.ndarray:
    """Smooth window equal to 1 (to rounding) for |x| <= L/4 and 0 near +-L/2."""
    return 0.5 * erfc((np.abs(g.x) - frac * g.L) / (width * g.L))


# --- dense differentiation matrices -----------------------------------------

def diff_matrices(g: Grid):
    """Dense Fourier differentiation matrices (D1, D2) on g.

    Built from the cot/csc closed forms and symmetrized exactly so that D1 is
    skew and D2 symmetric to the last bit.
    """
    N = g.N
    hh = 2 * np.pi / N
    j = np.arange(1, N)
    sgn = (-1.0) ** j
    col1 = np.zeros(N)
    col1[1:] = 0.5 * sgn / np.tan(0.5 * j * hh)
    col2 = np.empty(N)
    col2[0] = -np.pi**2 / (3 * hh**2) - 1.0 / 6.0
    col2[1:] = -0.5 * sgn / np.sin(0.5 * j * hh) ** 2
    s = 2 * np.pi / g.L
    D1 = circulant(col1) * s
    D2 = circulant(col2) * s**2
    D1 = 0.5 * (D1 - D1.T)
    D2 = 0.5 * (D2 + D2.T)
    return D1, D2
