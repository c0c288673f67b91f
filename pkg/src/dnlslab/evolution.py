"""Time integration: full PDE, gauge system, and the linearized flow.

The PDE and gauge system use an integrating-factor RK4 (Lawson) scheme in
Fourier space: the dispersion i u_xx is integrated exactly through
e^{-i k^2 t} and RK4 handles the nonlinear remainder, whose transform is
truncated by the 2/3 rule.  Negative dt integrates backward.  The linearized
flow Y_t + L Y = 0 uses classical RK4 on the dense matrix.
"""
import enum
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io as dio
from .conserved import energy, mass, momentum
from .gauge import GaugePair, constraint_psi, gauge_nonlinearity
from .grid import Grid, l2_norm
from .linearized import BlockOperator, field_to_vec, vec_to_field
from .solitons import SolitonParams

BLOWUP_AMPLITUDE = 1e8
RK4_IMAG_AXIS = 2.8


class Scheme(str, enum.Enum):
    MOL_RK4 = "MoL_RK4_spectral"
    GAUGE = "SplitStep_gauge"


@dataclass
class EvolutionConfig:
    t_span: tuple = (0.0, 1.0)
    dt: float | None = None
    dealias: float = 2 / 3
    log_every: int = 100
    reimpose_every: int = 100
    snapshot_every: int | None = None
    check_every: int = 50
    scheme: Scheme = Scheme.MOL_RK4

    def resolve(self, g: Grid):
        """Validated (dt, nsteps) hitting t_end exactly."""
        t0, t1 = map(float, self.t_span)
        if not (np.isfinite(t0) and np.isfinite(t1)):
            raise ValueError("t_span must be finite")
        T = t1 - t0
        dt = g.default_dt if self.dt is None else float(self.dt)
        if dt == 0 or not np.isfinite(dt):
            raise ValueError("dt must be finite and nonzero")
        if abs(dt) > 0.5 * g.dx**2 * (1 + 1e-12):
            raise ValueError(f"|dt|={abs(dt):.3g} exceeds the stability bound 0.5 dx^2 "
                             f"= {0.5 * g.dx**2:.3g}")
        if T == 0:
            return 0.0, 0
        n = int(np.ceil(abs(T) / abs(dt) - 1e-9))
        return T / n, n


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    log: dict = field(default_factory=lambda: {"t": [], "E": [], "Q": [], "P": [], "norm": []})
    snapshots: list = field(default_factory=list)   # (t, state)
    status: str = "ok"
    message: str = ""
    t_final: float = 0.0
    final: np.ndarray | None = None
    steps: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def blew_up(self) -> bool:
        return self.status == "blowup"

    def drift(self, key: str) -> float:
        v = np.asarray(self.log[key], dtype=float)
        if v.size == 0:
            return 0.0
        return float(np.max(np.abs(v - v[0])) / max(abs(v[0]), 1e-300))

    def to_dict(self) -> dict:
        return {"status": self.status, "message": self.message, "t_final": self.t_final,
                "steps": self.steps, "log": self.log, "extra": self.extra,
                "snapshot_times": [t for t, _ in self.snapshots]}


def dealias_mask(g: Grid, frac: float = 2 / 3) -> np.ndarray:
    kmax = np.pi / g.dx
    return (np.abs(g.k) <= frac * kmax).astype(float)


class _IFRK4:
    """Lawson RK4 for w_t = i w_xx + N(w) on arrays of shape (..., N)."""

    def __init__(self, g: Grid, rhs, dt: float, dealias: float):
        self.g = g
        self.rhs = rhs
        self.dt = dt
        lam = -1j * g.k**2
        self.E = np.exp(0.5 * dt * lam)
        self.E2 = self.E**2
        self.mask = dealias_mask(g, dealias)

    def nl(self, wh):
        w = np.fft.ifft(wh, axis=-1)
        return self.mask * np.fft.fft(self.rhs(w, wh), axis=-1)

    def step(self, wh):
        dt, E, E2 = self.dt, self.E, self.E2
        a = dt * self.nl(wh)
        b = dt * self.nl(E * (wh + 0.5 * a))
        c = dt * self.nl(E * wh + 0.5 * b)
        d = dt * self.nl(E2 * wh + E * c)
        return E2 * wh + (E2 * a + 2 * E * (b + c) + d) / 6


def _finite(x) -> bool:
    m = np.max(np.abs(x))
    return bool(np.isfinite(m) and m < BLOWUP_AMPLITUDE)


def _u_rhs(p: SolitonParams, g: Grid):
    ik = 1j * g.k.copy()
    ik[g.N // 2] = 0.0
    s = p.s
    b = p.b if p.is_dnls else 0.0

    def rhs(u, uh):
        ux = np.fft.ifft(ik * uh)
        a2 = (u * np.conj(u)).real
        out = -(a2**s) * ux
        if b:
            out = out + 1j * b * a2**2 * u
        return out
    return rhs


def _log_state(traj, t, u, p, g):
    traj.log["t"].append(float(t))
    traj.log["E"].append(energy(u, p, g))
    traj.log["Q"].append(mass(u, g))
    traj.log["P"].append(momentum(u, g))
    traj.log["norm"].append(l2_norm(u, g))


def _run(w0, stepper, cfg, g, n, dt, t0, observe, callback=None, post=None):
    traj = Trajectory()
    wh = np.fft.fft(np.asarray(w0, dtype=complex), axis=-1)
    last_good, t_good = wh.copy(), t0
    observe(traj, t0, w0)
    snap = cfg.snapshot_every
    if snap:
        traj.snapshots.append((t0, np.array(w0)))
    check = max(1, min(cfg.check_every, cfg.log_every))
    t = t0
    for i in range(1, n + 1):
        wh = stepper.step(wh)
        t = t0 + i * dt
        if post is not None:
            wh = post(i, wh, traj, t)
        due = (i % check == 0 or i == n or i % cfg.log_every == 0
               or (snap and i % snap == 0))
        if due:
            if not _finite(wh):
                traj.status = "blowup"
                traj.message = (f"non-finite or amplitude > {BLOWUP_AMPLITUDE:g} between "
                                f"t={t_good:.6g} and t={t:.6g}")
                traj.final = np.fft.ifft(last_good, axis=-1)
                traj.t_final = t_good
                traj.steps = i
                return traj
            last_good, t_good = wh.copy(), t
            w = np.fft.ifft(wh, axis=-1)
            if i % cfg.log_every == 0 or i == n:
                observe(traj, t, w)
            if snap and (i % snap == 0 or i == n):
                traj.snapshots.append((t, w))
            if callback is not None and callback(t, w):
                traj.status = "stopped"
                traj.final, traj.t_final, traj.steps = w, t, i
                return traj
    traj.final = np.fft.ifft(wh, axis=-1)
    traj.t_final = t
    traj.steps = n
    return traj


def evolve_u(u0, p: SolitonParams, g: Grid, cfg: EvolutionConfig, callback=None) -> Trajectory:
    """Integrate the PDE for u from t_span[0] to t_span[1].

    ``callback(t, u)`` is called every ``check_every`` steps and may return
    True to stop early (status "stopped").
    """
    u0 = np.asarray(g.check(u0), dtype=complex)
    dt, n = cfg.resolve(g)
    stepper = _IFRK4(g, _u_rhs(p, g), dt, cfg.dealias)
    obs = lambda traj, t, u: _log_state(traj, t, u, p, g)
    return _run(u0, stepper, cfg, g, n, dt, float(cfg.t_span[0]), obs, callback)


def evolve_gauge(pair0: GaugePair, p: SolitonParams, cfg: EvolutionConfig) -> Trajectory:
    """Integrate the gauge system; final/snapshots hold stacked (phi, psi)."""
    g = pair0.grid
    dt, n = cfg.resolve(g)

    def rhs(w, wh):
        P, Q = gauge_nonlinearity(w[0], w[1], p, g, warn=False)
        return -1j * np.stack([P, Q])

    stepper = _IFRK4(g, rhs, dt, cfg.dealias)
    drift_log = []

    def post(i, wh, traj, t):
        if cfg.reimpose_every and i % cfg.reimpose_every == 0:
            w = np.fft.ifft(wh, axis=-1)
            psi_c = constraint_psi(w[0], p, g)
            drift_log.append((float(t), l2_norm(w[1] - psi_c, g)))
            wh = wh.copy()
            wh[1] = np.fft.fft(psi_c)
        return wh

    def obs(traj, t, w):
        _log_state(traj, t, w[0], p, g)

    traj = _run(pair0.stack(), stepper, cfg, g, n, dt, float(cfg.t_span[0]), obs, post=post)
    traj.extra["constraint_drift"] = drift_log
    return traj


def rk4_stability_bound(A) -> float:
    """Gershgorin bound on the spectral radius of a dense matrix."""
    return float(np.max(np.sum(np.abs(A), axis=1)))


def evolve_linearized(Y0, op: BlockOperator, cfg: EvolutionConfig) -> Trajectory:
    """Classical RK4 for Y_t = -L Y on the dense matrix (Y0 a complex field)."""
    A = -op.matrix
    t0, t1 = map(float, cfg.t_span)
    T = t1 - t0
    bound = rk4_stability_bound(A)
    dt = cfg.dt if cfg.dt is not None else np.sign(T or 1) * 0.9 * RK4_IMAG_AXIS / bound
    if abs(dt) * bound > RK4_IMAG_AXIS:
        raise ValueError(f"|dt|={abs(dt):.3g} violates the RK4 bound {RK4_IMAG_AXIS / bound:.3g}")
    n = int(np.ceil(abs(T) / abs(dt) - 1e-9)) if T else 0
    h = T / n if n else 0.0
    g = op.grid
    y = field_to_vec(np.asarray(Y0, dtype=complex))
    traj = Trajectory()
    traj.log = {"t": [t0], "norm": [l2_norm(vec_to_field(y), g)]}
    snap = cfg.snapshot_every
    if snap:
        traj.snapshots.append((t0, vec_to_field(y)))
    for i in range(1, n + 1):
        k1 = A @ y
        k2 = A @ (y + 0.5 * h * k1)
        k3 = A @ (y + 0.5 * h * k2)
        k4 = A @ (y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t0 + i * h
        if i % cfg.log_every == 0 or i == n:
            if not np.all(np.isfinite(y)):
                traj.status, traj.message = "blowup", "non-finite state"
                break
            traj.log["t"].append(t)
            traj.log["norm"].append(l2_norm(vec_to_field(y), g))
        if snap and (i % snap == 0 or i == n):
            traj.snapshots.append((t, vec_to_field(y)))
    traj.final = vec_to_field(y)
    traj.t_final = t0 + n * h
    traj.steps = n
    return traj


def write_checkpoints(traj: Trajectory, directory, g: Grid, gauge: bool = False) -> Path:
    """One CSV per snapshot (x, Re, Im) plus manifest.json with the logs."""
    directory = Path(directory)
    entries = []
    for i, (t, w) in enumerate(traj.snapshots):
        name = f"checkpoint_{i:05d}.csv"
        if gauge:
            dio.write_field_csv(directory / name, g.x, w[0], w[1], names=["phi", "psi"])
        else:
            dio.write_field_csv(directory / name, g.x, w, names=["u"])
        entries.append({"file": name, "t": t})
    dio.write_json(directory / "manifest.json",
                   {"grid": g.to_dict(), "checkpoints": entries, **traj.to_dict()})
    return directory
