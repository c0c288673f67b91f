"""Instability experiments: modulation distance, escape runs, multi-soliton runs.

The modulation distance is inf_{y, theta} ||u - e^{i theta} phi(. - y)||.  For a
fixed shift the optimal phase is arg <u, phi(. - y)>, so the problem reduces to
maximizing |C(y)| with C(y) = int u conj(phi(x - y)) dx.  C is a trigonometric
sum, evaluated at all grid shifts by one FFT and refined by root finding on
d|C|^2/dy.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .approx_profile import _f
from .evolution import EvolutionConfig, Trajectory, evolve_u
from .grid import Grid, deriv, l2_norm, sobolev_norm, translate, wrap
from .linearized import SpectrumReport
from .solitons import SolitonParams, soliton_profile, speed_gap, traveling_soliton


class SeparationError(RuntimeError):
    """Solitons closer than the configured separation."""


class OverlapWarning(UserWarning):
    """Fit windows overlap; a joint fit is used instead of the greedy one."""


@dataclass(frozen=True)
class ModulationFit:
    y: float
    theta: float
    distance: float
    trivial: float                       # ||u - phi|| (or its ball version)
    restricted_ball: tuple | None = None  # (center, M)

    def to_dict(self) -> dict:
        return {"y": self.y, "theta": self.theta, "distance": self.distance,
                "trivial": self.trivial, "restricted_ball": self.restricted_ball}


def _base(p: SolitonParams) -> SolitonParams:
    return p.moved(x0=0.0, theta0=0.0)


class _Corr:
    """C(y) = int a(x) conj(b(x - y)) dx as a trigonometric sum in y."""

    def __init__(self, a, b, g: Grid):
        self.g = g
        w = np.fft.fft(a) * np.conj(np.fft.fft(b))
        w[g.N // 2] = 0.0
        self.w = w * g.dx / g.N
        self.ik = 1j * g.k

    def grid_values(self):
        # value at shift j dx is entry j
        return np.fft.ifft(self.w) * self.g.N

    def __call__(self, y):
        return np.sum(self.w * np.exp(self.ik * y))

    def d(self, y):
        return np.sum(self.ik * self.w * np.exp(self.ik * y))


def _refine_max(C: _Corr, y0: float, dx: float) -> float:
    """Sub-grid maximizer of |C(y)|^2 near the grid maximizer y0."""
    dF = lambda y: 2 * np.real(np.conj(C(y)) * C.d(y))
    lo, hi = y0 - dx, y0 + dx
    flo, fhi = dF(lo), dF(hi)
    if flo > 0 > fhi:
        return brentq(dF, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps)
    # fall back to a bounded scalar search if the bracket is not clean
    res = minimize_scalar(lambda y: -abs(C(y)) ** 2, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    return float(res.x)


def modulation_distance(u, p: SolitonParams, g: Grid, restricted=None) -> ModulationFit:
    """Best (y, theta) fit of u by the soliton family of p.

    ``restricted=(center, M)`` measures the distance on the ball |x - center| < M
    only (the ball version of the fit).
    """
    u = np.asarray(g.check(u), dtype=complex)
    phi = soliton_profile(_base(p), g)
    if restricted is None:
        C = _Corr(u, phi, g)
        vals = C.grid_values()
        j = int(np.argmax(np.abs(vals)))
        if np.abs(vals[j]) == 0:
            d0 = l2_norm(u - phi, g)
            return ModulationFit(0.0, 0.0, l2_norm(phi, g) if l2_norm(u, g) == 0 else d0, d0)
        y = _refine_max(C, float(wrap(j * g.dx, g.L)), g.dx)
        theta = float(np.angle(C(y)))
        member = soliton_profile(_base(p).moved(x0=float(wrap(y, g.L)), theta0=theta), g)
        dist = l2_norm(u - member, g)
        trivial = l2_norm(u - phi, g)
        return ModulationFit(float(wrap(y, g.L)), theta % (2 * np.pi), dist, trivial)
    center, M = restricted
    chi = (np.abs(wrap(g.x - center, g.L)) < M).astype(float)
    uc = u * chi
    C = _Corr(uc, phi, g)
    Nphi = _Corr(chi, np.abs(phi) ** 2, g)
    nu = np.sum(np.abs(uc) ** 2) * g.dx

    def d2(y):
        return nu + np.real(Nphi(y)) - 2 * abs(C(y))

    grid_d2 = nu + np.real(Nphi.grid_values()) - 2 * np.abs(C.grid_values())
    j = int(np.argmin(grid_d2))
    y0 = float(wrap(j * g.dx, g.L))
    res = minimize_scalar(d2, bounds=(y0 - g.dx, y0 + g.dx), method="bounded",
                          options={"xatol": 1e-12})
    y = float(res.x) if res.fun <= grid_d2[j] else y0
    theta = float(np.angle(C(y)))
    member = soliton_profile(_base(p).moved(x0=float(wrap(y, g.L)), theta0=theta), g)
    dist = float(np.sqrt(np.sum(np.abs((u - member) * chi) ** 2) * g.dx))
    trivial = float(np.sqrt(np.sum(np.abs((u - phi) * chi) ** 2) * g.dx))
    return ModulationFit(float(wrap(y, g.L)), theta % (2 * np.pi), dist, trivial,
                         (float(center), float(M)))


@dataclass
class MultiFit:
    fits: list
    distance: float
    window_distances: list
    joint: bool = False

    def to_dict(self) -> dict:
        return {"fits": [f.to_dict() for f in self.fits], "distance": self.distance,
                "window_distances": self.window_distances, "joint": self.joint}


def _window(p: SolitonParams) -> float:
    return 8.0 / p.h


def multi_modulation_distance(u, params, centers, g: Grid, sweeps: int = 4) -> MultiFit:
    """Fit each soliton within |x - center_j| < 8/h_j, then measure the total residual.

    With overlapping windows, a joint coordinate descent on the full box
    replaces the greedy window fits.
    """
    u = np.asarray(g.check(u), dtype=complex)
    params = list(params)
    centers = [float(c) for c in centers]
    K = len(params)
    M = [_window(q) for q in params]
    overlap = any(abs(wrap(centers[i] - centers[j], g.L)) < M[i] + M[j]
                  for i in range(K) for j in range(i + 1, K))
    members = [np.zeros(g.N, complex)] * K
    fits = []
    if not overlap:
        for q, c0, m in zip(params, centers, M):
            f = modulation_distance(u, q, g, restricted=(c0, m))
            fits.append(f)
        members = [soliton_profile(_base(q).moved(x0=f.y, theta0=f.theta), g)
                   for q, f in zip(params, fits)]
    else:
        warnings.warn("fit windows overlap; using joint coordinate descent", OverlapWarning,
                      stacklevel=2)
        for _ in range(sweeps):
            fits = []
            for j, q in enumerate(params):
                rest = u - sum(members[k] for k in range(K) if k != j)
                f = modulation_distance(rest, q, g)
                fits.append(f)
                members[j] = soliton_profile(_base(q).moved(x0=f.y, theta0=f.theta), g)
    total = l2_norm(u - sum(members), g)
    wins = []
    for q, f, c0, m in zip(params, fits, centers, M):
        chi = np.abs(wrap(g.x - c0, g.L)) < m
        others = sum(members[k] for k in range(K) if fits[k] is not f)
        r = (u - others - soliton_profile(_base(q).moved(x0=f.y, theta0=f.theta), g)) * chi
        wins.append(float(np.sqrt(np.sum(np.abs(r) ** 2) * g.dx)))
    return MultiFit(fits, total, wins, overlap)


# --- single-soliton escape -------------------------------------------------------

@dataclass
class EscapeRecord:
    a: float
    initial_distance: float
    t_exit: float | None
    exit_distance: float
    fitted_rate: float | None
    h2_norm_perturbation: float
    status: str = "escaped"
    times: list = field(default_factory=list)
    distances: list = field(default_factory=list)
    deviations: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class EscapeResult:
    records: list
    epsilon: float
    rho: float
    t_max: float
    spacing_slope: float | None
    spacing_target: float
    monotone_initial: bool
    all_escaped: bool

    @property
    def spacing_error(self) -> float | None:
        if self.spacing_slope is None:
            return None
        return abs(self.spacing_slope - self.spacing_target) / self.spacing_target

    def to_dict(self) -> dict:
        return {"records": [r.to_dict() for r in self.records], "epsilon": self.epsilon,
                "rho": self.rho, "t_max": self.t_max, "spacing_slope": self.spacing_slope,
                "spacing_target": self.spacing_target, "spacing_error": self.spacing_error,
                "monotone_initial": self.monotone_initial, "all_escaped": self.all_escaped}

    def csv_rows(self):
        return [(r.a, r.t_exit if r.t_exit is not None else float("nan"), r.initial_distance,
                 r.exit_distance, r.fitted_rate if r.fitted_rate is not None else float("nan"))
                for r in self.records]


CSV_HEADER = ["a", "t_exit", "initial_distance", "exit_distance", "fitted_rate"]


def default_a_list(n: int = 7, a0: float = 1e-2):
    return [a0 * 2.0**-k for k in range(n)]


def default_epsilon(p: SolitonParams, g: Grid) -> float:
    return 1e-2 * l2_norm(soliton_profile(_base(p), g), g)


def growth_rate(times, deviations, upper=None) -> float | None:
    """Least-squares rate of ||u - R|| ~ a e^{rate t} over samples below ``upper``."""
    t = np.asarray(times, float)
    d = np.asarray(deviations, float)
    ok = d > 0
    if upper is not None:
        ok &= d <= upper
    if ok.sum() < 3:
        return None
    return float(np.polyfit(t[ok], np.log(d[ok]), 1)[0])


def _escape_run(u0, p, g, epsilon, t_max, cfg, fit_distance, reference, check_dt=0.02,
                stop=True):
    """Evolve u0; sample the fit distance and ||u - reference(t)|| every check_dt."""
    dt, _ = EvolutionConfig(t_span=(0.0, t_max), dt=cfg.dt).resolve(g)
    every = max(1, int(round(check_dt / abs(dt))))
    times, dists, devs = [0.0], [fit_distance(u0)], [l2_norm(u0 - reference(0.0), g)]

    def cb(t, u):
        times.append(float(t))
        dists.append(fit_distance(u))
        devs.append(l2_norm(u - reference(t), g))
        return stop and dists[-1] >= epsilon

    run_cfg = EvolutionConfig(t_span=(0.0, t_max), dt=cfg.dt, dealias=cfg.dealias,
                              log_every=10**9, check_every=every)
    traj = evolve_u(u0, p, g, run_cfg, callback=cb)
    return traj, times, dists, devs


def _exit_time(times, dists, eps):
    for i in range(1, len(dists)):
        if dists[i] >= eps:
            d0, d1 = dists[i - 1], dists[i]
            t0, t1 = times[i - 1], times[i]
            if d0 > 0 and d1 > d0:
                # log-linear interpolation (the distance grows exponentially)
                s = (np.log(eps) - np.log(d0)) / (np.log(d1) - np.log(d0))
                return t0 + s * (t1 - t0)
            return t1
    return None


def escape_experiment(p: SolitonParams, report: SpectrumReport, a_list=None,
                      epsilon: float | None = None, cfg: EvolutionConfig | None = None,
                      t_max: float | None = None) -> EscapeResult:
    """Perturb R_1(0) by a Z_grow, evolve until the modulation distance reaches epsilon."""
    if report.lam is None or report.rho <= 0:
        raise ValueError("escape_experiment needs rho > 0 in the spectrum report")
    g = report.grid
    base = _base(p)
    rho = report.rho
    a_list = default_a_list() if a_list is None else list(a_list)
    epsilon = default_epsilon(p, g) if epsilon is None else float(epsilon)
    t_max = 12.0 / rho if t_max is None else float(t_max)
    cfg = cfg or EvolutionConfig()
    phi = soliton_profile(base, g)
    Zg = report.growing_field
    h2 = sobolev_norm(Zg, g, 2)
    ref = lambda t: traveling_soliton(base, g, t)
    fitd = lambda u: modulation_distance(u, base, g).distance
    records = []
    for a in a_list:
        u0 = phi + a * Zg
        traj, ts, ds, devs = _escape_run(u0, base, g, epsilon, t_max, cfg, fitd, ref,
                                         stop=a != 0)
        te = _exit_time(ts, ds, epsilon) if a != 0 else None
        status = "escaped" if te is not None else "epsilon not reached"
        if traj.blew_up:
            status = "blowup"
        rate = growth_rate(ts, devs, upper=0.5 * epsilon) if a != 0 else None
        records.append(EscapeRecord(a, ds[0], te, max(ds), rate, a * h2, status, ts, ds, devs))
    esc = [r for r in records if r.t_exit is not None and r.a > 0]
    slope = None
    if len(esc) >= 2:
        n = -np.log2(np.array([r.a for r in esc]) / esc[0].a)
        slope = float(np.polyfit(n, [r.t_exit for r in esc], 1)[0])
    pos = [r for r in records if r.a > 0]
    order = sorted(pos, key=lambda r: -r.a)
    mono = all(order[i + 1].initial_distance < order[i].initial_distance
               for i in range(len(order) - 1))
    all_esc = all(r.exit_distance >= epsilon for r in pos)
    return EscapeResult(records, epsilon, rho, t_max, slope, np.log(2) / rho, mono, all_esc)


# --- multi-soliton runs -----------------------------------------------------------

@dataclass
class MultiConfig:
    params: list
    a: float = 1e-3
    epsilon_target: float | None = None
    alpha: float | None = None
    v_threshold: float = 0.0

    def __post_init__(self):
        self.params = list(self.params)
        if not self.params:
            raise ValueError("MultiConfig needs at least one soliton")

    @property
    def v_star(self) -> float:
        return speed_gap(self.params)

    @property
    def h_star(self) -> float:
        h = min(q.h for q in self.params)
        return h if self.alpha is None else min(h, 2 * self.alpha)

    def validate(self):
        if len(self.params) > 1 and not self.v_star > 0:
            raise ValueError("v_star must be positive (distinct speeds)")
        if not self.h_star > 0:
            raise ValueError("h_star must be positive")
        if len(self.params) > 1 and self.v_star <= self.v_threshold:
            raise ValueError(f"v_star={self.v_star:.4g} does not exceed the separation "
                             f"threshold {self.v_threshold:.4g}")
        return self

    def to_dict(self) -> dict:
        return {"params": [q.to_dict() for q in self.params], "a": self.a,
                "epsilon_target": self.epsilon_target, "alpha": self.alpha,
                "v_star": self.v_star, "h_star": self.h_star,
                "v_threshold": self.v_threshold}


def _centres(params, t, L):
    return [float(wrap(q.x0 + q.c * t, L)) for q in params]


def _min_gap(params, t, L):
    cs = _centres(params, t, L)
    return min((abs(wrap(a - b, L)) for i, a in enumerate(cs) for b in cs[i + 1:]),
               default=np.inf)


@dataclass
class MultiEscapeRecord:
    a: float
    status: str
    initial_distance: float
    t_exit: float | None
    exit_distance: float
    max_window_unperturbed: float
    v_star: float
    h_star: float
    times: list = field(default_factory=list)
    distances: list = field(default_factory=list)
    window_unperturbed: list = field(default_factory=list)
    message: str = ""

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def multi_escape_experiment(mc: MultiConfig, report: SpectrumReport,
                            cfg: EvolutionConfig | None = None, t_max: float | None = None,
                            min_separation: float | None = None,
                            check_dt: float = 0.02) -> MultiEscapeRecord:
    """Perturb soliton 1 of a multi-profile by a Z_grow and track the multi fit.

    Soliton 1 of ``mc.params`` must match the parameter point of ``report``;
    its x0 and theta0 place the perturbation.
    """
    mc.validate()
    if report.lam is None or report.rho <= 0:
        raise ValueError("multi_escape_experiment needs rho > 0 in the spectrum report")
    g = report.grid
    params = mc.params
    p1 = params[0]
    q = report.params
    if not (np.isclose(p1.omega, q.omega) and np.isclose(p1.c, q.c)
            and p1.equation == q.equation):
        raise ValueError("soliton 1 does not match the spectrum report's parameter point")
    rho = report.rho
    t_max = 12.0 / rho if t_max is None else float(t_max)
    eps = mc.epsilon_target or default_epsilon(p1, g)
    min_sep = 8.0 / mc.h_star if min_separation is None else min_separation
    if _min_gap(params, 0.0, g.L) < min_sep:
        raise SeparationError(f"initial separation below {min_sep:.4g}")
    pert = np.exp(1j * p1.theta0) * translate(report.growing_field, g, p1.x0)
    w0 = sum(soliton_profile(qq, g) for qq in params) + mc.a * pert
    cfg = cfg or EvolutionConfig()
    dt, _ = EvolutionConfig(t_span=(0.0, t_max), dt=cfg.dt).resolve(g)
    every = max(1, int(round(check_dt / abs(dt))))
    times, dists, wins = [], [], []
    state = {"status": "ok", "message": ""}

    def measure(t, u):
        fit = multi_modulation_distance(u, params, _centres(params, t, g.L), g)
        times.append(float(t))
        dists.append(fit.distance)
        wins.append(max(fit.window_distances[1:], default=0.0))
        return fit

    measure(0.0, w0)

    def cb(t, u):
        if _min_gap(params, t, g.L) < min_sep:
            state["status"], state["message"] = "separation violated", f"t={t:.4g}"
            return True
        measure(t, u)
        return mc.a != 0 and dists[-1] >= eps

    run_cfg = EvolutionConfig(t_span=(0.0, t_max), dt=cfg.dt, dealias=cfg.dealias,
                              log_every=10**9, check_every=every)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OverlapWarning)
        traj = evolve_u(w0, p1, g, run_cfg, callback=cb)
    status = state["status"]
    if traj.blew_up:
        status = "blowup"
    te = _exit_time(times, dists, eps) if mc.a != 0 else None
    if status == "ok":
        status = "escaped" if te is not None else "epsilon not reached"
    return MultiEscapeRecord(mc.a, status, dists[0], te, max(dists), max(wins), mc.v_star,
                             mc.h_star, times, dists, wins, state["message"])


# --- interaction decay -------------------------------------------------------------

@dataclass
class InteractionFit:
    rate: float
    target: float
    times: np.ndarray
    cross: np.ndarray
    pairwise: np.ndarray
    pairwise_bound_ok: bool
    flagged: bool
    message: str = ""

    @property
    def passes(self) -> bool:
        return (not self.flagged) and self.rate >= 0.9 * self.target

    def to_dict(self) -> dict:
        return {"rate": self.rate, "target": self.target, "times": self.times,
                "cross": self.cross, "pairwise": self.pairwise,
                "pairwise_bound_ok": self.pairwise_bound_ok, "flagged": self.flagged,
                "message": self.message}


def _f_field(u, p, g):
    return _f(u, deriv(u, g), p)


def cross_term(params, g: Grid, t: float, first=None) -> np.ndarray:
    """f(U + sum_{j>=2} R_j) - f(U) - sum_{j>=2} f(R_j), U = R_1 unless given."""
    p1 = params[0]
    U = traveling_soliton(p1, g, t) if first is None else first
    Rs = [traveling_soliton(q, g, t) for q in params[1:]]
    out = _f_field(U + sum(Rs), p1, g) - _f_field(U, p1, g)
    for R in Rs:
        out = out - _f_field(R, p1, g)
    return out


def interaction_decay(mc: MultiConfig, t_list=None, g: Grid | None = None,
                      floor: float = 1e-12) -> InteractionFit:
    """Exponential rate of ||cross term||_{L2} in |t|, solitons crossing at t = 0.

    Samples below ``floor`` (relative to the t = 0 value) are excluded from the
    fit.  Equal speeds are flagged: there is no separation to decay with.
    """
    params = [q.moved(x0=0.0) for q in mc.params]
    if g is None:
        g = Grid(140.0, 2048)
    t_list = np.linspace(0.5, 4.0, 8) if t_list is None else np.asarray(t_list, float)
    target = mc.h_star * mc.v_star if len(params) > 1 else 0.0
    if len(params) == 1:
        z = np.zeros_like(t_list)
        return InteractionFit(np.inf, 0.0, t_list, z, z, True, False, "single soliton")
    if not mc.v_star > 0:
        z = np.full_like(t_list, np.nan)
        return InteractionFit(0.0, 0.0, t_list, z, z, False, True,
                              "identical speeds: no separation, rate is zero")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        scale = l2_norm(cross_term(params, g, 0.0), g)
        cross = np.array([l2_norm(cross_term(params, g, t), g) for t in t_list])
        pair = []
        for t in t_list:
            Rs = [traveling_soliton(q, g, t) for q in params]
            pair.append(max(l2_norm(Rs[i] * Rs[j], g) for i in range(len(Rs))
                            for j in range(i + 1, len(Rs))))
    pair = np.array(pair)
    ok = cross > floor * scale
    flagged = ok.sum() < 3
    rate = 0.0
    if not flagged:
        rate = float(-np.polyfit(np.abs(t_list[ok]), np.log(cross[ok]), 1)[0])
    # the pairwise bound holds with the constant fixed at the smallest sampled time
    C = pair[0] * np.exp(target * abs(t_list[0]))
    bound_ok = bool(np.all(pair <= C * np.exp(-target * np.abs(t_list)) * (1 + 1e-9)))
    return InteractionFit(rate, target, t_list, cross, pair, bound_ok, flagged,
                          "too few samples above the noise floor" if flagged else "")
