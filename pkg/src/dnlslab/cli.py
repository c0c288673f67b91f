"""Command-line driver: ``dnlslab <command> [--config FILE] [--set sec.key=val ...]``.

Config files are INI-style ``key = value`` text with sections

    [soliton]      equation, b | sigma, omega, c, x0, theta0
    [soliton.2]    further solitons (multi-escape, interaction)
    [grid]         L, N
    [evolution]    scheme, dt, t_start, t_end, dealias, log_every, reimpose_every,
                   snapshot_every
    [experiment]   form, a, a_list, n_a, epsilon, t_max, N0, t_list, alpha,
                   v_threshold, noise
    [output]       dir

Exit codes: 0 ok, 2 configuration error, 3 blow-up detected, 4 resonance or
solver failure.  Every run writes manifest.json next to its results.
"""
import argparse
import configparser
import json
import platform
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import io as dio
from .approx_profile import build_W, err_decay_fit, err_residual
from .conserved import GridResolutionError, energy, mass, momentum, stability_report
from .evolution import EvolutionConfig, Scheme, evolve_gauge, evolve_u, write_checkpoints
from .experiments import (CSV_HEADER, MultiConfig, default_a_list, escape_experiment,
                          interaction_decay, multi_escape_experiment)
from .gauge import to_gauge
from .grid import Grid, l2_norm, min_length
from .linearized import Form, ResonanceError, assemble_L, eigen_spectrum
from .solitons import (Equation, InadmissibleParameters, SolitonParams, soliton_profile,
                       stationary_residual, validate_params)

COMMANDS = ("soliton", "classify", "spectrum", "profile", "evolve", "escape",
            "multi-escape", "interaction")
EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_SOLVER = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


class BlowupError(RuntimeError):
    pass


def _floats(s: str):
    return [float(v) for v in s.replace(";", ",").split(",") if v.strip()]


SCHEMA = {
    "soliton": {"equation": str, "b": float, "sigma": float, "omega": float, "c": float,
                "x0": float, "theta0": float},
    "grid": {"L": float, "N": int},
    "evolution": {"scheme": str, "dt": float, "t_start": float, "t_end": float,
                  "dealias": float, "log_every": int, "reimpose_every": int,
                  "snapshot_every": int},
    "experiment": {"form": str, "a": float, "a_list": _floats, "n_a": int,
                   "epsilon": float, "t_max": float, "N0": int, "t_list": _floats,
                   "alpha": float, "v_threshold": float, "noise": float},
    "output": {"dir": str},
}


@dataclass
class RunConfig:
    command: str
    solitons: list
    grid: Grid
    evolution: EvolutionConfig
    experiment: dict
    output: Path
    seed: int
    raw: dict = field(default_factory=dict)

    @property
    def soliton(self) -> SolitonParams:
        return self.solitons[0]


def _section_schema(name: str):
    if name == "soliton" or name.startswith("soliton."):
        return SCHEMA["soliton"]
    return SCHEMA.get(name)


def _convert(section, key, text):
    schema = _section_schema(section)
    conv = schema[key]
    try:
        return conv(text.strip())
    except ValueError as e:
        raise ConfigError(f"[{section}] {key} = {text!r}: malformed value ({e})") from None


def _read_raw(path, overrides) -> dict:
    cp = configparser.ConfigParser(interpolation=None, strict=True,
                                   inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                cp.read_file(fh)
        except (OSError, configparser.Error) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from None
    raw = {s: dict(cp[s]) for s in cp.sections()}
    for item in overrides or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        lhs, val = item.split("=", 1)
        sec, key = lhs.rsplit(".", 1)
        raw.setdefault(sec.strip(), {})[key.strip()] = val
    for sec, kv in raw.items():
        schema = _section_schema(sec)
        if schema is None:
            raise ConfigError(f"unknown section [{sec}]")
        for k in kv:
            if k not in schema:
                raise ConfigError(f"unknown key {k!r} in [{sec}]")
    return raw


def _soliton_from(section: str, kv: dict) -> SolitonParams:
    vals = {k: _convert(section, k, v) for k, v in kv.items()}
    for k in ("equation", "omega", "c"):
        if k not in vals:
            raise ConfigError(f"[{section}] missing required key {k!r}")
    try:
        eq = Equation(vals["equation"])
    except ValueError:
        raise ConfigError(f"[{section}] equation must be one of "
                          f"{[e.value for e in Equation]}") from None
    extra = {k: vals[k] for k in ("x0", "theta0") if k in vals}
    if eq is Equation.DNLS:
        if "sigma" in vals:
            raise ConfigError(f"[{section}] sigma is not a parameter of {eq.value}")
        p = SolitonParams.dnls(vals.get("b", 0.0), vals["omega"], vals["c"], **extra)
    else:
        if "b" in vals:
            raise ConfigError(f"[{section}] b is not a parameter of {eq.value}")
        if "sigma" not in vals:
            raise ConfigError(f"[{section}] missing required key 'sigma'")
        p = SolitonParams.gdnls(vals["sigma"], vals["omega"], vals["c"], **extra)
    adm = validate_params(p)
    if not adm.ok:
        raise ConfigError(f"[{section}] inadmissible soliton parameters: {adm.reason}")
    return p


def parse_config(command: str, path=None, overrides=None, seed: int = 0,
                 output=None) -> RunConfig:
    """Build a validated RunConfig; ``overrides`` (section.key=value) win over the file."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    raw = _read_raw(path, overrides)
    sol_secs = sorted((s for s in raw if s == "soliton" or s.startswith("soliton.")),
                      key=lambda s: (s != "soliton", s))
    if "soliton" not in raw:
        raise ConfigError("missing required section [soliton]")
    solitons = [_soliton_from(s, raw[s]) for s in sol_secs]
    gkv = {k: _convert("grid", k, v) for k, v in raw.get("grid", {}).items()}
    h = min(q.h for q in solitons)
    L = gkv.get("L", float(np.ceil(min_length(h))) if h > 0 else 400.0)
    try:
        grid = Grid(L, gkv.get("N", 1024))
    except ValueError as e:
        raise ConfigError(f"[grid] {e}") from None
    ekv = {k: _convert("evolution", k, v) for k, v in raw.get("evolution", {}).items()}
    try:
        scheme = Scheme(ekv.get("scheme", Scheme.MOL_RK4.value))
    except ValueError:
        raise ConfigError(f"[evolution] scheme must be one of {[s.value for s in Scheme]}") \
            from None
    evo = EvolutionConfig(t_span=(ekv.get("t_start", 0.0), ekv.get("t_end", 1.0)),
                          dt=ekv.get("dt"), dealias=ekv.get("dealias", 2 / 3),
                          log_every=ekv.get("log_every", 100),
                          reimpose_every=ekv.get("reimpose_every", 100),
                          snapshot_every=ekv.get("snapshot_every"), scheme=scheme)
    try:
        evo.resolve(grid)
    except ValueError as e:
        raise ConfigError(f"[evolution] {e}") from None
    xkv = {k: _convert("experiment", k, v) for k, v in raw.get("experiment", {}).items()}
    if "form" in xkv:
        try:
            xkv["form"] = Form(xkv["form"])
        except ValueError:
            raise ConfigError(f"[experiment] form must be one of {[f.value for f in Form]}") \
                from None
    if command in ("multi-escape", "interaction") and len(solitons) < 2:
        raise ConfigError(f"{command} needs at least two [soliton.*] sections")
    out = output or raw.get("output", {}).get("dir")
    out = Path(out) if out else dio.default_output_root() / command
    return RunConfig(command, solitons, grid, evo, xkv, out, int(seed), raw)


# --- commands ----------------------------------------------------------------

def _spectrum(cfg: RunConfig, p=None):
    p = p or cfg.soliton.moved(x0=0.0, theta0=0.0)
    form = cfg.experiment.get("form", Form.PLAIN)
    if form is Form.H:
        raise ConfigError("[experiment] form = H_form has no eigen-spectrum; use L_plain or L_tilde")
    return eigen_spectrum(assemble_L(p, cfg.grid, form))


def _cmd_soliton(cfg, out):
    p, g = cfg.soliton, cfg.grid
    phi = soliton_profile(p, g)
    dio.write_field_csv(out / "profile.csv", g.x, phi, names=["phi"])
    dio.write_json(out / "soliton.json", {
        "params": p.to_dict(), "grid": g.to_dict(), "h": p.h,
        "stationary_residual": stationary_residual(phi, p, g),
        "mass": mass(phi, g), "momentum": momentum(phi, g), "energy": energy(phi, p, g)})
    return ["profile.csv", "soliton.json"]


def _cmd_classify(cfg, out):
    rep = stability_report(cfg.soliton, cfg.grid)
    dio.write_json(out / "stability.json", rep.to_dict())
    return ["stability.json"]


def _cmd_spectrum(cfg, out):
    rep = _spectrum(cfg)
    dio.write_json(out / "spectrum.json", rep.to_dict())
    dio.write_csv(out / "eigenvalues.csv", ["re", "im"],
                  [(z.real, z.imag) for z in rep.eigenvalues])
    return ["spectrum.json", "eigenvalues.csv"]


def _cmd_profile(cfg, out):
    rep = _spectrum(cfg)
    if rep.lam is None:
        raise ResonanceError(rep.message)
    a = cfg.experiment.get("a", 1.0)
    exp = build_W(rep, a, cfg.experiment.get("N0", 1))
    fit = err_decay_fit(exp)
    dio.write_csv(out / "err_residual.csv", ["t", "err_H2"], zip(fit.times, fit.values))
    dio.write_json(out / "profile.json", {"expansion": exp.to_dict(), "rate": fit.rate,
                                          "rate_over_rho": fit.rate / rep.rho,
                                          "prefactor": fit.prefactor})
    return ["err_residual.csv", "profile.json"]


def _cmd_evolve(cfg, out):
    p, g, evo = cfg.soliton, cfg.grid, cfg.evolution
    u0 = soliton_profile(p, g)
    noise = cfg.experiment.get("noise", 0.0)
    if noise:
        rng = np.random.default_rng(cfg.seed)
        bump = np.exp(-(g.x - p.x0) ** 2) * (rng.standard_normal() + 1j * rng.standard_normal())
        u0 = u0 + noise * bump / l2_norm(bump, g)
    if evo.snapshot_every is None:
        evo.snapshot_every = max(1, evo.resolve(g)[1] // 10)
    gauge = evo.scheme is Scheme.GAUGE
    traj = evolve_gauge(to_gauge(u0, p, g), p, evo) if gauge else evolve_u(u0, p, g, evo)
    write_checkpoints(traj, out / "checkpoints", g, gauge=gauge)
    dio.write_json(out / "trajectory.json", {
        **traj.to_dict(), "drift": {k: traj.drift(k) for k in ("E", "Q", "P")}})
    if traj.blew_up:
        raise BlowupError(traj.message)
    return ["checkpoints/manifest.json", "trajectory.json"]


def _cmd_escape(cfg, out):
    rep = _spectrum(cfg)
    if rep.lam is None:
        raise ResonanceError(rep.message)
    x = cfg.experiment
    a_list = x.get("a_list") or default_a_list(x.get("n_a", 7), x.get("a", 1e-2))
    res = escape_experiment(rep.params, rep, a_list, x.get("epsilon"),
                            EvolutionConfig(dt=cfg.evolution.dt), x.get("t_max"))
    dio.write_csv(out / "escape.csv", CSV_HEADER, res.csv_rows())
    files = ["escape.csv"]
    for i, r in enumerate(res.records):
        name = f"run_{i:02d}.json"
        dio.write_json(out / name, r.to_dict())
        files.append(name)
    dio.write_json(out / "escape.json", {k: v for k, v in res.to_dict().items()
                                         if k != "records"})
    if any(r.status == "blowup" for r in res.records):
        raise BlowupError("blow-up during an escape run")
    return files + ["escape.json"]


def _multi_config(cfg, rep=None):
    x = cfg.experiment
    alpha = x.get("alpha")
    if alpha is None and rep is not None and rep.alpha_fit is not None:
        alpha = min(rep.alpha_fit, 0.5 * rep.params.h)
    return MultiConfig(cfg.solitons, a=x.get("a", 1e-3), epsilon_target=x.get("epsilon"),
                       alpha=alpha, v_threshold=x.get("v_threshold", 0.0))


def _cmd_multi_escape(cfg, out):
    rep = _spectrum(cfg)
    if rep.lam is None:
        raise ResonanceError(rep.message)
    mc = _multi_config(cfg, rep)
    try:
        mc.validate()
    except ValueError as e:
        raise ConfigError(str(e)) from None
    r = multi_escape_experiment(mc, rep, EvolutionConfig(dt=cfg.evolution.dt),
                                cfg.experiment.get("t_max"))
    dio.write_json(out / "multi_escape.json", {"config": mc.to_dict(), **r.to_dict()})
    dio.write_csv(out / "multi_escape.csv", ["t", "distance", "window_unperturbed"],
                  zip(r.times, r.distances, r.window_unperturbed))
    if r.status == "blowup":
        raise BlowupError("blow-up during the multi-soliton run")
    return ["multi_escape.json", "multi_escape.csv"]


def _cmd_interaction(cfg, out):
    mc = _multi_config(cfg)
    fit = interaction_decay(mc, cfg.experiment.get("t_list"), cfg.grid)
    dio.write_json(out / "interaction.json", {"config": mc.to_dict(), **fit.to_dict(),
                                              "passes": fit.passes})
    return ["interaction.json"]


HANDLERS = {"soliton": _cmd_soliton, "classify": _cmd_classify, "spectrum": _cmd_spectrum,
            "profile": _cmd_profile, "evolve": _cmd_evolve, "escape": _cmd_escape,
            "multi-escape": _cmd_multi_escape, "interaction": _cmd_interaction}


def _versions() -> dict:
    return {"dnlslab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def run(cfg: RunConfig) -> int:
    """Execute one command; always leaves manifest.json in the output directory."""
    out = cfg.output
    manifest = {"command": cfg.command, "inputs": cfg.raw, "seed": cfg.seed,
                "versions": _versions(),
                "started": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())}
    t0 = time.perf_counter()
    code, files, err = EXIT_OK, [], None
    try:
        np.random.seed(cfg.seed)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            files = HANDLERS[cfg.command](cfg, out)
        manifest["warnings"] = sorted({f"{w.category.__name__}: {w.message}" for w in caught})
    except (ConfigError, InadmissibleParameters) as e:
        code, err = EXIT_CONFIG, e
    except BlowupError as e:
        code, err = EXIT_BLOWUP, e
    except (ResonanceError, GridResolutionError, np.linalg.LinAlgError) as e:
        code, err = EXIT_SOLVER, e
    manifest["wall_time_s"] = time.perf_counter() - t0
    manifest["outputs"] = files
    manifest["exit_code"] = code
    manifest["error"] = None if err is None else f"{type(err).__name__}: {err}"
    dio.write_json(out / "manifest.json", manifest)
    if err is not None:
        print(f"dnlslab {cfg.command}: {manifest['error']}", file=sys.stderr)
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dnlslab", description=__doc__.split("\n")[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", "-c", help="INI-style config file")
    ap.add_argument("--set", "-s", action="append", default=[], metavar="SEC.KEY=VALUE",
                    help="override a config value (repeatable)")
    ap.add_argument("--out", "-o", help="output directory")
    ap.add_argument("--seed", type=int, default=0)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.command, args.config, args.set, args.seed, args.out)
    except (ConfigError, InadmissibleParameters) as e:
        print(f"dnlslab {args.command}: configuration error: {e}", file=sys.stderr)
        out = Path(args.out) if args.out else dio.default_output_root() / args.command
        dio.write_json(out / "manifest.json", {
            "command": args.command, "exit_code": EXIT_CONFIG, "seed": args.seed,
            "error": f"{type(e).__name__}: {e}", "versions": _versions(),
            "outputs": []})
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
