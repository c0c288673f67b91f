import csv
import json
import subprocess
import sys

import pytest

from dnlslab.cli import (EXIT_BLOWUP, EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, ConfigError, main,
                         parse_config)

MAIN_CFG = """\
[soliton]
equation = dnls_b
b = 0.5
omega = 1.0
c = 1.5

[grid]
L = 80
N = 512
"""


@pytest.fixture
def cfg_file(tmp_path):
    f = tmp_path / "run.ini"
    f.write_text(MAIN_CFG)
    return f


def read_manifest(d):
    return json.loads((d / "manifest.json").read_text())


def test_parse_minimal(cfg_file):
    rc = parse_config("soliton", cfg_file)
    assert rc.soliton.b == 0.5 and rc.soliton.c == 1.5
    assert rc.grid.L == 80 and rc.grid.N == 512
    assert rc.evolution.t_span == (0.0, 1.0)


def test_default_grid_from_decay_rate(tmp_path):
    f = tmp_path / "a.ini"
    f.write_text("[soliton]\nequation = dnls_b\nomega = 1\nc = 1\n")
    rc = parse_config("soliton", f)
    assert rc.grid.N == 1024 and rc.grid.L >= 1.0


@pytest.mark.parametrize("override,match", [
    ("soliton.c=3", "inadmissible"),
    ("soliton.colour=1", "unknown key"),
    ("physics.x=1", "unknown section"),
    ("grid.N=1000", "power of two"),
    ("evolution.dt=1.0", "stability"),
    ("soliton.omega=abc", "malformed"),
    ("soliton.sigma=2", "sigma"),
    ("evolution.scheme=Euler", "scheme"),
])
def test_rejections(cfg_file, override, match):
    with pytest.raises(ConfigError, match=match):
        parse_config("soliton", cfg_file, [override])


def test_inadmissible_message_cites_range(cfg_file, tmp_path, capsys):
    code = main(["soliton", "-c", str(cfg_file), "-s", "soliton.c=3", "-o", str(tmp_path / "o")])
    assert code == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "-2 sqrt(omega) < c <= 2 sqrt(omega)" in err
    m = read_manifest(tmp_path / "o")
    assert m["exit_code"] == EXIT_CONFIG and m["error"]


def test_set_propagates(cfg_file):
    rc = parse_config("evolve", cfg_file, ["evolution.dt=0.001", "evolution.t_end=0.5"])
    assert rc.evolution.dt == 0.001 and rc.evolution.t_span == (0.0, 0.5)


def test_soliton_command(cfg_file, tmp_path):
    out = tmp_path / "s"
    assert main(["soliton", "-c", str(cfg_file), "-s", "grid.N=2048", "-o", str(out)]) == EXIT_OK
    info = json.loads((out / "soliton.json").read_text())
    assert info["stationary_residual"] < 1e-8
    m = read_manifest(out)
    assert m["exit_code"] == 0 and set(m["outputs"]) == {"profile.csv", "soliton.json"}
    assert {"numpy", "scipy", "dnlslab"} <= set(m["versions"])


def test_classify_command(cfg_file, tmp_path):
    out = tmp_path / "c"
    assert main(["classify", "-c", str(cfg_file), "-s", "grid.N=1024", "-o", str(out)]) == 0
    rep = json.loads((out / "stability.json").read_text())
    assert rep["verdict"] == "Unstable"


def test_spectrum_and_resonance_exit(cfg_file, tmp_path):
    out = tmp_path / "sp"
    assert main(["spectrum", "-c", str(cfg_file), "-o", str(out)]) == 0
    rep = json.loads((out / "spectrum.json").read_text())
    assert rep["a1_holds"] and rep["lambda"][0] == pytest.approx(0.7472, abs=1e-3)
    stable = ["-s", "soliton.b=0", "-s", "soliton.c=1", "-s", "grid.L=60"]
    code = main(["escape", "-c", str(cfg_file), *stable, "-o", str(tmp_path / "st")])
    assert code == EXIT_SOLVER
    assert "ResonanceError" in read_manifest(tmp_path / "st")["error"]


def test_escape_command_csv(cfg_file, tmp_path):
    out = tmp_path / "e"
    args = ["escape", "-c", str(cfg_file), "-s", "experiment.a_list=0.01,0.005", "-o", str(out)]
    assert main(args) == 0
    with open(out / "escape.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["a", "t_exit", "initial_distance", "exit_distance", "fitted_rate"]
    assert len(rows) == 2
    t = [float(r["t_exit"]) for r in rows]
    assert t[1] > t[0] > 0
    assert (out / "run_00.json").exists() and (out / "escape.json").exists()


def test_evolve_deterministic(cfg_file, tmp_path):
    args = ["evolve", "-c", str(cfg_file), "-s", "evolution.t_end=0.05",
            "-s", "experiment.noise=1e-3", "--seed", "7"]
    assert main([*args, "-o", str(tmp_path / "a")]) == 0
    assert main([*args, "-o", str(tmp_path / "b")]) == 0
    for name in ["trajectory.json", "checkpoints/manifest.json"]:
        assert (tmp_path / "a" / name).read_text() == (tmp_path / "b" / name).read_text()
    ma, mb = read_manifest(tmp_path / "a"), read_manifest(tmp_path / "b")
    for k in ("started", "wall_time_s"):
        ma.pop(k), mb.pop(k)
    assert ma == mb
    assert main([*args[:-1], "8", "-o", str(tmp_path / "c")]) == 0
    assert ((tmp_path / "c" / "trajectory.json").read_text()
            != (tmp_path / "a" / "trajectory.json").read_text())


def test_blowup_exit(cfg_file, tmp_path, monkeypatch):
    import dnlslab.evolution as ev
    monkeypatch.setattr(ev, "BLOWUP_AMPLITUDE", 0.1)
    out = tmp_path / "b"
    code = main(["evolve", "-c", str(cfg_file), "-s", "evolution.t_end=0.05", "-o", str(out)])
    assert code == EXIT_BLOWUP
    assert read_manifest(out)["exit_code"] == EXIT_BLOWUP


def test_output_env_var(cfg_file, tmp_path, monkeypatch):
    monkeypatch.setenv("DNLSLAB_OUTPUT", str(tmp_path / "root"))
    assert main(["soliton", "-c", str(cfg_file)]) == 0
    assert (tmp_path / "root" / "soliton" / "manifest.json").exists()
    assert main(["soliton", "-c", str(cfg_file), "-s", "soliton.c=9"]) == EXIT_CONFIG
    assert read_manifest(tmp_path / "root" / "soliton")["exit_code"] == EXIT_CONFIG


def test_interaction_command(tmp_path):
    f = tmp_path / "m.ini"
    f.write_text(MAIN_CFG.replace("N = 512", "N = 2048").replace("L = 80", "L = 140")
                 + "\n[soliton.2]\nequation = dnls_b\nb = 0.5\nomega = 2.25\nc = -2.5\n")
    out = tmp_path / "i"
    assert main(["interaction", "-c", str(f), "-o", str(out)]) == 0
    res = json.loads((out / "interaction.json").read_text())
    assert res["passes"] and res["config"]["v_star"] == pytest.approx(4 / 9)


def test_console_script_entry(cfg_file, tmp_path):
    r = subprocess.run([sys.executable, "-m", "dnlslab.cli", "soliton", "-c", str(cfg_file),
                        "-o", str(tmp_path / "x")], capture_output=True, text=True)
    assert r.returncode == 0
    r = subprocess.run([sys.executable, "-m", "dnlslab.cli", "nope"], capture_output=True)
    assert r.returncode == 2


def test_readme_config_block(tmp_path):
    import re
    from pathlib import Path
    text = (Path(__file__).parents[1] / "README.md").read_text()
    block = re.search(r"```ini\n(.*?)```", text, re.S).group(1)
    f = tmp_path / "readme.ini"
    f.write_text(block)
    rc = parse_config("evolve", f)
    assert rc.soliton.b == 0.5 and len(rc.solitons) == 2
    assert rc.evolution.dt == 0.001 and rc.experiment["a_list"] == [0.01, 0.005]
    assert str(rc.output) == "runs/main"


def test_hessian_form_rejected_for_spectrum(cfg_file, tmp_path):
    out = tmp_path / "h"
    code = main(["spectrum", "-c", str(cfg_file), "-s", "experiment.form=H_form", "-o", str(out)])
    assert code == EXIT_CONFIG and "H_form" in read_manifest(out)["error"]
