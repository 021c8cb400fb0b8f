import json
import math
from pathlib import Path

import numpy as np
import pytest

from oracles import classical_msd
from qlangevin import __version__
from qlangevin.cli import SCHEMAS, main, read_config, resolve_params
from qlangevin.errors import ValidationError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _csv(path):
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    names = lines[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    return dict(zip(names, data.T))


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


SMALL = {
    "bath": [],
    "response": ["system.stiffness=1", "tgrid.n=11", "wgrid.n=11"],
    "correlate": ["system.stiffness=1", "tgrid.n=4", "tgrid.stop=2"],
    "msd": ["thermal.classical=true", "tgrid.n=4"],
    "spectrum": ["system.stiffness=1", "wgrid.n=5"],
    "free-energy": ["system.stiffness=1", "sweep.n=3"],
    "josephson": ["josephson.R=1000"],
    "junction": ["thermal.T=100", "junction.omega_max=100", "junction.coverage_tol=0.05"],
    "detector": ["system.stiffness=1", "bath.zeta=0.1", "wgrid.n=5"],
    "simulate": ["simulate.n_paths=20", "simulate.steps=50", "simulate.dt=0.01", "simulate.dump=true"],
}


@pytest.mark.parametrize("command", sorted(SMALL))
def test_every_command_runs(tmp_path, command):
    out = tmp_path / "out"
    args = [command, "--out", str(out)]
    for s in SMALL[command]:
        args += ["--set", s]
    assert main(args) == 0
    m = json.loads((out / "manifest.json").read_text())
    assert m["command"] == command and m["version"] == __version__
    # every resolved parameter is recorded, defaults included
    assert set(m["parameters"]) == set(SCHEMAS[command])
    for name, digest in m["outputs"].items():
        assert (out / name).is_file()
    assert {p.name for p in out.iterdir()} == set(m["outputs"]) | {"manifest.json"}


def test_radiate_from_force_file(tmp_path):
    force = _write(tmp_path, "f.csv", "t,f\n" + "\n".join(f"{0.1 * i},{1.0 if i >= 5 else 0.0}" for i in range(20)))
    out = tmp_path / "out"
    assert main(["radiate", "--set", f"radiate.force={force}", "--out", str(out)]) == 0
    m = json.loads((out / "manifest.json").read_text())
    assert m["inputs"]["radiate.force"]["sha256"]
    tr = _csv(out / "trajectory.csv")
    assert np.all(np.isfinite(tr["v"]))


def test_msd_golden_against_closed_form(tmp_path):
    out = tmp_path / "out"
    assert main(["msd", "--config", str(CONFIGS / "msd_classical.ini"), "--out", str(out)]) == 0
    cols = _csv(out / "msd.csv")
    exact = np.array([classical_msd(t, 1.0, 1.0, 1.0) for t in cols["t"]])
    assert list(cols) == ["t", "s"]
    assert np.allclose(cols["s"], exact, rtol=1e-8, atol=1e-14)
    header = (out / "msd.csv").read_text().splitlines()[0]
    assert header == "t,s"
    js = json.loads((out / "msd.json").read_text())
    assert js["columns"]["s"] == [float(v) for v in cols["s"]]


def test_josephson_weak_coupling_sample(tmp_path):
    out = tmp_path / "out"
    assert main(["josephson", "--config", str(CONFIGS / "josephson_weak.ini"), "--out", str(out)]) == 0
    row = _csv(out / "josephson.csv")
    assert row["gamma"][0] / row["omega0"][0] == pytest.approx(1e-3, rel=1e-4)
    assert row["phase_variance"][0] == pytest.approx(row["weak_coupling"][0], rel=5e-3)


def test_unknown_key_is_validation_failure(tmp_path, capsys):
    cfg = _write(tmp_path, "c.ini", "[bath]\nkind = ohmic\nzetta = 2\n")
    out = tmp_path / "out"
    assert main(["bath", "--config", cfg, "--out", str(out)]) == 2
    assert "bath.zetta" in capsys.readouterr().err
    assert not out.exists()


@pytest.mark.parametrize("setting", ["bath.zeta=-1", "bath.zeta=abc", "bath.kind=plasma", "tgrid.n=2.5",
                                     "thermal.classical=maybe", "system.mass=nan"])
def test_bad_values(tmp_path, setting):
    out = tmp_path / "out"
    cmd = "msd"
    assert main([cmd, "--set", setting, "--out", str(out)]) == 2
    assert not out.exists()


def test_parse_failures_exit_two(tmp_path):
    assert main(["nonsense", "--out", str(tmp_path)]) == 2
    assert main(["bath"]) == 2
    assert main(["bath", "--set", "nokeyvalue", "--out", str(tmp_path / "o")]) == 2
    assert main(["bath", "--config", str(tmp_path / "missing.ini"), "--out", str(tmp_path / "o")]) == 2


def test_numeric_error_exit_one(tmp_path, capsys):
    # dt violates the stability bound once the plan is built
    out = tmp_path / "out"
    assert main(["simulate", "--set", "simulate.dt=0.5", "--out", str(out)]) == 1
    assert "DomainError" in capsys.readouterr().err
    assert not out.exists()


def test_set_overrides_config(tmp_path):
    cfg = _write(tmp_path, "c.ini", "[bath]\nzeta = 2\n[wgrid]\nn = 3\n")
    out = tmp_path / "out"
    assert main(["bath", "--config", cfg, "--set", "bath.zeta=5", "--out", str(out)]) == 0
    assert np.allclose(_csv(out / "bath.csv")["re_mu"], 5.0)
    assert json.loads((out / "manifest.json").read_text())["parameters"]["bath.zeta"] == 5.0


def test_resolve_params_defaults_and_types():
    p = resolve_params("simulate", {"simulate.seed": "7", "thermal.classical": "yes"})
    assert p["simulate.seed"] == 7 and p["thermal.classical"] is True
    assert p["bath.kind"] == "ohmic"
    with pytest.raises(ValidationError):
        resolve_params("simulate", {"simulate.seed": "-1"})
    with pytest.raises(ValidationError):
        resolve_params("unknown", {})


def test_read_config_flattens(tmp_path):
    cfg = _write(tmp_path, "c.ini", "[system]\nmass = 2\n[bath]\nOmega = 3\n")
    assert read_config(cfg) == {"system.mass": "2", "bath.Omega": "3"}


@pytest.mark.parametrize("command", ["msd", "simulate", "free-energy"])
def test_replay_is_bitwise(tmp_path, command):
    first = tmp_path / "a"
    args = [command, "--out", str(first)]
    for s in SMALL[command]:
        args += ["--set", s]
    assert main(args) == 0
    second = tmp_path / "b"
    assert main(["replay", str(first / "manifest.json"), "--out", str(second), "--check"]) == 0
    for f in first.iterdir():
        assert f.read_bytes() == (second / f.name).read_bytes()


def test_replay_detects_changed_input(tmp_path):
    force = Path(_write(tmp_path, "f.csv", "t,f\n0,0\n0.1,1\n0.2,1\n"))
    a = tmp_path / "a"
    assert main(["radiate", "--set", f"radiate.force={force}", "--out", str(a)]) == 0
    force.write_text("t,f\n0,0\n0.1,2\n0.2,2\n")
    assert main(["replay", str(a / "manifest.json"), "--out", str(tmp_path / "b")]) == 2


def test_replay_check_mismatch(tmp_path):
    a = tmp_path / "a"
    assert main(["bath", "--out", str(a)]) == 0
    m = json.loads((a / "manifest.json").read_text())
    m["outputs"]["bath.csv"] = "0" * 64
    (a / "manifest.json").write_text(json.dumps(m))
    assert main(["replay", str(a / "manifest.json"), "--out", str(tmp_path / "b"), "--check"]) == 1


def test_simulate_workers_do_not_change_output(tmp_path):
    outs = []
    for w in (1, 2):
        out = tmp_path / f"w{w}"
        args = ["simulate", "--out", str(out), "--workers", str(w)]
        for s in SMALL["simulate"]:
            args += ["--set", s]
        assert main(args) == 0
        outs.append((out / "msd.csv").read_bytes())
    assert outs[0] == outs[1]


def test_manifest_records_units_and_quadrature(tmp_path):
    out = tmp_path / "out"
    assert main(["msd", "--set", "thermal.classical=true", "--set", "tgrid.n=3", "--out", str(out)]) == 0
    m = json.loads((out / "manifest.json").read_text())
    assert m["units"] and m["quadrature"]["rel_tol"] == 1e-10
    assert m["parameters"]["bath.zeta"] == 1.0
    assert m["seed"] is None
    assert math.isfinite(m["parameters"]["thermal.T"])
