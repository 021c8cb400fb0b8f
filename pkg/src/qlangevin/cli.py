"""Command-line entry point: ``qle <command> [--config FILE] [--set key=value ...] --out DIR``.

Configuration is an INI file whose ``[section]`` / ``key`` pairs become flat
``section.key`` parameters; ``--set`` overrides them. Every run writes CSV
results with a commented header, JSON mirrors and a ``manifest.json`` that
``qle replay`` can re-run. Exit status: 0 success, 1 numeric failure,
2 validation failure.
"""
from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .applications import (JosephsonJunction, TunnelJunction, charge_sum_rule, detector_noise,
                           josephson_map, josephson_phase_variance, josephson_weak_coupling,
                           junction_charge_variance)
from .bath import TabulatedImpedance, make_bath
from .correlations import (CorrelationRequest, force_autocorrelation, force_commutator,
                           mean_square_displacement, position_autocorrelation, power_spectrum)
from .errors import QLEError, ValidationError
from .quadrature import QuadratureSpec, TailStrategy
from .response import ResponseFunction, SystemConfig, green_function, nonrunaway_trajectory
from .sampling import read_force_csv
from .simulate import (SimulationPlan, dump_paths, ensemble_msd, integrate_langevin)
from .thermo import FreeEnergyRequest, thermodynamic_sweep
from .units import ThermalState, UnitSystem


@dataclass(frozen=True)
class Field:
    kind: str  # float, int, bool, str, path
    default: object = None
    choices: tuple = ()
    positive: bool = False
    nonneg: bool = False


def _F(default=None, **kw):
    return Field("float", default, **kw)


UNITS = {"units.mode": Field("str", "reduced", ("reduced", "gaussian_cgs")),
         "units.c": _F(1.0, positive=True), "units.e_charge": _F(1.0, positive=True)}
SYSTEM = {"system.mass": _F(1.0, positive=True), "system.stiffness": _F(0.0, nonneg=True)}
BATH = {"bath.kind": Field("str", "ohmic", ("ohmic", "single_relaxation", "blackbody", "tabulated")),
        "bath.zeta": _F(1.0, positive=True), "bath.omega_r": _F(1.0, positive=True),
        "bath.Omega": _F(1.0, positive=True), "bath.table": Field("path", "")}
THERMAL = {"thermal.T": _F(1.0, nonneg=True), "thermal.classical": Field("bool", False)}
QUAD = {"quadrature.rel_tol": _F(1e-10, positive=True), "quadrature.abs_tol": _F(1e-13, positive=True),
        "quadrature.max_panels": Field("int", 200_000, positive=True),
        "quadrature.tail_strategy": Field("str", "asymptotic_filon", tuple(s.value for s in TailStrategy))}


def _grid(name, start, stop, n, spacing):
    return {f"{name}.start": _F(start, nonneg=True), f"{name}.stop": _F(stop, positive=True),
            f"{name}.n": Field("int", n, positive=True),
            f"{name}.spacing": Field("str", spacing, ("linear", "log"))}


TGRID = _grid("tgrid", 0.0, 10.0, 101, "linear")
WGRID = _grid("wgrid", 0.01, 10.0, 200, "log")

SCHEMAS = {
    "bath": {**UNITS, **SYSTEM, **BATH, **WGRID},
    "response": {**UNITS, **SYSTEM, **BATH, **WGRID, **TGRID},
    "correlate": {**UNITS, **SYSTEM, **BATH, **THERMAL, **QUAD, **TGRID,
                  "correlate.quantity": Field("str", "position", ("position", "force", "commutator"))},
    "msd": {**UNITS, **SYSTEM, **BATH, **THERMAL, **QUAD, **TGRID},
    "spectrum": {**UNITS, **SYSTEM, **BATH, **THERMAL, **WGRID},
    "free-energy": {**UNITS, **SYSTEM, **BATH, **QUAD, **_grid("sweep", 0.1, 10.0, 20, "log")},
    "josephson": {**THERMAL, **QUAD, "josephson.C": _F(1e-12, positive=True),
                  "josephson.R": _F(1.0, positive=True), "josephson.I": _F(0.0),
                  "josephson.I_c": _F(1e-6, positive=True), "josephson.si": Field("bool", True)},
    "junction": {**UNITS, **THERMAL, **QUAD, "junction.C": _F(1.0, positive=True),
                 "junction.R": _F(1.0, positive=True), "junction.table": Field("path", ""),
                 "junction.omega_max": _F(1e3, positive=True),
                 "junction.coverage_tol": _F(0.02, positive=True)},
    "detector": {**UNITS, **SYSTEM, **BATH, **THERMAL, **QUAD, **WGRID},
    "radiate": {**UNITS, "radiate.force": Field("path", ""), "radiate.M": _F(1.0, positive=True),
                "radiate.x0": _F(0.0), "radiate.v0": _F(0.0)},
    "simulate": {**UNITS, **SYSTEM, **BATH, **THERMAL, "simulate.dt": _F(1e-3, positive=True),
                 "simulate.steps": Field("int", 1000, positive=True),
                 "simulate.n_paths": Field("int", 1000, positive=True),
                 "simulate.seed": Field("int", 0, nonneg=True),
                 "simulate.scheme": Field("str", "EulerMaruyama", ("EulerMaruyama", "StrongOrder1")),
                 "simulate.record_every": Field("int", 1, positive=True),
                 "simulate.dump": Field("bool", False)},
}


# --- parameter handling ------------------------------------------------------------

def _coerce(key, raw, f: Field):
    if not isinstance(raw, str):
        val = raw
    else:
        s = raw.strip()
        try:
            if f.kind == "float":
                val = float(s)
            elif f.kind == "int":
                val = int(s)
            elif f.kind == "bool":
                low = s.lower()
                if low not in ("true", "false", "1", "0", "yes", "no"):
                    raise ValueError
                val = low in ("true", "1", "yes")
            else:
                val = s
        except ValueError:
            raise ValidationError(f"{key}: expected {f.kind}, got {raw!r}") from None
    if f.kind == "float":
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ValidationError(f"{key}: expected float, got {val!r}")
        val = float(val)
        if not math.isfinite(val):
            raise ValidationError(f"{key}: must be finite")
    if f.kind == "int" and (isinstance(val, bool) or not isinstance(val, int)):
        raise ValidationError(f"{key}: expected int, got {val!r}")
    if f.choices and val not in f.choices:
        raise ValidationError(f"{key}: {val!r} not one of {', '.join(f.choices)}")
    if f.positive and not val > 0:
        raise ValidationError(f"{key}: must be > 0")
    if f.nonneg and not val >= 0:
        raise ValidationError(f"{key}: must be >= 0")
    return val


def resolve_params(command: str, supplied: dict) -> dict:
    """Merge ``supplied`` into the command's defaults; unknown keys are errors."""
    if command not in SCHEMAS:
        raise ValidationError(f"unknown command {command!r}")
    schema = SCHEMAS[command]
    unknown = sorted(set(supplied) - set(schema))
    if unknown:
        raise ValidationError(f"unknown key(s) for '{command}': {', '.join(unknown)}")
    out = {}
    for key, f in schema.items():
        out[key] = _coerce(key, supplied[key], f) if key in supplied else f.default
    return out


def read_config(path) -> dict:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None
    return {f"{sec}.{k}": v for sec in cp.sections() for k, v in cp.items(sec)}


def _parse_sets(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ValidationError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v
    return out


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _input_paths(params: dict) -> dict:
    used = {}
    for key, f in _schema_of(params).items():
        if f.kind == "path" and params.get(key):
            used[key] = params[key]
    return used


def _schema_of(params):
    return {k: f for schema in SCHEMAS.values() for k, f in schema.items() if k in params}


# --- model construction ---------------------------------------------------------------

def _units(p) -> UnitSystem:
    if p.get("units.mode", "reduced") == "gaussian_cgs":
        return UnitSystem.gaussian()
    return UnitSystem.reduced(p.get("units.c", 1.0), p.get("units.e_charge", 1.0))


def _bath(p, units):
    kind = p["bath.kind"]
    if kind == "tabulated" and not p["bath.table"]:
        raise ValidationError("bath.table: required for a tabulated bath")
    return make_bath(kind, units, zeta=p["bath.zeta"], omega_r=p["bath.omega_r"], M=p["system.mass"],
                     Omega=p["bath.Omega"], table=p["bath.table"])


def _response(p):
    units = _units(p)
    system = SystemConfig(p["system.mass"], p["system.stiffness"], units)
    return ResponseFunction(system, _bath(p, units))


def _state(p) -> ThermalState:
    return ThermalState(p["thermal.T"], p["thermal.classical"])


def _quad(p) -> QuadratureSpec:
    return QuadratureSpec(p["quadrature.rel_tol"], p["quadrature.abs_tol"], p["quadrature.max_panels"],
                          TailStrategy(p["quadrature.tail_strategy"]))


def _grid_values(p, name) -> np.ndarray:
    a, b, n, sp = p[f"{name}.start"], p[f"{name}.stop"], p[f"{name}.n"], p[f"{name}.spacing"]
    if sp == "log":
        if not a > 0:
            raise ValidationError(f"{name}.start: must be > 0 for log spacing")
        return np.geomspace(a, b, n)
    return np.linspace(a, b, n)


# --- commands -------------------------------------------------------------------------
# each returns {"tables": {name: (columns, header)}, "scalars": {...}, "extra": {name: writer}}

def _cmd_bath(p):
    bath = _bath(p, _units(p))
    w = _grid_values(p, "wgrid")
    mu = np.asarray(bath.memory_fourier(w.astype(complex)))
    return {"tables": {"bath": ({"omega": w, "re_mu": mu.real, "im_mu": mu.imag}, {})}}


def _cmd_response(p):
    r = _response(p)
    w = _grid_values(p, "wgrid")
    t = _grid_values(p, "tgrid")
    a = r.susceptibility(w)
    return {"tables": {
        "susceptibility": ({"omega": w, "re_alpha": a.real, "im_alpha": a.imag}, {}),
        "green": ({"t": t, "G": green_function(r, t), "G_dot": r.green_dot(t)}, {}),
    }}


def _cmd_correlate(p):
    r = _response(p)
    state, spec = _state(p), _quad(p)
    t = _grid_values(p, "tgrid")
    q = p["correlate.quantity"]
    if q == "position":
        req = CorrelationRequest(r, state, spec)
        v = np.array([position_autocorrelation(req, x) for x in t])
    elif q == "force":
        v = np.array([force_autocorrelation(r.bath, state, x, r.system.units, spec) for x in t])
    else:
        v = np.array([force_commutator(r.bath, x, spec) for x in t])
    return {"tables": {"correlation": ({"t": t, q: v}, {"quantity": q})}}


def _cmd_msd(p):
    req = CorrelationRequest(_response(p), _state(p), _quad(p))
    t = _grid_values(p, "tgrid")
    s = np.array([mean_square_displacement(req, x) for x in t])
    return {"tables": {"msd": ({"t": t, "s": s}, {})}}


def _cmd_spectrum(p):
    req = CorrelationRequest(_response(p), _state(p))
    w = _grid_values(p, "wgrid")
    return {"tables": {"spectrum": ({"omega": w, "P": power_spectrum(req, w)}, {})}}


def _cmd_free_energy(p):
    r = _response(p)
    req = FreeEnergyRequest(r, ThermalState(1.0), _quad(p))
    cols = thermodynamic_sweep(req, _grid_values(p, "sweep"))
    return {"tables": {"thermo": (cols, {})}}


def _cmd_josephson(p):
    if p["josephson.si"]:
        j = JosephsonJunction.from_si(p["josephson.C"], p["josephson.R"], p["josephson.I"], p["josephson.I_c"])
    else:
        j = JosephsonJunction(p["josephson.C"], p["josephson.R"], p["josephson.I"], p["josephson.I_c"])
    state = _state(p)
    system, bath, w0 = josephson_map(j)
    phi2 = josephson_phase_variance(j, state, _quad(p))
    weak = josephson_weak_coupling(j, state)
    cols = {"omega0": [w0], "gamma": [j.gamma], "mass": [system.mass], "zeta": [bath.zeta],
            "phase_variance": [phi2], "weak_coupling": [weak]}
    return {"tables": {"josephson": (cols, {"units": "gaussian_cgs"})}, "scalars": {"phase_variance": phi2}}


def _cmd_junction(p):
    units = _units(p)
    if p["junction.table"]:
        tj = TunnelJunction.from_csv(p["junction.C"], p["junction.table"], units)
    else:
        tj = TunnelJunction.resistor(p["junction.C"], p["junction.R"], p["junction.omega_max"], units=units)
    spec = _quad(p)
    q2 = junction_charge_variance(tj, _state(p), p["junction.coverage_tol"], spec)
    cover = float("nan") if tj.is_reactive else charge_sum_rule(tj, spec)
    return {"tables": {"junction": ({"charge_variance": [q2], "sum_rule": [cover]}, {})},
            "scalars": {"charge_variance": q2}}


def _cmd_detector(p):
    r = _response(p)
    w = _grid_values(p, "wgrid")
    P, var = detector_noise(r, _state(p), w, _quad(p))
    return {"tables": {"spectrum": ({"omega": P.x, "P": P.y}, {"variance": repr(var)})},
            "scalars": {"variance": var}}


def _cmd_radiate(p):
    if not p["radiate.force"]:
        raise ValidationError("radiate.force: a force CSV (columns t,f) is required")
    f = read_force_csv(p["radiate.force"])
    tr = nonrunaway_trajectory(p["radiate.M"], f, _units(p), p["radiate.x0"], p["radiate.v0"])
    return {"tables": {"trajectory": ({"t": tr.x, "x": tr.y[:, 0], "v": tr.y[:, 1]},
                                      {"tau_e": repr(tr.meta["tau_e"])})}}


def _cmd_simulate(p, workers=1):
    units = _units(p)
    system = SystemConfig(p["system.mass"], p["system.stiffness"], units)
    plan = SimulationPlan(system, _bath(p, units), ThermalState(p["thermal.T"], True), p["simulate.dt"],
                          p["simulate.steps"], p["simulate.n_paths"], p["simulate.seed"],
                          p["simulate.scheme"], p["simulate.record_every"], workers=workers)
    ens = integrate_langevin(plan)
    msd = ensemble_msd(ens, min_paths=min(100, plan.n_paths))
    out = {"tables": {"msd": ({"t": msd.x, "s": msd.y[:, 0], "se": msd.y[:, 1]}, {})}}
    if p["simulate.dump"]:
        out["extra"] = {"paths.bin": lambda path: dump_paths(path, ens)}
    return out


COMMANDS = {
    "bath": _cmd_bath, "response": _cmd_response, "correlate": _cmd_correlate, "msd": _cmd_msd,
    "spectrum": _cmd_spectrum, "free-energy": _cmd_free_energy, "josephson": _cmd_josephson,
    "junction": _cmd_junction, "detector": _cmd_detector, "radiate": _cmd_radiate,
    "simulate": _cmd_simulate,
}


# --- output ----------------------------------------------------------------------------

def _fmt(v):
    return repr(float(v))


def _write_table(out: Path, name, columns, header):
    cols = {k: np.asarray(v, dtype=float).ravel() for k, v in columns.items()}
    lines = [f"# {k}: {v}" for k, v in header.items()]
    names = list(cols)
    lines.append(",".join(names))
    n = len(next(iter(cols.values())))
    for i in range(n):
        lines.append(",".join(_fmt(cols[k][i]) for k in names))
    csv_path = out / f"{name}.csv"
    csv_path.write_text("\n".join(lines) + "\n")
    json_path = out / f"{name}.json"
    json_path.write_text(json.dumps({"header": {k: str(v) for k, v in header.items()},
                                     "columns": {k: [float(x) for x in v] for k, v in cols.items()}},
                                    indent=1) + "\n")
    return [csv_path, json_path]


def _quad_dict(p):
    if "quadrature.rel_tol" not in p:
        return None
    return _quad(p).to_dict()


def build_manifest(command, params, inputs, outputs) -> dict:
    units = _units(params) if command != "josephson" else UnitSystem.gaussian()
    return {
        "tool": "qlangevin",
        "version": __version__,
        "command": command,
        "units": units.to_dict(),
        "parameters": params,
        "quadrature": _quad_dict(params),
        "inputs": {k: {"path": str(Path(v).resolve()), "sha256": _sha256(v)} for k, v in inputs.items()},
        "seed": params.get("simulate.seed"),
        "outputs": {Path(k).name: _sha256(k) for k in outputs},
    }


def run(command: str, params: dict, out_dir, workers: int = 1) -> dict:
    """Validate, compute, then write all artifacts under ``out_dir``.

    Nothing is written unless the computation succeeds.
    """
    params = resolve_params(command, params)
    inputs = _input_paths(params)
    for key, path in inputs.items():
        if not Path(path).is_file():
            raise ValidationError(f"{key}: no such file {path!r}")
    if workers < 1:
        raise ValidationError("--workers must be >= 1")
    fn = COMMANDS[command]
    result = fn(params, workers) if command == "simulate" else fn(params)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, (columns, header) in result["tables"].items():
        written += _write_table(out, name, columns, header)
    for name, writer in result.get("extra", {}).items():
        writer(out / name)
        written.append(out / name)
    manifest = build_manifest(command, params, inputs, written)
    if result.get("scalars"):
        manifest["results"] = {k: float(v) for k, v in result["scalars"].items()}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return manifest


def replay(manifest_path, out_dir, workers: int = 1, check: bool = False) -> dict:
    """Re-run a command from its manifest; ``check`` compares output hashes."""
    try:
        m = json.loads(Path(manifest_path).read_text())
        command, params = m["command"], m["parameters"]
    except (OSError, ValueError, KeyError) as exc:
        raise ValidationError(f"unreadable manifest {manifest_path}: {exc}") from None
    for key, rec in m.get("inputs", {}).items():
        if not Path(rec["path"]).is_file() or _sha256(rec["path"]) != rec["sha256"]:
            raise ValidationError(f"{key}: input {rec['path']} missing or changed since the recorded run")
        params[key] = rec["path"]
    new = run(command, params, out_dir, workers)
    if check and new["outputs"] != m["outputs"]:
        raise ReplayMismatch("replayed outputs differ from the manifest")
    return new


class ReplayMismatch(QLEError):
    pass


def _parser():
    ap = argparse.ArgumentParser(prog="qle", description="Quantum Langevin calculations")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="INI file; [section] key = value")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a parameter, e.g. bath.zeta=0.5")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--workers", type=int, default=1)
    rp = sub.add_parser("replay")
    rp.add_argument("manifest")
    rp.add_argument("--out", required=True)
    rp.add_argument("--workers", type=int, default=1)
    rp.add_argument("--check", action="store_true", help="fail if outputs differ from the manifest")
    return ap


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        if args.command == "replay":
            replay(args.manifest, args.out, args.workers, args.check)
        else:
            supplied = read_config(args.config) if args.config else {}
            supplied.update(_parse_sets(args.set))
            run(args.command, supplied, args.out, args.workers)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except QLEError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
