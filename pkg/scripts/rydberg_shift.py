"""Blackbody free-energy shift of a free electron: closed form against quadrature."""
import argparse
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from qlangevin.thermo import rydberg_blackbody_shift, rydberg_shift_numeric
from qlangevin.units import ThermalState, UnitSystem


@dataclass
class Config:
    mass_g: float = 9.1093837015e-28
    T_min: float = 10.0
    T_max: float = 3000.0
    n: int = 9
    out: str = "results/rydberg"


def main(cfg: Config):
    G = UnitSystem.gaussian()
    h = 2 * np.pi * G.hbar
    rows = []
    for T in np.geomspace(cfg.T_min, cfg.T_max, cfg.n):
        closed = rydberg_blackbody_shift(ThermalState(T), cfg.mass_g, G)
        numeric = rydberg_shift_numeric(ThermalState(T), cfg.mass_g, G)
        rows.append((T, closed, numeric, closed / h, numeric / closed - 1))
        print(f"T = {T:8.2f} K  shift = {closed / h:.4e} Hz  numeric/closed - 1 = {numeric / closed - 1:+.2e}")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    np.savetxt(out / "rydberg.csv", np.array(rows), delimiter=",",
               header="T_kelvin,closed_erg,numeric_erg,closed_hz,rel_dev", comments="")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    for name, default in vars(Config()).items():
        ap.add_argument(f"--{name.replace('_', '-')}", type=type(default), default=default)
    main(Config(**vars(ap.parse_args())))
