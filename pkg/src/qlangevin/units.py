"""Unit systems, physical constants and the thermal ``coth`` factor."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from .errors import DomainError

# CODATA 2018, Gaussian CGS
HBAR_CGS = 1.054571817e-27  # erg s
KB_CGS = 1.380649e-16  # erg / K
C_CGS = 2.99792458e10  # cm / s
E_CGS = 4.803204712570263e-10  # esu
ELECTRON_MASS_CGS = 9.1093837015e-28  # g

# below this value of hbar*omega/2kT the Laurent series replaces 1/tanh
_SERIES_CUTOFF = 1e-4


class UnitMode(str, Enum):
    GAUSSIAN_CGS = "gaussian_cgs"
    REDUCED = "reduced"


@dataclass(frozen=True)
class UnitSystem:
    """Constants in force for a computation.

    In reduced mode ``hbar = kB = 1`` exactly; ``c`` and ``e_charge`` stay
    configurable because the radiation-bath formulas only use ``e**2/c**3``.
    """

    mode: UnitMode = UnitMode.REDUCED
    hbar: float = 1.0
    kB: float = 1.0
    c: float = 1.0
    e_charge: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mode", UnitMode(self.mode))
        for name in ("hbar", "kB", "c", "e_charge"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be strictly positive")
        if self.mode is UnitMode.REDUCED and (self.hbar != 1.0 or self.kB != 1.0):
            raise DomainError("reduced units require hbar = kB = 1")

    @classmethod
    def gaussian(cls) -> "UnitSystem":
        return cls(UnitMode.GAUSSIAN_CGS, HBAR_CGS, KB_CGS, C_CGS, E_CGS)

    @classmethod
    def reduced(cls, c: float = 1.0, e_charge: float = 1.0) -> "UnitSystem":
        return cls(UnitMode.REDUCED, 1.0, 1.0, c, e_charge)

    @property
    def is_physical(self) -> bool:
        return self.mode is UnitMode.GAUSSIAN_CGS

    def radiation_coupling(self) -> float:
        """The combination ``2 e^2 / 3 c^3`` that sets the radiation reaction."""
        return 2.0 * self.e_charge**2 / (3.0 * self.c**3)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mode"] = self.mode.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "UnitSystem":
        return cls(**d)


REDUCED = UnitSystem.reduced()


@dataclass(frozen=True)
class ThermalState:
    """Bath temperature.

    ``classical=True`` replaces ``coth(hbar w / 2kT)`` by its high-temperature
    limit ``2kT / hbar w`` everywhere it is used.
    """

    T: float = 0.0
    classical: bool = False

    def __post_init__(self):
        if not self.T >= 0:
            raise DomainError("temperature must be >= 0")

    def kT(self, units: UnitSystem = REDUCED) -> float:
        return units.kB * self.T


def _coth_of(x):
    """coth(x) for x > 0, switching to the Laurent series near 0."""
    x = np.asarray(x, dtype=float)
    small = x < _SERIES_CUTOFF
    out = np.empty_like(x)
    xs = x[small]
    out[small] = 1.0 / xs + xs / 3.0 - xs**3 / 45.0
    xl = x[~small]
    out[~small] = 1.0 / np.tanh(xl)
    return out


def coth_thermal(omega, state: ThermalState, units: UnitSystem = REDUCED):
    """``coth(hbar*omega / 2kT)`` for ``omega > 0``.

    Returns exactly 1 at ``T = 0``. Accepts scalars or arrays.
    """
    scalar = np.ndim(omega) == 0
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    if np.any(~(w > 0)):
        raise DomainError("coth_thermal requires omega > 0")
    if state.classical:
        out = 2.0 * state.kT(units) / (units.hbar * w)
    elif state.T == 0:
        out = np.ones_like(w)
    else:
        with np.errstate(over="ignore"):
            out = _coth_of(units.hbar * w / (2.0 * state.kT(units)))
    return float(out[0]) if scalar else out


def thermal_frequency(state: ThermalState, units: UnitSystem = REDUCED) -> float:
    """``kT / hbar``; zero at T = 0."""
    return state.kT(units) / units.hbar
