"""Free energy of an oscillator in a bath and derived thermodynamics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .bath import BlackbodyRadiation, electron_time
from .errors import DomainError, UnitError
from .quadrature import Oscillation, QuadratureSpec, SpectralIntegrand, integrate_spectral
from .response import ResponseFunction, SystemConfig
from .units import REDUCED, ThermalState, UnitSystem, thermal_frequency

_DEFAULT_SPEC = QuadratureSpec(rel_tol=1e-10, abs_tol=1e-14)


def _log_one_minus_exp(u):
    """``log(1 - exp(-u))`` for ``u > 0``, accurate at both ends."""
    u = np.asarray(u, dtype=float)
    return np.where(u > math.log(2.0), np.log1p(-np.exp(-np.maximum(u, math.log(2.0)))),
                    np.log(-np.expm1(-np.minimum(u, math.log(2.0)))))


def single_oscillator_free_energy(omega, state: ThermalState, units: UnitSystem = REDUCED,
                                  zero_point: bool = False):
    """``f(w, T) = kT log(1 - exp(-hbar w/kT))``, zero-point energy omitted.

    ``zero_point=True`` adds ``hbar w/2``. With a classical thermal state the
    high-temperature form ``kT log(hbar w/kT)`` is returned.
    """
    w = np.asarray(omega, dtype=float)
    if np.any(~(w > 0)):
        raise DomainError("oscillator frequency must be > 0")
    kT = state.kT(units)
    if state.T == 0:
        out = np.zeros_like(w)
    elif state.classical:
        out = kT * np.log(units.hbar * w / kT)
    else:
        out = kT * _log_one_minus_exp(units.hbar * w / kT)
    if zero_point:
        out = out + 0.5 * units.hbar * w
    return float(out) if np.ndim(omega) == 0 else out


@dataclass(frozen=True)
class FreeEnergyRequest:
    resp: ResponseFunction
    state: ThermalState
    quad: QuadratureSpec = field(default_factory=lambda: _DEFAULT_SPEC)

    @property
    def units(self) -> UnitSystem:
        return self.resp.system.units

    def at(self, T: float) -> "FreeEnergyRequest":
        return replace(self, state=replace(self.state, T=T))


def oscillator_free_energy(req: FreeEnergyRequest) -> float:
    """``F(T) = (1/pi) int f(w, T) Im[d log alpha(w)/dw] dw``."""
    if req.state.T == 0:
        return 0.0
    r, units, state = req.resp, req.units, req.state

    def env(w):
        return single_oscillator_free_energy(w, state, units) * np.imag(r.dlog_alpha(w))

    scales = r.scales() + (thermal_frequency(state, units),)
    # f has only a logarithmic singularity at 0; Im dlog(alpha) is finite there
    ig = SpectralIntegrand(env, units=units, oscillation=Oscillation.NONE, zero_behavior=0.0,
                           scales=scales, breakpoints=r.breakpoints())
    return integrate_spectral(ig, req.quad).value / math.pi


def entropy(req: FreeEnergyRequest) -> float:
    """``S = -dF/dT`` by Richardson-extrapolated central differences, ``dT = 1e-4 T``."""
    T = req.state.T
    if not T > 0:
        raise DomainError("entropy needs T > 0")
    h = 1e-4 * T

    def F(x):
        return oscillator_free_energy(req.at(x))

    d1 = (F(T + h) - F(T - h)) / (2 * h)
    d2 = (F(T + h / 2) - F(T - h / 2)) / h
    return -(4 * d2 - d1) / 3


def energy_and_entropy(req: FreeEnergyRequest) -> tuple:
    """``(U, S)`` with ``U = F + T S``."""
    S = entropy(req)
    F = oscillator_free_energy(req)
    return F + req.state.T * S, S


def thermodynamic_sweep(req: FreeEnergyRequest, temperatures) -> dict:
    """Columns ``T, F, U, S`` over a temperature grid (``T > 0``)."""
    T = np.asarray(temperatures, dtype=float)
    F = np.empty_like(T)
    U = np.empty_like(T)
    S = np.empty_like(T)
    for i, x in enumerate(T):
        ri = req.at(float(x))
        F[i] = oscillator_free_energy(ri)
        U[i], S[i] = energy_and_entropy(ri)
    return {"T": T, "F": F, "U": U, "S": S}


def rydberg_blackbody_shift(state: ThermalState, M: float, units: UnitSystem) -> float:
    """Free-energy shift ``pi e^2 (kT)^2 / (9 hbar M c^3)`` of a charge in blackbody radiation."""
    if not units.is_physical:
        raise UnitError("the blackbody shift needs physical (Gaussian CGS) constants")
    if not M > 0:
        raise DomainError("mass must be > 0")
    if not state.T > 0:
        raise DomainError("temperature must be > 0")
    kT = state.kT(units)
    return math.pi * units.e_charge**2 * kT**2 / (9.0 * units.hbar * M * units.c**3)


def rydberg_shift_numeric(state: ThermalState, M: float, units: UnitSystem,
                          Omega: float | None = None, spec: QuadratureSpec | None = None) -> float:
    """Free energy of a free charge in the radiation bath, computed by quadrature.

    ``Omega`` defaults to the largest causal cutoff ``1/tau_e``.
    """
    if not units.is_physical:
        raise UnitError("the blackbody shift needs physical (Gaussian CGS) constants")
    Omega = Omega or 1.0 / electron_time(M, units)
    bath = BlackbodyRadiation(M, Omega, units)
    resp = ResponseFunction(SystemConfig(M, 0.0, units), bath, check_poles=False)
    return oscillator_free_energy(FreeEnergyRequest(resp, state, spec or _DEFAULT_SPEC))
