"""Force and position correlations, mean-square displacement and spectra."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bath import BathModel, BlackbodyRadiation, Ohmic, TabulatedImpedance
from .errors import DivergenceError, DomainError, UnsupportedOperation
from .quadrature import Oscillation, QuadratureSpec, QuadResult, SpectralIntegrand, integrate_spectral
from .response import ResponseFunction
from .sampling import SampledFunction
from .units import REDUCED, ThermalState, UnitSystem, coth_thermal

EULER_GAMMA = 0.5772156649015329

_DEFAULT_SPEC = QuadratureSpec(rel_tol=1e-10, abs_tol=1e-13)


@dataclass(frozen=True)
class CorrelationRequest:
    """A response function paired with a temperature and quadrature settings."""

    resp: ResponseFunction
    state: ThermalState
    quad: QuadratureSpec = field(default_factory=lambda: _DEFAULT_SPEC)
    t_grid: tuple = ()

    def __post_init__(self):
        if not np.all(np.isfinite(np.asarray(self.t_grid, dtype=float))):
            raise DomainError("t_grid must be finite")

    @property
    def units(self) -> UnitSystem:
        return self.resp.system.units

    @property
    def thermal_power(self) -> float:
        """Power of ``coth`` (or its classical limit) at ``w -> 0``."""
        return 0.0 if (self.state.T == 0 and not self.state.classical) else -1.0


def _thermal_power(state: ThermalState) -> float:
    return 0.0 if (state.T == 0 and not state.classical) else -1.0


# --- force correlations ----------------------------------------------------------

def _force_plateau(bath: BathModel) -> float:
    if isinstance(bath, Ohmic):
        raise DivergenceError(
            "force correlations of an Ohmic bath are delta-correlated; use a bath with a "
            "cutoff or the classical white-noise strength 2*zeta*kT")
    if isinstance(bath, BlackbodyRadiation):
        return bath.plateau
    if isinstance(bath, TabulatedImpedance):
        return float(bath.re_mu_extended(bath.omega_max))
    return 0.0


def _excess(bath, w, plateau):
    if plateau:
        return np.asarray(bath.spectral_excess(w), dtype=float)
    return np.asarray(bath.re_mu_extended(w), dtype=float)


def _plateau_autocorrelation(plateau, state, units, t):
    """Abel-regularized ``(hbar R/pi) int w coth(hbar w/2kT) cos(wt) dw``."""
    if plateau == 0:
        return 0.0
    if t == 0:
        raise DivergenceError("force autocorrelation diverges at t = 0 for a bath with a high-frequency plateau")
    if state.classical:
        return 0.0
    if state.T == 0:
        return -units.hbar * plateau / (math.pi * t * t)
    kT = state.kT(units)
    x = math.pi * kT * abs(t) / units.hbar
    if x > 350:
        return 0.0
    return -plateau * math.pi * kT**2 / units.hbar / math.sinh(x) ** 2


def force_autocorrelation(bath: BathModel, state: ThermalState, t: float, units: UnitSystem = REDUCED,
                          spec: QuadratureSpec | None = None) -> float:
    """``C_FF(t) = (1/pi) int Re mu(w) hbar w coth(hbar w/2kT) cos(wt) dw``.

    A high-frequency plateau of ``Re mu`` is split off and transformed in
    closed form (Abel summation); the remainder goes through the quadrature
    engine. Even in ``t``.
    """
    spec = spec or _DEFAULT_SPEC
    t = abs(float(t))
    plateau = _force_plateau(bath)
    if plateau and t == 0:
        raise DivergenceError("force autocorrelation diverges at t = 0 for a bath with a high-frequency plateau")

    def env(w):
        return units.hbar * w * _excess(bath, w, plateau)

    p0 = 0.0 if plateau else bath.zero_power
    ig = SpectralIntegrand(env, thermal=state, units=units, oscillation=Oscillation.COS, t=t,
                           zero_behavior=1.0 + p0 + _thermal_power(state), scales=bath.scales())
    body = integrate_spectral(ig, spec).value / math.pi
    return body + _plateau_autocorrelation(plateau, state, units, t)


def force_commutator(bath: BathModel, t: float, spec: QuadratureSpec | None = None) -> float:
    """``I(t) = int Re mu(w) w sin(wt) dw``; ``[F(t'), F(t'+t)] = (2 hbar / i pi) I(t)``.

    Odd in ``t``; no temperature dependence. A plateau of ``Re mu`` contributes
    nothing for ``t != 0``.
    """
    spec = spec or _DEFAULT_SPEC
    t = float(t)
    if t == 0:
        return 0.0
    plateau = _force_plateau(bath)

    def env(w):
        return w * _excess(bath, w, plateau)

    p0 = 0.0 if plateau else bath.zero_power
    ig = SpectralIntegrand(env, oscillation=Oscillation.SIN, t=t, zero_behavior=1.0 + p0,
                           scales=bath.scales())
    return integrate_spectral(ig, spec).value


# --- position correlations -------------------------------------------------------

def _spectral(req: CorrelationRequest, envelope, osc, t, p_extra=0.0) -> QuadResult:
    r = req.resp
    ig = SpectralIntegrand(envelope, thermal=req.state, units=req.units, oscillation=osc, t=t,
                           zero_behavior=r.im_alpha_zero_power() + req.thermal_power + p_extra,
                           scales=r.scales(), breakpoints=r.breakpoints())
    return integrate_spectral(ig, req.quad)


def position_autocorrelation_paths(req: CorrelationRequest, t: float) -> tuple:
    """``C(t)`` through ``w |alpha|^2 Re mu`` and through ``Im alpha`` directly."""
    r = req.resp
    if r.K == 0:
        raise DivergenceError("free particle: C(t) diverges; use mean_square_displacement")
    t = abs(float(t))
    pref = req.units.hbar / math.pi
    a = _spectral(req, r.im_alpha_fd, Oscillation.COS, t).value

    def im_direct(w):
        return np.imag(r.susceptibility(w))

    b = _spectral(req, im_direct, Oscillation.COS, t).value
    return pref * a, pref * b


def position_autocorrelation(req: CorrelationRequest, t: float) -> float:
    """Symmetrized ``C(t) = (hbar/pi) int Im alpha coth(hbar w/2kT) cos(wt) dw``."""
    r = req.resp
    if r.K == 0:
        raise DivergenceError("free particle: C(t) diverges; use mean_square_displacement")
    t = abs(float(t))
    return req.units.hbar / math.pi * _spectral(req, r.im_alpha_fd, Oscillation.COS, t).value


def mean_square_displacement(req: CorrelationRequest, t: float) -> float:
    """``s(t) = (2 hbar/pi) int Im alpha coth(hbar w/2kT) (1 - cos wt) dw``."""
    r = req.resp
    r.require_regular()
    t = abs(float(t))
    if t == 0:
        return 0.0
    v = _spectral(req, r.im_alpha_fd, Oscillation.ONE_MINUS_COS, t).value
    return 2.0 * req.units.hbar / math.pi * v


def msd_rate(req: CorrelationRequest, t: float) -> float:
    """``ds/dt = (2 hbar/pi) int w Im alpha coth(hbar w/2kT) sin(wt) dw``."""
    r = req.resp
    r.require_regular()
    t = float(t)

    def env(w):
        return w * r.im_alpha_fd(w)

    v = _spectral(req, env, Oscillation.SIN, t, p_extra=1.0).value
    return 2.0 * req.units.hbar / math.pi * v


def msd_series(req: CorrelationRequest, t_grid=None) -> SampledFunction:
    t = np.asarray(req.t_grid if t_grid is None else t_grid, dtype=float)
    s = np.array([mean_square_displacement(req, x) for x in t])
    return SampledFunction(t, s, {"quantity": "mean square displacement"})


def classical_msd_closed_form(t, mass: float, gamma: float, kT: float):
    """Free Brownian particle: ``(2kT/m gamma^2) (exp(-gamma t) - 1 + gamma t)``."""
    x = gamma * np.abs(np.asarray(t, dtype=float))
    # expm1 keeps the small-x cancellation under control
    return 2.0 * kT / (mass * gamma**2) * (np.expm1(-x) + x)


def zero_temperature_msd_asymptote(t, mass: float, zeta: float, hbar: float = 1.0):
    """``-(hbar zeta/pi m^2) t^2 [log(zeta t/m) + gamma_E - 3/2]`` for an Ohmic free particle."""
    t = np.asarray(t, dtype=float)
    return -(hbar * zeta / (math.pi * mass**2)) * t**2 * (np.log(zeta * t / mass) + EULER_GAMMA - 1.5)


def diffusion_constant(req: CorrelationRequest, numeric: bool = False, gamma_t: float = 200.0) -> float:
    """Einstein coefficient ``kT/(m gamma)`` of an Ohmic free particle.

    ``numeric=True`` returns ``ds/dt / 2`` at ``gamma t = gamma_t`` instead.
    """
    r = req.resp
    if not isinstance(r.bath, Ohmic) or r.K != 0:
        raise UnsupportedOperation("diffusion constant is defined for an Ohmic free particle")
    if req.state.T == 0:
        raise UnsupportedOperation("no diffusion constant at T = 0")
    if numeric:
        return 0.5 * msd_rate(req, gamma_t / r.gamma)
    return req.state.kT(req.units) / (r.system.mass * r.gamma)


def power_spectrum(req: CorrelationRequest, omega):
    """``P(w) = (hbar/pi) w |alpha|^2 Re mu coth(hbar w/2kT)`` for ``w > 0``."""
    w = np.asarray(omega, dtype=float)
    if np.any(~(w > 0)):
        raise DomainError("power spectrum requires omega > 0")
    out = req.units.hbar / math.pi * req.resp.im_alpha_fd(w) * coth_thermal(w, req.state, req.units)
    return float(out) if np.ndim(omega) == 0 else out


def spectrum_integral(req: CorrelationRequest) -> float:
    """``int_0^inf P(w) dw``, the equal-time variance."""
    r = req.resp
    if r.K == 0:
        raise DivergenceError("free particle: the variance diverges")
    return req.units.hbar / math.pi * _spectral(req, r.im_alpha_fd, Oscillation.NONE, 0.0).value


class DrivenCorrelation:
    """Driven part ``C_d(t, t') = <x(t)> <x(t')>`` of the two-time correlation."""

    def __init__(self, mean: SampledFunction):
        self.mean = mean

    def _at(self, t):
        return np.interp(np.asarray(t, dtype=float), self.mean.x, np.asarray(self.mean.y, dtype=float))

    def __call__(self, t, t_prime):
        return self._at(t) * self._at(t_prime)

    def matrix(self) -> np.ndarray:
        y = np.asarray(self.mean.y, dtype=float)
        return np.outer(y, y)

    def total(self, stationary, t, t_prime):
        """``C0(t - t') + C_d(t, t')`` with ``stationary`` the undriven ``C0``."""
        return stationary(np.asarray(t) - np.asarray(t_prime)) + self(t, t_prime)


def driven_correlation(mean: SampledFunction) -> DrivenCorrelation:
    return DrivenCorrelation(mean)
