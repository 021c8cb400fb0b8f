"""Josephson junction, small tunnel junction and detector-noise presets."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .bath import Ohmic
from .correlations import CorrelationRequest, power_spectrum, spectrum_integral
from .errors import CoverageError, DomainError, FormatError, RunningStateError
from .quadrature import Oscillation, QuadratureSpec, SpectralIntegrand, integrate_spectral
from .response import ResponseFunction, SystemConfig
from .sampling import SampledFunction, read_csv
from .units import ThermalState, UnitSystem, coth_thermal

_DEFAULT_SPEC = QuadratureSpec(rel_tol=1e-10, abs_tol=1e-13)

# SI -> Gaussian CGS conversion factors
FARAD_TO_CM = 8.987551792261171e11
OHM_TO_S_PER_CM = 1.0 / 8.987551792261171e11
AMPERE_TO_STATAMPERE = 2.99792458e9


@dataclass(frozen=True)
class JosephsonJunction:
    """Resistively shunted junction: capacitance, shunt resistance, bias and critical current.

    Values are in the unit system ``units`` (Gaussian: cm, s/cm, statA);
    :meth:`from_si` converts farads, ohms and amperes.
    """

    C: float
    R: float
    I: float
    I_c: float
    units: UnitSystem = field(default_factory=UnitSystem.gaussian)

    def __post_init__(self):
        if not (self.C > 0 and self.R > 0 and self.I_c > 0):
            raise DomainError("C, R and I_c must be > 0")

    @classmethod
    def from_si(cls, C_farad: float, R_ohm: float, I_amp: float, Ic_amp: float) -> "JosephsonJunction":
        return cls(C_farad * FARAD_TO_CM, R_ohm * OHM_TO_S_PER_CM, I_amp * AMPERE_TO_STATAMPERE,
                   Ic_amp * AMPERE_TO_STATAMPERE, UnitSystem.gaussian())

    @property
    def flux_unit(self) -> float:
        """``hbar / 2e``."""
        return self.units.hbar / (2.0 * self.units.e_charge)

    @property
    def gamma(self) -> float:
        return 1.0 / (self.R * self.C)

    @property
    def omega0(self) -> float:
        if abs(self.I) >= self.I_c:
            raise RunningStateError("|I| >= I_c: no potential minimum, the junction is in the running state")
        return math.sqrt(2.0 * self.units.e_charge / (self.C * self.units.hbar) * math.sqrt(self.I_c**2 - self.I**2))


def josephson_map(j: JosephsonJunction) -> tuple:
    """Mechanical equivalent ``(SystemConfig, Ohmic, omega0)`` with the phase as coordinate."""
    w0 = j.omega0
    u = j.flux_unit
    m = u**2 * j.C
    zeta = u**2 / j.R
    K = u * math.sqrt(j.I_c**2 - j.I**2)
    return SystemConfig(m, K, j.units), Ohmic(zeta), w0


def josephson_phase_variance(j: JosephsonJunction, state: ThermalState,
                             spec: QuadratureSpec | None = None) -> float:
    """``<phi^2> = (4e^2/pi C hbar) int coth(hbar w/2kT) w gamma / ((w0^2-w^2)^2 + w^2 gamma^2) dw``."""
    w0, g, u = j.omega0, j.gamma, j.units

    def env(w):
        return w * g / ((w0**2 - w**2) ** 2 + (w * g) ** 2)

    bps = ()
    if g < w0:
        bps = tuple(x for k in (0.25, 1, 4, 16, 64) for x in (w0 - k * g, w0 + k * g) if x > 0) + (w0,)
    ig = SpectralIntegrand(env, thermal=state, units=u, oscillation=Oscillation.NONE,
                           zero_behavior=1.0 + (0.0 if (state.T == 0 and not state.classical) else -1.0),
                           scales=(w0, g), breakpoints=bps)
    val = integrate_spectral(ig, spec or _DEFAULT_SPEC).value
    return 4.0 * u.e_charge**2 / (math.pi * j.C * u.hbar) * val


def josephson_weak_coupling(j: JosephsonJunction, state: ThermalState) -> float:
    """``(2 e^2 / C hbar w0) coth(hbar w0 / 2kT)``, the limit ``gamma << w0``."""
    w0, u = j.omega0, j.units
    return 2.0 * u.e_charge**2 / (j.C * u.hbar * w0) * coth_thermal(w0, state, u)


@dataclass(frozen=True)
class TunnelJunction:
    """Capacitance in series with an external impedance table ``Z(w)``.

    ``impedance.y`` holds complex ``Z`` values on an increasing grid.
    """

    C: float
    impedance: SampledFunction
    units: UnitSystem = field(default_factory=UnitSystem.gaussian)

    def __post_init__(self):
        if not self.C > 0:
            raise DomainError("capacitance must be > 0")
        z = np.asarray(self.impedance.y, dtype=complex)
        if z.ndim != 1 or not self.impedance.is_increasing:
            raise FormatError("impedance must be one complex column on an increasing grid")
        if self.impedance.x[0] < 0:
            raise FormatError("impedance grid must start at omega >= 0")
        if np.any(z.real < 0):
            raise DomainError("Re Z must be >= 0 (passive circuit)")
        object.__setattr__(self, "impedance", SampledFunction(self.impedance.x, z, dict(self.impedance.meta)))

    @classmethod
    def resistor(cls, C: float, R: float, omega_max: float, n: int = 4001,
                 units: UnitSystem | None = None) -> "TunnelJunction":
        """Pure resistor ``Z = R`` tabulated on ``[0, omega_max]``."""
        w = np.concatenate([[0.0], np.geomspace(omega_max * 1e-9, omega_max, n - 1)])
        return cls(C, SampledFunction(w, np.full(n, R, dtype=complex)), units or UnitSystem.gaussian())

    @classmethod
    def from_csv(cls, C: float, path, units: UnitSystem | None = None) -> "TunnelJunction":
        cols, header = read_csv(path, ["omega", "re_Z", "im_Z"])
        z = cols["re_Z"] + 1j * cols["im_Z"]
        return cls(C, SampledFunction(cols["omega"], z, {"source": str(path), **header}),
                   units or UnitSystem.gaussian())

    @property
    def omega_max(self) -> float:
        return float(self.impedance.x[-1])

    def Z(self, w):
        x, z = self.impedance.x, self.impedance.y
        return np.interp(w, x, z.real) + 1j * np.interp(w, x, z.imag)

    def admittance_response(self, w):
        """``Re[1/(i w C + 1/Z(w))]``; 0 where ``Z = 0``."""
        z = self.Z(np.asarray(w, dtype=float))
        with np.errstate(divide="ignore", invalid="ignore"):
            y = np.where(z == 0, np.inf, 1.0 / np.where(z == 0, 1.0, z))
            chi = 1.0 / (1j * np.asarray(w) * self.C + y)
        return np.where(np.isfinite(y), chi.real, 0.0)

    @property
    def is_reactive(self) -> bool:
        return bool(np.all(self.impedance.y.real == 0))


def charge_sum_rule(tj: TunnelJunction, spec: QuadratureSpec | None = None) -> float:
    """``(2C/pi) int_0^{w_max} Re chi dw``: 1 when the grid covers the response."""
    ig = SpectralIntegrand(tj.admittance_response, oscillation=Oscillation.NONE, zero_behavior=0.0,
                           scales=_z_scales(tj), upper=tj.omega_max,
                           breakpoints=tuple(tj.impedance.x[1:-1][:: max(1, tj.impedance.x.size // 200)]))
    return 2.0 / math.pi * integrate_spectral(ig, spec or _DEFAULT_SPEC).value * tj.C


def _z_scales(tj: TunnelJunction) -> tuple:
    z = np.abs(tj.impedance.y)
    zm = float(np.median(z[z > 0])) if np.any(z > 0) else 0.0
    s = (1.0 / (zm * tj.C),) if zm > 0 else ()
    return tuple(x for x in s if 0 < x < tj.omega_max)


def junction_charge_variance(tj: TunnelJunction, state: ThermalState, coverage_tol: float = 0.02,
                             spec: QuadratureSpec | None = None) -> float:
    """``<q^2> = int_0^{w_max} (hbar w C^2/pi) coth(hbar w/2kT) Re[1/(i w C + 1/Z)] dw``.

    The integral stops at the last grid frequency; a :class:`CoverageError`
    is raised when the sum rule shows more than ``coverage_tol`` of the
    response lies beyond it. Lossless (purely reactive) circuits are handled
    through their normal modes.
    """
    spec = spec or _DEFAULT_SPEC
    u = tj.units
    if tj.is_reactive:
        return _reactive_charge_variance(tj, state)
    cover = charge_sum_rule(tj, spec)
    if cover < 1.0 - coverage_tol:
        # Re chi ~ 1/(w^2 C^2 Re Z) at high frequency: extend until the tail falls below tol
        w = tj.omega_max
        tail = 2.0 / (math.pi * tj.C * w * max(float(tj.impedance.y[-1].real), 1e-300))
        suggested = w * max(2.0, tail / coverage_tol)
        raise CoverageError(f"impedance grid covers {cover:.4f} of the charge response; extend omega_max",
                            suggested_omega_max=suggested)

    def env(w):
        return u.hbar * w * tj.C**2 / math.pi * tj.admittance_response(w)

    p = 1.0 + (0.0 if (state.T == 0 and not state.classical) else -1.0)
    ig = SpectralIntegrand(env, thermal=state, units=u, oscillation=Oscillation.NONE, zero_behavior=p,
                           scales=_z_scales(tj), upper=tj.omega_max,
                           breakpoints=tuple(tj.impedance.x[1:-1][:: max(1, tj.impedance.x.size // 200)]))
    return integrate_spectral(ig, spec).value


def _reactive_charge_variance(tj: TunnelJunction, state: ThermalState) -> float:
    """Normal-mode sum for a lossless circuit.

    ``Re chi`` collapses to ``pi delta(g(w))/... `` at roots of
    ``g(w) = w C + Im(1/Z(w))``; each root ``w_r`` contributes
    ``(hbar w_r C^2/pi) coth(hbar w_r/2kT) pi / |g'(w_r)|``.
    """
    u = tj.units
    x = tj.impedance.x
    x = x[x > 0]

    def g(w):
        z = tj.Z(w)
        return w * tj.C + np.imag(1.0 / z)

    gv = g(x)
    roots = [float(w) for w in x[gv == 0]]
    for i in np.flatnonzero(np.sign(gv[:-1]) * np.sign(gv[1:]) < 0):
        roots.append(brentq(g, x[i], x[i + 1], xtol=1e-14 * x[i + 1]))
    total = 0.0
    for wr in roots:
        h = 1e-6 * wr
        dg = (g(wr + h) - g(wr - h)) / (2 * h)
        total += u.hbar * wr * tj.C**2 * coth_thermal(wr, state, u) / abs(dg)
    return total


def detector_noise(resp: ResponseFunction, state: ThermalState, omega_grid,
                   spec: QuadratureSpec | None = None) -> tuple:
    """Position spectrum ``P(w)`` on ``omega_grid`` and the variance ``int P dw``."""
    req = CorrelationRequest(resp, state, spec or _DEFAULT_SPEC)
    w = np.asarray(omega_grid, dtype=float)
    P = power_spectrum(req, w)
    return SampledFunction(w, P, {"quantity": "position power spectrum"}), spectrum_integral(req)
