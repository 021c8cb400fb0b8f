"""Heat-bath models.

A bath is fully characterised by its spectral distribution
``Re mu(w + i0)`` (non-negative, even in ``w``); each model also provides the
analytic continuation ``mu(z)`` into the upper half plane and, where one
exists, the time-domain memory kernel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import CausalityError, DomainError, ExtrapolationError, FormatError, UnsupportedOperation
from .sampling import SampledFunction, read_csv
from .units import REDUCED, UnitSystem

# bare masses within this relative distance of zero are rounding noise at
# the causality bound and are clamped to zero
_BOUND_SLACK = 1e-12


def _real_freq(omega):
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0) or np.any(~np.isfinite(w)):
        raise DomainError("spectral distribution requires finite omega >= 0")
    return w


def _uhp(z):
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag < 0):
        raise DomainError("memory_fourier is defined for Im z >= 0 only")
    return z


def _out(x, like):
    return x.item() if np.ndim(like) == 0 else x


@dataclass(frozen=True)
class MemoryKernel:
    """``mu(t) = delta_weight * delta(t) + smooth(t)`` for ``t >= 0``.

    ``delta_fraction`` is the share of the delta's unit mass that falls on
    ``t >= 0`` when transforming: ``mu(z) = delta_fraction * delta_weight +
    int_0^inf smooth(t) exp(izt) dt``. A delta written as acting for
    ``t > 0`` only counts fully (1.0); a symmetric delta counts half.
    """

    delta_weight: float
    smooth: Callable[[np.ndarray], np.ndarray]
    delta_fraction: float = 1.0
    decay_rate: float = 0.0

    def __call__(self, t):
        """Smooth part at ``t``; zero for ``t < 0``."""
        t = np.asarray(t, dtype=float)
        out = np.where(t >= 0, self.smooth(np.maximum(t, 0.0)), 0.0)
        return _out(out, t)


def _zero_smooth(t):
    return np.zeros_like(np.asarray(t, dtype=float))


class BathModel:
    """Common interface of the bath models."""

    kind: str = ""
    # Re mu ~ w**zero_power as w -> 0
    zero_power: float = 0.0

    def spectral_distribution(self, omega):
        raise NotImplementedError

    def memory_fourier(self, z):
        raise NotImplementedError

    def re_mu_extended(self, omega):
        """``Re mu`` as used inside frequency integrals (all ``omega >= 0``)."""
        return self.spectral_distribution(omega)

    def spectral_excess(self, omega):
        """``Re mu - plateau`` inside integrals, free of cancellation where possible."""
        return np.asarray(self.re_mu_extended(omega), dtype=float) - self.plateau

    def memory_fourier_derivative(self, z):
        """``d mu(z) / dz`` (analytic where available)."""
        z = np.asarray(z, dtype=complex)
        h = 1e-5 * np.maximum(np.abs(z), max(self.scales(), default=1.0))
        # Richardson-extrapolated central difference along the real direction
        d1 = (self.memory_fourier(z + h) - self.memory_fourier(z - h)) / (2 * h)
        d2 = (self.memory_fourier(z + h / 2) - self.memory_fourier(z - h / 2)) / h
        return (4 * d2 - d1) / 3

    def memory_kernel(self) -> MemoryKernel:
        raise UnsupportedOperation(f"{self.kind} bath has no closed-form memory kernel")

    @property
    def plateau(self) -> float:
        """High-frequency limit of ``Re mu``."""
        return 0.0

    def scales(self) -> tuple:
        return ()

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Ohmic(BathModel):
    """Frequency-independent friction ``mu(z) = zeta``."""

    zeta: float
    kind = "ohmic"

    def __post_init__(self):
        if not self.zeta > 0:
            raise DomainError("zeta must be > 0")

    def spectral_distribution(self, omega):
        w = _real_freq(omega)
        return _out(np.full(w.shape, self.zeta, dtype=float), omega)

    def memory_fourier(self, z):
        zz = _uhp(z)
        return _out(np.full(zz.shape, self.zeta, dtype=complex), z)

    def memory_fourier_derivative(self, z):
        zz = np.asarray(z, dtype=complex)
        return _out(np.zeros(zz.shape, dtype=complex), z)

    def memory_kernel(self):
        return MemoryKernel(self.zeta, _zero_smooth, delta_fraction=1.0)

    @property
    def plateau(self):
        return self.zeta

    def to_dict(self):
        return {"kind": self.kind, "zeta": self.zeta}


@dataclass(frozen=True)
class SingleRelaxation(BathModel):
    """``mu(z) = zeta * Omega_r / (Omega_r - i z)``; Ohmic as ``Omega_r -> inf``."""

    zeta: float
    omega_r: float
    kind = "single_relaxation"

    def __post_init__(self):
        if not (self.zeta > 0 and self.omega_r > 0):
            raise DomainError("zeta and omega_r must be > 0")

    def spectral_distribution(self, omega):
        w = _real_freq(omega)
        r = self.omega_r
        return _out(self.zeta * r**2 / (w**2 + r**2), omega)

    def memory_fourier(self, z):
        zz = _uhp(z)
        return _out(self.zeta * self.omega_r / (self.omega_r - 1j * zz), z)

    def memory_fourier_derivative(self, z):
        zz = np.asarray(z, dtype=complex)
        return _out(1j * self.zeta * self.omega_r / (self.omega_r - 1j * zz) ** 2, z)

    def memory_kernel(self):
        zeta, r = self.zeta, self.omega_r

        def smooth(t):
            return zeta * r * np.exp(-r * np.asarray(t, dtype=float))

        return MemoryKernel(0.0, smooth, delta_fraction=1.0, decay_rate=r)

    def scales(self):
        return (self.omega_r,)

    def to_dict(self):
        return {"kind": self.kind, "zeta": self.zeta, "omega_r": self.omega_r}


def electron_time(M: float, units: UnitSystem) -> float:
    """``tau_e = 2 e^2 / 3 M c^3``."""
    if not M > 0:
        raise DomainError("mass must be > 0")
    return units.radiation_coupling() / M


def renormalize_mass(bare_m: float, Omega: float, units: UnitSystem = REDUCED) -> float:
    """Observed mass ``M = m + 2 e^2 Omega / 3 c^3`` from the bare mass."""
    if bare_m < 0 or Omega < 0:
        raise DomainError("bare mass and cutoff must be >= 0")
    M = bare_m + units.radiation_coupling() * Omega
    if not M > 0:
        raise DomainError("renormalised mass must be > 0")
    return M


def bare_mass(M: float, Omega: float, units: UnitSystem = REDUCED) -> float:
    """Bare mass ``m = M (1 - tau_e Omega)``; requires ``Omega <= 1/tau_e``."""
    if Omega < 0:
        raise DomainError("cutoff must be >= 0")
    x = electron_time(M, units) * Omega
    if x > 1.0 + _BOUND_SLACK:
        raise CausalityError(
            f"Omega = {Omega:g} exceeds 1/tau_e = {1 / electron_time(M, units):g}; bare mass would be negative"
        )
    return max(M * (1.0 - x), 0.0) if x < 1.0 - _BOUND_SLACK else 0.0


@dataclass(frozen=True)
class BlackbodyRadiation(BathModel):
    """Radiation-field bath of a charged particle with form factor cutoff ``Omega``.

    ``M`` is the observed (renormalised) mass; ``Omega <= 1/tau_e``.
    """

    M: float
    Omega: float
    units: UnitSystem = REDUCED
    kind = "blackbody"
    zero_power = 2.0

    def __post_init__(self):
        if not (self.M > 0 and self.Omega > 0):
            raise DomainError("M and Omega must be > 0")
        bare_mass(self.M, self.Omega, self.units)

    @property
    def tau_e(self) -> float:
        return electron_time(self.M, self.units)

    @property
    def bare_mass(self) -> float:
        return bare_mass(self.M, self.Omega, self.units)

    @property
    def plateau(self):
        return self.units.radiation_coupling() * self.Omega**2

    def spectral_distribution(self, omega):
        w = _real_freq(omega)
        om = self.Omega
        out = self.units.radiation_coupling() * w**2 * om**2 / (w**2 + om**2)
        return _out(out, omega)

    def spectral_excess(self, omega):
        w = _real_freq(omega)
        return _out(-self.plateau * self.Omega**2 / (w**2 + self.Omega**2), omega)

    def memory_fourier(self, z):
        zz = _uhp(z)
        return _out(self.plateau * zz / (zz + 1j * self.Omega), z)

    def memory_fourier_derivative(self, z):
        zz = np.asarray(z, dtype=complex)
        return _out(self.plateau * 1j * self.Omega / (zz + 1j * self.Omega) ** 2, z)

    def memory_kernel(self):
        M, om, tau = self.M, self.Omega, self.tau_e

        def smooth(t):
            return -M * om**3 * tau * np.exp(-om * np.asarray(t, dtype=float))

        # written with a symmetric delta: 2 delta(t) contributes M Omega^2 tau_e
        return MemoryKernel(2 * M * om**2 * tau, smooth, delta_fraction=0.5, decay_rate=om)

    def scales(self):
        return (self.Omega,)

    def to_dict(self):
        return {"kind": self.kind, "M": self.M, "Omega": self.Omega, "units": self.units.to_dict()}


_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True, eq=False)
class TabulatedImpedance(BathModel):
    """Bath given by samples of ``Re mu(w) >= 0`` on an increasing grid.

    ``mu(z)`` is reconstructed from the samples by the Kramers-Kronig
    (Stieltjes) relation, using the monotone-cubic interpolant on the grid and
    constant extension of the end values outside it. Direct queries of the
    spectral distribution outside the grid raise :class:`ExtrapolationError`.
    """

    table: SampledFunction
    kind = "tabulated"

    def __post_init__(self):
        tb = self.table
        if tb.x.size < 4 or not tb.is_increasing:
            raise FormatError("tabulated bath needs >= 4 strictly increasing frequencies")
        if tb.x[0] <= 0:
            raise FormatError("tabulated frequencies must be > 0")
        y = np.asarray(tb.y, dtype=float)
        if np.any(y < 0) or not np.all(np.isfinite(y)):
            raise FormatError("tabulated Re mu must be finite and >= 0")
        object.__setattr__(self, "_interp", PchipInterpolator(tb.x, y, extrapolate=False))
        grid = tb.x
        h = np.diff(grid)
        nodes = grid[:-1, None] + 0.5 * h[:, None] * (_GL_X[None, :] + 1.0)
        weights = 0.5 * h[:, None] * _GL_W[None, :]
        object.__setattr__(self, "_nodes", nodes.ravel())
        object.__setattr__(self, "_weights", weights.ravel())
        object.__setattr__(self, "_node_vals", self._ext(nodes.ravel()))

    @classmethod
    def from_csv(cls, path):
        cols, header = read_csv(path, ["omega", "re_mu"])
        return cls(SampledFunction(cols["omega"], cols["re_mu"], {"source": str(path), **header}))

    @property
    def omega_min(self):
        return float(self.table.x[0])

    @property
    def omega_max(self):
        return float(self.table.x[-1])

    def _ext(self, w):
        """Interpolant with constant extension, clipped at zero."""
        w = np.asarray(w, dtype=float)
        x, y = self.table.x, np.asarray(self.table.y, dtype=float)
        inside = self._interp(np.clip(w, x[0], x[-1]))
        return np.maximum(inside, 0.0)

    def spectral_distribution(self, omega):
        w = _real_freq(omega)
        if np.any(w < self.omega_min) or np.any(w > self.omega_max):
            raise ExtrapolationError(
                f"omega outside tabulated range [{self.omega_min:g}, {self.omega_max:g}]"
            )
        return _out(self._ext(w), omega)

    def re_mu_extended(self, omega):
        # edge values held constant outside the grid, as in the reconstruction
        return _out(self._ext(_real_freq(omega)), omega)

    def _imag_on_axis(self, w):
        """``Im mu(w)`` for ``w > 0`` by subtracted principal-value quadrature."""
        w = np.atleast_1d(np.asarray(w, dtype=float))
        grid = self.table.x
        g0, g1 = grid[0], grid[-1]
        r0, r1 = self._ext(g0), self._ext(g1)
        X, W, RX = self._nodes, self._weights, self._node_vals
        out = np.empty(w.size)
        for s in range(0, w.size, 128):
            ws = w[s:s + 128]
            rw = self._ext(ws)
            num = RX[None, :] - rw[:, None]
            den = ws[:, None] ** 2 - X[None, :] ** 2
            with np.errstate(divide="ignore", invalid="ignore"):
                contrib = np.sum(np.where(den != 0, W * num / den, 0.0), axis=1)
            # redo the interval containing w with a split at w
            j = np.searchsorted(grid, ws) - 1
            inside = (j >= 0) & (j < grid.size - 1)
            for i in np.flatnonzero(inside):
                a, b, wi = grid[j[i]], grid[j[i] + 1], ws[i]
                sl = slice(8 * j[i], 8 * j[i] + 8)
                with np.errstate(divide="ignore", invalid="ignore"):
                    old = np.sum(np.where(den[i, sl] != 0, W[sl] * num[i, sl] / den[i, sl], 0.0))
                new = 0.0
                for lo, hi in ((a, wi), (wi, b)):
                    if hi - lo <= 0:
                        continue
                    xn = lo + 0.5 * (hi - lo) * (_GL_X + 1.0)
                    wn = 0.5 * (hi - lo) * _GL_W
                    new += np.sum(wn * (self._ext(xn) - rw[i]) / (wi**2 - xn**2))
                contrib[i] += new - old
            lo_tail = (r0 - rw) * np.log(np.abs((ws + g0) / (ws - g0))) / (2 * ws)
            hi_tail = -(r1 - rw) * np.log(np.abs((g1 + ws) / (g1 - ws))) / (2 * ws)
            lo_tail = np.where(np.isfinite(lo_tail), lo_tail, 0.0)
            hi_tail = np.where(np.isfinite(hi_tail), hi_tail, 0.0)
            out[s:s + 128] = 2 * ws / np.pi * (contrib + lo_tail + hi_tail)
        return out

    def _off_axis(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        grid = self.table.x
        g0, g1 = grid[0], grid[-1]
        r0, r1 = self._ext(g0), self._ext(g1)
        X, W, RX = self._nodes, self._weights, self._node_vals
        out = np.empty(z.size, dtype=complex)
        for s in range(0, z.size, 128):
            zs = z[s:s + 128]
            body = np.sum(W * RX / (X[None, :] ** 2 - zs[:, None] ** 2), axis=1)
            low = (np.log(g0 - zs) - np.log(-zs) - np.log(g0 + zs) + np.log(zs)) / (2 * zs)
            high = -(np.log(g1 - zs) - np.log(g1 + zs)) / (2 * zs)
            out[s:s + 128] = -2j * zs / np.pi * (body + r0 * low + r1 * high)
        return out

    def memory_fourier(self, z):
        zz = np.atleast_1d(_uhp(z))
        out = np.empty(zz.shape, dtype=complex)
        axis = zz.imag == 0
        if axis.any():
            w = zz.real[axis]
            aw = np.abs(w)
            re = self._ext(aw)
            im = np.zeros_like(aw)
            nz = aw > 0
            im[nz] = self._imag_on_axis(aw[nz]) * np.sign(w[nz])
            out[axis] = re + 1j * im
        if (~axis).any():
            out[~axis] = self._off_axis(zz[~axis])
        return out[0] if np.ndim(z) == 0 else out.reshape(np.shape(z))

    def scales(self):
        y = np.asarray(self.table.y, dtype=float)
        # frequency where the spectrum carries its weight
        wpk = float(self.table.x[np.argmax(y * self.table.x)]) if y.any() else self.omega_max
        return (wpk,)

    def to_dict(self):
        return {
            "kind": self.kind,
            "n_points": int(self.table.x.size),
            "omega_min": self.omega_min,
            "omega_max": self.omega_max,
            "source": self.table.meta.get("source", "in-memory"),
        }


def make_bath(kind: str, units: UnitSystem = REDUCED, **params) -> BathModel:
    """Construct a bath from its kind name and parameters (used by the CLI)."""
    kind = kind.lower()
    if kind == "ohmic":
        return Ohmic(params["zeta"])
    if kind == "single_relaxation":
        return SingleRelaxation(params["zeta"], params["omega_r"])
    if kind == "blackbody":
        return BlackbodyRadiation(params["M"], params["Omega"], units)
    if kind == "tabulated":
        return TabulatedImpedance.from_csv(params["table"])
    raise DomainError(f"unknown bath kind {kind!r}")
