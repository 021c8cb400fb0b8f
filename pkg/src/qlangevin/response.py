"""Susceptibility, Green function and mean motion of a particle in a bath."""
from __future__ import annotations

import math
from dataclasses import dataclass
from math import factorial

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.signal import fftconvolve

from .bath import BathModel, BlackbodyRadiation, Ohmic, SingleRelaxation, electron_time
from .errors import CausalityError, DomainError, PoleError, UnsupportedOperation
from .quadrature import Oscillation, QuadratureSpec, SpectralIntegrand, integrate_spectral
from .sampling import SampledFunction
from .units import REDUCED, UnitSystem

# relative switch-over for the series form of sin(x)/x, sinh(x)/x
_SERIES_BAND = 1e-4


@dataclass(frozen=True)
class SystemConfig:
    """Particle mass and harmonic stiffness ``K`` (``K = 0``: free particle).

    For a radiation bath ``mass`` is the observed mass ``M``.
    """

    mass: float
    stiffness: float = 0.0
    units: UnitSystem = REDUCED

    def __post_init__(self):
        if not self.mass > 0:
            raise DomainError("mass must be > 0")
        if not self.stiffness >= 0:
            raise DomainError("stiffness must be >= 0")

    @property
    def omega0(self) -> float:
        return math.sqrt(self.stiffness / self.mass)

    @property
    def is_free(self) -> bool:
        return self.stiffness == 0

    def to_dict(self):
        return {"mass": self.mass, "stiffness": self.stiffness, "units": self.units.to_dict()}


def _sinc_like(u):
    """``sin(sqrt(u))/sqrt(u)`` continued to ``sinh`` for ``u < 0``."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    small = np.abs(u) < _SERIES_BAND**2
    us = u[small]
    out[small] = 1.0 - us / 6.0 + us**2 / 120.0
    pos = (~small) & (u > 0)
    r = np.sqrt(u[pos])
    out[pos] = np.sin(r) / r
    neg = (~small) & (u < 0)
    r = np.sqrt(-u[neg])
    out[neg] = np.sinh(r) / r
    return out


def _cos_like(u):
    """``cos(sqrt(u))`` continued to ``cosh`` for ``u < 0``."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    small = np.abs(u) < _SERIES_BAND**2
    us = u[small]
    out[small] = 1.0 - us / 2.0 + us**2 / 24.0
    pos = (~small) & (u > 0)
    out[pos] = np.cos(np.sqrt(u[pos]))
    neg = (~small) & (u < 0)
    out[neg] = np.cosh(np.sqrt(-u[neg]))
    return out


class ResponseFunction:
    """Generalized susceptibility ``alpha(z) = 1/(-m z^2 - i z mu(z) + K)``.

    For a radiation bath the inertial coefficient is the bare mass
    ``M (1 - tau_e Omega)``; ``system.mass`` must equal the bath's ``M``.
    At construction the absence of upper-half-plane poles is checked by an
    argument-principle contour count (``check_poles=False`` skips it).
    """

    def __init__(self, system: SystemConfig, bath: BathModel, check_poles: bool = True):
        self.system = system
        self.bath = bath
        if isinstance(bath, BlackbodyRadiation):
            if not math.isclose(system.mass, bath.M, rel_tol=1e-12):
                raise DomainError("system mass must equal the radiation bath's observed mass M")
            self.inertia = bath.bare_mass
        else:
            self.inertia = system.mass
        self.K = system.stiffness
        self._poly = self._rational_form()
        if check_poles:
            n = self.count_upper_half_plane_poles()
            if n:
                raise CausalityError(f"susceptibility has {n} pole(s) in the upper half plane")

    # --- frequency domain -------------------------------------------------
    def denominator(self, z):
        """``D(z) = -m z^2 - i z mu(z) + K``."""
        z = np.asarray(z, dtype=complex)
        return -self.inertia * z**2 - 1j * z * self.bath.memory_fourier(z) + self.K

    def alpha(self, z):
        """``alpha(z)`` for ``Im z >= 0``."""
        d = self.denominator(z)
        if np.any(d == 0):
            raise PoleError("alpha evaluated at a pole")
        return 1.0 / d

    def susceptibility(self, omega):
        """``alpha(omega + i0)`` on the real axis."""
        w = np.asarray(omega, dtype=float)
        if self.K == 0 and np.any(w == 0):
            raise PoleError("free particle: alpha has a pole at omega = 0")
        out = self.alpha(w.astype(complex))
        return out.item() if np.ndim(omega) == 0 else out

    def im_alpha_fd(self, omega):
        """``omega |alpha|^2 Re mu`` evaluated in real arithmetic."""
        w = np.asarray(omega, dtype=float)
        mu = np.asarray(self.bath.memory_fourier(w.astype(complex)), dtype=complex)
        re_mu = np.asarray(self.bath.re_mu_extended(np.abs(w)), dtype=float)
        re_d = self.K - self.inertia * w**2 + w * mu.imag
        im_d = w * re_mu
        out = w * re_mu / (re_d**2 + im_d**2)
        return out.item() if np.ndim(omega) == 0 else out

    def dlog_alpha(self, omega):
        """``d log alpha / d omega = -D'(omega)/D(omega)`` on the real axis."""
        w = np.asarray(omega, dtype=float).astype(complex)
        mu = self.bath.memory_fourier(w)
        dmu = self.bath.memory_fourier_derivative(w)
        d = -self.inertia * w**2 - 1j * w * mu + self.K
        dd = -2 * self.inertia * w - 1j * mu - 1j * w * dmu
        return -dd / d

    # --- characteristic scales -----------------------------------------------
    @property
    def gamma(self) -> float:
        """Low-frequency damping rate ``Re mu(0) / m`` (0 if undefined)."""
        mu0 = float(np.real(self.bath.memory_fourier(0j)))
        return mu0 / self.system.mass

    def scales(self) -> tuple:
        s = [self.system.omega0, self.gamma, *self.bath.scales()]
        return tuple(x for x in s if x > 0 and math.isfinite(x))

    def breakpoints(self) -> tuple:
        """Points around a sharp resonance, for the quadrature engine."""
        w0, g = self.system.omega0, self.gamma
        if w0 <= 0 or g <= 0 or g >= w0:
            return ()
        w1 = math.sqrt(max(w0**2 - g**2 / 4, 0.0))
        pts = [w1]
        for k in (0.25, 1.0, 4.0, 16.0, 64.0):
            pts += [w1 - k * g, w1 + k * g]
        return tuple(p for p in pts if p > 0)

    @property
    def singular_at_zero(self) -> bool:
        """Free particle without low-frequency friction.

        ``Im alpha`` then carries a distribution at ``omega = 0`` (ballistic
        motion) that a frequency quadrature cannot see.
        """
        return self.K == 0 and self.bath.zero_power > 0

    def require_regular(self):
        if self.singular_at_zero:
            raise UnsupportedOperation(
                "free particle without low-frequency friction: frequency integrals miss the ballistic part")

    def im_alpha_zero_power(self) -> float:
        """Power ``p`` with ``Im alpha ~ w**p`` as ``w -> 0``."""
        if self.K == 0:
            return -1.0
        return 1.0 + self.bath.zero_power

    # --- poles ------------------------------------------------------------------
    def count_upper_half_plane_poles(self, max_refine: int = 40) -> int:
        """Winding number of ``D(z)`` around a large rectangle above the real axis."""
        s = max(self.scales(), default=1.0)
        X = 1e3 * s
        eps = 1e-7 * s
        u = np.sinh(np.linspace(-1, 1, 801) * math.asinh(X / (1e-3 * s))) * 1e-3 * s
        bottom = u + 1j * eps
        y = np.geomspace(eps, X, 200)
        right = X + 1j * y[1:]
        top = u[::-1] + 1j * X
        left = -X + 1j * y[::-1][1:-1]
        z = np.concatenate([bottom, right, top[1:], left, bottom[:1]])
        d = self.denominator(z)
        for _ in range(max_refine):
            ph = np.angle(d)
            jump = np.abs(np.angle(np.exp(1j * np.diff(ph))))
            bad = np.flatnonzero(jump > 0.3)
            if bad.size == 0:
                break
            mids = 0.5 * (z[bad] + z[bad + 1])
            z = np.insert(z, bad + 1, mids)
            d = np.insert(d, bad + 1, self.denominator(mids))
        dphi = np.angle(d[1:] / d[:-1])
        return int(round(dphi.sum() / (2 * math.pi)))

    def _rational_form(self):
        """Numerator and denominator polynomials of alpha for rational baths."""
        m, K, b = self.inertia, self.K, self.bath
        if isinstance(b, SingleRelaxation):
            r, zeta = b.omega_r, b.zeta
            num = np.array([-1j, r])
            den = np.array([1j * m, -m * r, -1j * (K + zeta * r), K * r])
        elif isinstance(b, BlackbodyRadiation):
            om, rinf = b.Omega, b.plateau
            num = np.array([1.0, 1j * om])
            den = np.array([-m, -1j * (m * om + rinf), K, 1j * K * om])
        elif isinstance(b, Ohmic):
            num = np.array([1.0 + 0j])
            den = np.array([-m, -1j * b.zeta, K])
        else:
            return None
        den = np.trim_zeros(den.astype(complex), "f")
        return num.astype(complex), den

    # --- time domain --------------------------------------------------------------
    def green(self, t):
        """Causal Green function ``G(t)``; exactly 0 for ``t < 0``."""
        return self._green(t, derivative=False)

    def green_dot(self, t):
        """``dG/dt`` for ``t > 0`` (``1/m`` at ``t = 0+``); 0 for ``t < 0``."""
        return self._green(t, derivative=True)

    def _green(self, t, derivative):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        pos = t >= 0
        if pos.any():
            tp = t[pos]
            if isinstance(self.bath, Ohmic):
                out[pos] = self._ohmic_green(tp, derivative)
            elif self._poly is not None:
                out[pos] = self._pole_green(tp, derivative)
            else:
                out[pos] = _numeric_green_many(self, tp, derivative)
        if not derivative:
            out[t == 0] = 0.0
        return out.item() if np.ndim(t) == 0 else out

    def _ohmic_green(self, t, derivative):
        m = self.system.mass
        g = self.gamma
        if self.K == 0:
            if derivative:
                return np.exp(-g * t) / m
            return -np.expm1(-g * t) / (m * g)
        w1sq = self.system.omega0**2 - g**2 / 4
        u = w1sq * t**2
        damp = np.exp(-0.5 * g * t)
        overdamped = u < -1.0
        s = np.empty_like(t)
        c = np.empty_like(t)
        s[~overdamped] = t[~overdamped] * _sinc_like(u[~overdamped])
        c[~overdamped] = _cos_like(u[~overdamped])
        if overdamped.any():
            # exponentials combined with the damping factor to avoid overflow
            kap = math.sqrt(-w1sq)
            to = t[overdamped]
            ep = np.exp((kap - 0.5 * g) * to)
            em = np.exp((-kap - 0.5 * g) * to)
            if derivative:
                val = 0.5 * (ep + em) - 0.5 * g * (ep - em) / (2 * kap)
            else:
                val = (ep - em) / (2 * kap)
            res = np.empty_like(t)
            res[~overdamped] = damp[~overdamped] * (c[~overdamped] - 0.5 * g * s[~overdamped] if derivative else s[~overdamped])
            res[overdamped] = val
            return res / m
        if derivative:
            return damp * (c - 0.5 * g * s) / m
        return damp * s / m

    def _pole_green(self, t, derivative):
        num, den = self._poly
        # strip exact zeros at the origin (free particle)
        k0 = 0
        while den.size > 1 and den[-1] == 0:
            den = den[:-1]
            k0 += 1
        roots = np.roots(den) if den.size > 1 else np.array([], dtype=complex)
        lead = den[0]
        total = np.zeros(t.shape, dtype=complex)
        for i, p in enumerate(roots):
            others = np.delete(roots, i)
            dprime = lead * np.prod(p - others) * p**k0
            res = np.polyval(num, p) / dprime
            term = res * np.exp(-1j * p * t)
            total += (-1j * p) * term if derivative else term
        if k0:
            # pole of order k0 at the origin: alpha = N / (z^k0 Q)
            q = den
            q0 = np.polyval(q, 0)
            n0 = np.polyval(num, 0)
            if k0 == 1:
                total += 0 if derivative else n0 / q0
            elif k0 == 2:
                n1 = np.polyval(np.polyder(num), 0) if num.size > 1 else 0.0
                q1 = np.polyval(np.polyder(q), 0) if q.size > 1 else 0.0
                a = n1 / q0 - n0 * q1 / q0**2
                b = -1j * n0 / q0
                total += b if derivative else a + b * t
            else:
                raise UnsupportedOperation("pole of order > 2 at the origin")
        return np.real(-1j * total)


def _numeric_green_many(resp, t, derivative):
    if derivative:
        return np.array([_numeric_green_dot(resp, float(x)) for x in t])
    return np.array([green_function_numeric(resp, float(x)) for x in t])


def _numeric_green_dot(resp, t, spec=None):
    if t == 0:
        return 1.0 / resp.inertia
    tref = 1.0 / max(resp.scales(), default=1.0)
    h = 1e-6 * max(tref, t)

    def G(x):
        return green_function_numeric(resp, x, spec=spec)

    if t < 2 * h:
        d1 = (-3 * G(t) + 4 * G(t + h) - G(t + 2 * h)) / (2 * h)
        d2 = (-3 * G(t) + 4 * G(t + h / 2) - G(t + h)) / h
        return (4 * d2 - d1) / 3
    d1 = (G(t + h) - G(t - h)) / (2 * h)
    d2 = (G(t + h / 2) - G(t - h / 2)) / h
    return (4 * d2 - d1) / 3


def susceptibility(resp: ResponseFunction, omega):
    return resp.susceptibility(omega)


def green_function(resp: ResponseFunction, t):
    """Closed form where available (Ohmic, rational baths), numeric otherwise."""
    return resp.green(t)


def green_function_numeric(resp: ResponseFunction, t: float, form: str = "sine", spec: QuadratureSpec | None = None):
    """Green function by numerical inverse Fourier transform of ``alpha``.

    ``form="sine"``: ``(2/pi) int Im alpha sin(wt) dw`` for ``t > 0`` and 0
    otherwise. ``form="full"``: ``(1/pi) int [Re alpha cos(wt) + Im alpha
    sin(wt)] dw`` evaluated for any sign of ``t`` (needs ``K > 0``), which
    exposes causality numerically.
    """
    spec = spec or QuadratureSpec(rel_tol=1e-10, abs_tol=1e-13)
    resp.require_regular()
    t = float(t)
    scales, bps = resp.scales(), resp.breakpoints()
    p = resp.im_alpha_zero_power()
    if form == "sine":
        if t <= 0:
            return 0.0
        ig = SpectralIntegrand(resp.im_alpha_fd, oscillation=Oscillation.SIN, t=t,
                               zero_behavior=p, scales=scales, breakpoints=bps)
        return 2.0 / math.pi * integrate_spectral(ig, spec).value
    if form == "full":
        if resp.K == 0:
            raise DomainError("the full inverse transform needs K > 0 (alpha has a pole at 0)")
        if t == 0:
            return 0.0

        def re_alpha(w):
            return np.real(resp.susceptibility(w))

        sin_part = SpectralIntegrand(resp.im_alpha_fd, oscillation=Oscillation.SIN, t=t,
                                     zero_behavior=p, scales=scales, breakpoints=bps)
        cos_part = SpectralIntegrand(re_alpha, oscillation=Oscillation.COS, t=t,
                                     zero_behavior=0.0, scales=scales, breakpoints=bps)
        return (integrate_spectral(cos_part, spec).value + integrate_spectral(sin_part, spec).value) / math.pi
    raise DomainError("form must be 'sine' or 'full'")


def position_commutator(resp: ResponseFunction, t: float, spec: QuadratureSpec | None = None) -> float:
    """``(2/pi) int_0^inf Im alpha sin(wt) dw``; ``[x(t1), x(t1+t)] = i hbar`` times this."""
    spec = spec or QuadratureSpec(rel_tol=1e-10, abs_tol=1e-13)
    resp.require_regular()
    ig = SpectralIntegrand(resp.im_alpha_fd, oscillation=Oscillation.SIN, t=float(t),
                           zero_behavior=resp.im_alpha_zero_power(), scales=resp.scales(),
                           breakpoints=resp.breakpoints())
    return 2.0 / math.pi * integrate_spectral(ig, spec).value


def driven_mean(resp: ResponseFunction, f: SampledFunction) -> SampledFunction:
    """``<x(t)> = sum_k G(t - t_k) f(t_k) dt`` on the force's uniform grid.

    The force is taken as zero before the first sample.
    """
    dt = f.require_uniform()
    fv = np.asarray(f.y, dtype=float)
    lags = dt * np.arange(fv.size)
    g = resp.green(lags)
    x = fftconvolve(fv, g)[: fv.size] * dt
    return SampledFunction(f.x.copy(), x, {"quantity": "driven mean", "dt": dt})


def initial_value_mean(resp: ResponseFunction, x0: float, v0: float, t):
    """Mean of the initial-value solution ``m G'(t) x0 + m G(t) v0``, ``t >= 0``."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise DomainError("initial-value solution is defined for t >= 0")
    if resp.inertia == 0:
        raise UnsupportedOperation("initial-value solution needs a non-zero bare mass")
    m = resp.inertia
    out = m * resp.green_dot(t_arr) * x0 + m * resp.green(t_arr) * v0
    out = np.where(t_arr == 0, x0, out)
    return out.item() if np.ndim(t) == 0 else out


def nonrunaway_trajectory(M: float, f: SampledFunction, units: UnitSystem = REDUCED,
                          x0: float = 0.0, v0: float = 0.0) -> SampledFunction:
    """Integrate ``M x'' = f + tau_e f'`` for a point electron at the causal bound.

    ``v(t) = v0 + [int_0^t f + tau_e (f(t) - f(0))] / M``; the force samples are
    read as piecewise linear, for which both quadratures are exact.
    """
    dt = f.require_uniform()
    tau = electron_time(M, units)
    fv = np.asarray(f.y, dtype=float)
    impulse = cumulative_trapezoid(fv, dx=dt, initial=0.0)
    v = v0 + (impulse + tau * (fv - fv[0])) / M
    x = x0 + cumulative_trapezoid(v, dx=dt, initial=0.0)
    return SampledFunction(f.x.copy(), np.column_stack([x, v]),
                           {"quantity": "nonrunaway trajectory", "columns": "x,v", "tau_e": tau, "M": M})
