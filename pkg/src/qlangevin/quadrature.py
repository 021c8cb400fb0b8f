"""Semi-infinite spectral integrals with thermal factors and cos/sin tails.

The engine integrates ``g(w) = envelope(w) * thermal(w) * osc(w, t)`` over
``(0, inf)`` (or ``(0, upper]``):

* ``(0, w_break]`` by adaptive Gauss-Kronrod (7/15) panels, graded
  geometrically towards the origin; the last sliver ``(0, b0]`` is integrated
  from the declared power-law behaviour at zero.
* beyond ``w_break`` non-oscillatory pieces use doubling panels with a
  geometric remainder estimate, and oscillatory pieces use half-period panels
  aligned to the zeros of cos/sin, summed with Euler (repeated averaging)
  acceleration.

Tolerances are interpreted in normalised units: ``abs_tol`` is relative to
``max|g| * w_ref`` where ``w_ref`` is the largest characteristic frequency,
so Gaussian-CGS and reduced-unit problems behave alike.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Callable, NamedTuple

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConvergenceError, DomainError
from .sampling import SampledFunction
from .units import REDUCED, ThermalState, UnitSystem, coth_thermal


class Oscillation(str, Enum):
    NONE = "none"
    COS = "cos"
    SIN = "sin"
    ONE_MINUS_COS = "one_minus_cos"


class TailStrategy(str, Enum):
    EXPONENTIAL_TAIL = "exponential_tail"
    ASYMPTOTIC_FILON = "asymptotic_filon"


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_panels: int = 200_000
    tail_strategy: TailStrategy = TailStrategy.ASYMPTOTIC_FILON

    def __post_init__(self):
        object.__setattr__(self, "tail_strategy", TailStrategy(self.tail_strategy))
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.max_panels < 64:
            raise DomainError("max_panels must be >= 64")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tail_strategy"] = self.tail_strategy.value
        return d


@dataclass(frozen=True)
class SpectralIntegrand:
    """Description of a spectral integrand.

    ``zero_behavior`` is the power ``p`` with ``envelope*thermal ~ w**p`` as
    ``w -> 0``; the oscillation factor adds 2 (1 - cos) or 1 (sin).
    ``scales`` are characteristic frequencies (resonances, cutoffs, decay
    rates); they become breakpoints and set ``w_break``.
    """

    envelope: Callable[[np.ndarray], np.ndarray]
    thermal: ThermalState | None = None
    units: UnitSystem = REDUCED
    oscillation: Oscillation = Oscillation.NONE
    t: float = 0.0
    zero_behavior: float = 0.0
    scales: tuple = ()
    breakpoints: tuple = ()
    upper: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "oscillation", Oscillation(self.oscillation))

    @property
    def effective_power(self) -> float:
        extra = {Oscillation.ONE_MINUS_COS: 2.0, Oscillation.SIN: 1.0}.get(self.oscillation, 0.0)
        return self.zero_behavior + extra

    def smooth_part(self, w):
        """``envelope * thermal`` without the oscillating factor."""
        out = np.asarray(self.envelope(w), dtype=float)
        if self.thermal is not None:
            out = out * coth_thermal(w, self.thermal, self.units)
        return out


class QuadResult(NamedTuple):
    value: float
    error: float


# Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15)
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[-2::-1]])
_KW = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[-2::-1]])
_GW = np.zeros(15)
_GW[[1, 3, 5]] = _WG[:3]
_GW[7] = _WG[3]
_GW[[13, 11, 9]] = _WG[:3]
_EPS = np.finfo(float).eps

# geometric grading depth towards the origin and towards infinity
_LADDER = 60
# smallest nonzero |t| * w_ref accepted for oscillatory integrands
_MIN_TW = 5e-14


def _gk15(g, a, b):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    x = c[:, None] + h[:, None] * _NODES[None, :]
    fx = np.asarray(g(x.ravel()), dtype=float).reshape(x.shape)
    if not np.all(np.isfinite(fx)):
        raise ConvergenceError("integrand returned non-finite values")
    k = h * (fx @ _KW)
    gs = h * (fx @ _GW)
    resabs = np.abs(h) * (np.abs(fx) @ _KW)
    err = np.maximum(np.abs(k - gs), 50 * _EPS * resabs)
    return k, err


def _adaptive(g, breaks, rel_tol, abs_floor, max_panels):
    """Adaptive GK15 over consecutive panels ``breaks[i], breaks[i+1]``.

    Returns ``(a, b, values, errors)`` sorted by left endpoint.
    """
    breaks = np.asarray(breaks, dtype=float)
    a, b = breaks[:-1].copy(), breaks[1:].copy()
    k, e = _gk15(g, a, b)
    while True:
        total = k.sum()
        err = e.sum()
        tol = max(abs_floor, rel_tol * abs(total))
        if err <= tol:
            break
        splittable = (b - a) > 64 * _EPS * np.maximum(np.abs(a), np.abs(b))
        cand = splittable & (e > tol / (2 * a.size))
        if not cand.any():
            cand = splittable & (e == e[splittable].max()) if splittable.any() else cand
            if not cand.any():
                break  # roundoff limited; the error estimate says so honestly
        idx = np.flatnonzero(cand)
        room = max_panels - a.size
        if room <= 0:
            raise ConvergenceError(
                f"no convergence within {max_panels} panels", value=float(total), error_estimate=float(err)
            )
        if idx.size > room:
            idx = idx[np.argsort(e[idx])[::-1][:room]]
        mid = 0.5 * (a[idx] + b[idx])
        na = np.concatenate([a[idx], mid])
        nb = np.concatenate([mid, b[idx]])
        nk, ne = _gk15(g, na, nb)
        keep = np.ones(a.size, dtype=bool)
        keep[idx] = False
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        k = np.concatenate([k[keep], nk])
        e = np.concatenate([e[keep], ne])
    order = np.argsort(a, kind="stable")
    return a[order], b[order], k[order], e[order]


def _euler_sum(terms):
    """Accelerated sum of an alternating series by repeated averaging.

    Returns ``(value, error_estimate)``.
    """
    s = np.cumsum(terms)
    if s.size < 4:
        return float(s[-1]), float(abs(terms[-1]))
    levels = s.size // 2
    prev_last = s[-1]
    cur = s
    for _ in range(levels):
        prev_last = cur[-1]
        cur = 0.5 * (cur[:-1] + cur[1:])
    value = cur[-1]
    err = abs(cur[-1] - cur[-2]) + abs(cur[-1] - prev_last)
    return float(value), float(err)


class _Problem:
    """Normalised, vectorised form of a :class:`SpectralIntegrand`."""

    def __init__(self, integrand: SpectralIntegrand, spec: QuadratureSpec):
        self.ig = integrand
        self.spec = spec
        self.t = abs(float(integrand.t))
        self.osc = integrand.oscillation
        scales = [float(s) for s in integrand.scales if s and np.isfinite(s) and s > 0]
        self.w_ref = max(scales) if scales else 1.0
        wb = 10.0 * self.w_ref
        if self.osc is not Oscillation.NONE and self.t > 0:
            if self.t * self.w_ref < _MIN_TW:
                raise DomainError(f"|t| * w_ref = {self.t * self.w_ref:.3g} is below the resolvable {_MIN_TW:g}")
            wb = max(wb, 50.0 / self.t)
        self.w_break = min(wb, integrand.upper)
        probe = self.w_ref * np.geomspace(1e-3, 1e3, 61)
        probe = probe[probe < integrand.upper]
        if probe.size == 0:
            probe = np.array([0.5 * integrand.upper])
        with np.errstate(all="ignore"):
            vals = np.abs(self.full(probe))
        vals = vals[np.isfinite(vals)]
        self.g_scale = float(vals.max()) if vals.size and vals.max() > 0 else 1.0
        self.abs_floor = spec.abs_tol * self.g_scale * self.w_ref

    def full(self, w):
        w = np.asarray(w, dtype=float)
        base = self.ig.smooth_part(w)
        t = self.t
        if self.osc is Oscillation.COS:
            return base * np.cos(w * t)
        if self.osc is Oscillation.SIN:
            return base * np.sin(w * t)
        if self.osc is Oscillation.ONE_MINUS_COS:
            return base * (2.0 * np.sin(0.5 * w * t) ** 2)
        return base

    def smooth(self, w):
        return self.ig.smooth_part(np.asarray(w, dtype=float))

    def cos_part(self, w):
        w = np.asarray(w, dtype=float)
        return self.ig.smooth_part(w) * np.cos(w * self.t)


def _body_breaks(prob: _Problem, upper: float):
    depth = _LADDER + max(0, math.ceil(math.log2(upper / (10.0 * prob.w_ref))))
    pts = [upper * 2.0 ** (-np.arange(depth + 1, dtype=float))]
    extra = [float(x) for x in (*prob.ig.scales, *prob.ig.breakpoints)]
    pts.append(np.array([x for x in extra if 0 < x < upper], dtype=float))
    if prob.osc is not Oscillation.NONE and prob.t > 0:
        n = int(math.floor(upper * prob.t / math.pi))
        if n > prob.spec.max_panels:
            raise ConvergenceError(f"{n} half-periods below w_break exceed the panel budget")
        pts.append(math.pi / prob.t * np.arange(1, n + 1))
    br = np.unique(np.concatenate(pts))
    return br[(br > 0) & (br <= upper)]


def _integrate_body(prob: _Problem, upper: float, g):
    br = _body_breaks(prob, upper)
    b0 = br[0]
    q = prob.ig.effective_power
    if q <= -1:
        raise DomainError(f"integrand ~ w**{q} is not integrable at the origin")
    a, b, k, e = _adaptive(g, br, prob.spec.rel_tol, prob.abs_floor, prob.spec.max_panels)
    g0 = float(np.asarray(g(np.array([b0])))[0])
    first = g0 * b0 / (q + 1.0)
    return k.sum() + first, e.sum() + abs(first)


def _geometric_tail(prob: _Problem, start: float, g):
    """Integral of a non-oscillatory, decaying ``g`` over ``[start, inf)``."""
    ladder = start * 2.0 ** np.arange(_LADDER + 1, dtype=float)
    a, b, k, e = _adaptive(g, ladder, prob.spec.rel_tol, prob.abs_floor, prob.spec.max_panels)
    seg = np.searchsorted(ladder, a, side="right") - 1
    per = np.bincount(seg, weights=k, minlength=_LADDER)
    total = k.sum()
    err = e.sum()
    last, prev = per[-1], per[-2]
    if last != 0 and prev != 0 and 0 < last / prev < 1:
        r = last / prev
        rem = last * r / (1 - r)
        total += rem
        err += abs(rem)
    elif last != 0:
        err += abs(last) * 10
    return total, err


def _alternating_tail(prob: _Problem, start: float, g):
    """Integral of ``g`` (cos- or sin-modulated) over ``[start, inf)``.

    ``start`` must be a zero of the oscillating factor.
    """
    half = math.pi / prob.t
    n = 64
    budget = prob.spec.max_panels
    while True:
        edges = start + half * np.arange(n + 1)
        a, b, k, e = _adaptive(g, edges, prob.spec.rel_tol, prob.abs_floor, budget)
        seg = np.minimum(((a - start) / half + 1e-9).astype(int), n - 1)
        terms = np.bincount(seg, weights=k, minlength=n)
        quad_err = e.sum()
        value, acc_err = _euler_sum(terms)
        tol = max(prob.abs_floor, prob.spec.rel_tol * abs(value))
        if acc_err <= tol or 2 * n > budget:
            return value, acc_err + quad_err
        n *= 2


def _first_zero(prob: _Problem, w: float, kind: Oscillation):
    half = math.pi / prob.t
    if kind is Oscillation.SIN:
        k = math.ceil(w / half)
        return k * half
    k = math.ceil(w / half - 0.5)
    return (k + 0.5) * half


def integrate_spectral(integrand: SpectralIntegrand, spec: QuadratureSpec | None = None) -> QuadResult:
    """Integrate a spectral integrand over ``(0, inf)``.

    Returns ``QuadResult(value, error)``. Raises :class:`ConvergenceError`
    (carrying the partial value) if the panel budget is exhausted.
    """
    spec = spec or QuadratureSpec()
    osc = integrand.oscillation
    t = float(integrand.t)
    if osc in (Oscillation.ONE_MINUS_COS, Oscillation.SIN) and t == 0:
        return QuadResult(0.0, 0.0)
    sign = -1.0 if (osc is Oscillation.SIN and t < 0) else 1.0
    if osc is Oscillation.COS and t == 0:
        integrand = _replace(integrand, oscillation=Oscillation.NONE)
        osc = Oscillation.NONE
    prob = _Problem(integrand, spec)
    finite_upper = math.isfinite(integrand.upper)

    if osc is Oscillation.NONE:
        body_end = integrand.upper if finite_upper else prob.w_break
        v, e = _integrate_body(prob, body_end, prob.full)
        if not finite_upper:
            tv, te = _geometric_tail(prob, body_end, prob.full)
            v, e = v + tv, e + te
        return QuadResult(sign * float(v), float(e))

    if finite_upper:
        v, e = _integrate_body(prob, integrand.upper, prob.full)
        return QuadResult(sign * float(v), float(e))

    kind = Oscillation.SIN if osc is Oscillation.SIN else Oscillation.COS
    start = _first_zero(prob, prob.w_break, kind)
    v, e = _integrate_body(prob, start, prob.full)
    if spec.tail_strategy is TailStrategy.ASYMPTOTIC_FILON:
        if osc is Oscillation.ONE_MINUS_COS:
            sv, se = _geometric_tail(prob, start, prob.smooth)
            cv, ce = _alternating_tail(prob, start, prob.cos_part)
            tv, te = sv - cv, se + ce
        else:
            tv, te = _alternating_tail(prob, start, prob.full)
    else:
        tv, te = _geometric_tail(prob, start, prob.full)
    return QuadResult(sign * float(v + tv), float(e + te))


def _replace(integrand: SpectralIntegrand, **changes) -> SpectralIntegrand:
    from dataclasses import replace

    return replace(integrand, **changes)


# --- batch transforms of sampled spectra -------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _spline_pieces(spectrum: SampledFunction):
    w = spectrum.x
    if not spectrum.is_increasing or w[0] < 0:
        raise DomainError("spectrum abscissae must be increasing and non-negative")
    y = np.asarray(spectrum.y, dtype=float)
    cs = CubicSpline(w, y, bc_type="not-a-knot", extrapolate=True)
    lefts = w[:-1]
    widths = np.diff(w)
    coef = cs.c  # (4, n-1), highest power first, local variable s = w - left
    if w[0] > 0:
        # extend the first cubic piece down to the origin
        c0 = coef[:, 0]
        x0 = w[0]
        # re-expand p(s), s = w - x0, in the variable u = w
        q = np.poly1d(c0)(np.poly1d([1.0, -x0]))
        qc = np.zeros(4)
        qc[4 - len(q.c):] = q.c
        lefts = np.concatenate([[0.0], lefts])
        widths = np.concatenate([[x0], widths])
        coef = np.concatenate([qc[:, None], coef], axis=1)
    return lefts, widths, coef


def _piecewise_fourier(lefts, widths, coef, t):
    """``sum_i int_0^h_i p_i(s) exp(i t (left_i + s)) ds`` for scalar ``t``."""
    c3, c2, c1, c0 = coef
    h = widths
    small = np.abs(t) * h < 1.0
    total = 0.0 + 0.0j
    if small.any():
        hs = h[small]
        s = 0.5 * hs[:, None] * (_GL_X[None, :] + 1.0)
        p = ((c3[small, None] * s + c2[small, None]) * s + c1[small, None]) * s + c0[small, None]
        ph = np.exp(1j * t * (lefts[small, None] + s))
        total += np.sum(0.5 * hs * ((p * ph) @ _GL_W))
    big = ~small
    if big.any():
        hb = h[big]
        a3, a2, a1, a0 = c3[big], c2[big], c1[big], c0[big]
        it = 1j * t

        def antider(s):
            p = ((a3 * s + a2) * s + a1) * s + a0
            d1 = (3 * a3 * s + 2 * a2) * s + a1
            d2 = 6 * a3 * s + 2 * a2
            d3 = 6 * a3
            return np.exp(it * s) * (p / it - d1 / it**2 + d2 / it**3 - d3 / it**4)

        j = antider(hb) - antider(np.zeros_like(hb))
        total += np.sum(np.exp(it * lefts[big]) * j)
    return total


def inverse_cos_transform(values, t_grid, spec: QuadratureSpec | None = None, kind: str = "cos", **integrand_kw):
    """Batch ``int_0^inf S(w) cos(w t) dw`` over ``t_grid``.

    ``values`` is either a :class:`SampledFunction` spectrum (integrated
    exactly against its cubic-spline interpolant, truncated at the last
    grid point) or a callable envelope (each ``t`` goes through
    :func:`integrate_spectral`). ``kind="sin"`` gives the sine transform.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if kind not in ("cos", "sin"):
        raise DomainError("kind must be 'cos' or 'sin'")
    out = np.empty(t_grid.size)
    if isinstance(values, SampledFunction):
        if np.all(np.asarray(values.y) == 0):
            out[:] = 0.0
        else:
            lefts, widths, coef = _spline_pieces(values)
            for i, t in enumerate(t_grid):
                z = _piecewise_fourier(lefts, widths, coef, float(t))
                out[i] = z.real if kind == "cos" else z.imag
        meta = {"transform": kind, "source": "sampled"}
    else:
        osc = Oscillation.COS if kind == "cos" else Oscillation.SIN
        for i, t in enumerate(t_grid):
            ig = SpectralIntegrand(values, oscillation=osc, t=float(t), **integrand_kw)
            out[i] = integrate_spectral(ig, spec).value
        meta = {"transform": kind, "source": "callable", "quadrature": (spec or QuadratureSpec()).to_dict()}
    return SampledFunction(t_grid, out, meta)
