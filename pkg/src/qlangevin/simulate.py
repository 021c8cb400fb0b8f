"""Classical Monte Carlo: colored noise and Langevin trajectories."""
from __future__ import annotations

import math
import struct
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .bath import BathModel, Ohmic, SingleRelaxation
from .errors import BlowUpError, DomainError, EmbeddingError, FormatError, UnsupportedOperation
from .response import SystemConfig
from .sampling import SampledFunction, write_csv
from .units import REDUCED, ThermalState, UnitSystem

OVERFLOW_GUARD = 1e150
DUMP_MAGIC = b"QLEPATH1"
_BLOCK = 1024


class Scheme(str, Enum):
    EULER_MARUYAMA = "EulerMaruyama"
    STRONG_ORDER1 = "StrongOrder1"


def path_generator(seed: int, path_id: int) -> np.random.Generator:
    """Counter-based stream for one path: Philox keyed by ``(seed, path_id)``."""
    if not 0 <= seed < 2**64 or path_id < 0:
        raise DomainError("seed must be a 64-bit unsigned integer and path_id >= 0")
    return np.random.Generator(np.random.Philox(key=(int(seed) << 64) | int(path_id)))


@dataclass(frozen=True)
class SimulationPlan:
    """Everything that determines an ensemble.

    Positions (and velocities) are stored every ``record_every`` steps.
    ``x0``/``v0`` fix the initial state; when ``None`` it is drawn from the
    thermal distribution (``x = 0`` for a free particle).
    """

    system: SystemConfig
    bath: BathModel
    state: ThermalState
    dt: float
    steps: int
    n_paths: int
    seed: int = 0
    scheme: Scheme = Scheme.EULER_MARUYAMA
    record_every: int = 1
    x0: float | None = None
    v0: float | None = None
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if not isinstance(self.bath, (Ohmic, SingleRelaxation)):
            raise UnsupportedOperation("trajectories are simulated for Ohmic and single-relaxation baths")
        if not (self.dt > 0 and self.steps >= 1 and self.n_paths >= 1 and self.record_every >= 1):
            raise DomainError("dt, steps, n_paths and record_every must be positive")
        if self.steps % self.record_every:
            raise DomainError("steps must be a multiple of record_every")
        if self.dt * self.fastest_rate >= 0.1:
            raise DomainError(f"dt * max rate = {self.dt * self.fastest_rate:.3g}; must be < 0.1 for stability")
        if self.workers < 1:
            raise DomainError("workers must be >= 1")

    @property
    def gamma(self) -> float:
        return self.bath.zeta / self.system.mass

    @property
    def fastest_rate(self) -> float:
        rates = [self.gamma, self.system.omega0]
        if isinstance(self.bath, SingleRelaxation):
            rates.append(self.bath.omega_r)
        return max(rates)

    @property
    def kT(self) -> float:
        return self.state.kT(self.system.units)

    @property
    def t_grid(self) -> np.ndarray:
        return self.dt * self.record_every * np.arange(self.steps // self.record_every + 1)

    def to_dict(self) -> dict:
        return {
            "system": self.system.to_dict(), "bath": self.bath.to_dict(),
            "T": self.state.T, "classical": self.state.classical, "dt": self.dt, "steps": self.steps,
            "n_paths": self.n_paths, "seed": self.seed, "scheme": self.scheme.value,
            "record_every": self.record_every, "x0": self.x0, "v0": self.v0, "workers": self.workers,
        }


@dataclass
class TrajectoryEnsemble:
    """Recorded positions and velocities, one row per path."""

    t_grid: np.ndarray
    paths: np.ndarray
    velocities: np.ndarray
    plan: SimulationPlan
    provenance: dict = field(default_factory=dict)

    @property
    def n_paths(self) -> int:
        return self.paths.shape[0]


class _Streams:
    """Blocked standard normals from one Philox stream per path."""

    def __init__(self, seed, ids):
        self.gens = [path_generator(seed, int(i)) for i in ids]
        self.buf = None
        self.pos = _BLOCK

    def initial(self, k):
        return np.array([g.standard_normal(k) for g in self.gens]).reshape(len(self.gens), k)

    def next(self):
        if self.pos == _BLOCK:
            self.buf = np.array([g.standard_normal(_BLOCK) for g in self.gens])
            self.pos = 0
        col = self.buf[:, self.pos]
        self.pos += 1
        return col


def _initial_state(plan: SimulationPlan, streams: _Streams):
    n = len(streams.gens)
    m, K, kT = plan.system.mass, plan.system.stiffness, plan.kT
    draws = streams.initial(3)
    x = np.full(n, plan.x0) if plan.x0 is not None else (
        draws[:, 0] * math.sqrt(kT / K) if K > 0 else np.zeros(n))
    v = np.full(n, plan.v0) if plan.v0 is not None else draws[:, 1] * math.sqrt(kT / m)
    z = np.zeros(n)
    if isinstance(plan.bath, SingleRelaxation):
        z = draws[:, 2] * math.sqrt(kT * plan.bath.zeta * plan.bath.omega_r)
    return x.astype(float), v.astype(float), z


def _run_chunk(plan: SimulationPlan, ids):
    streams = _Streams(plan.seed, ids)
    m, K, dt = plan.system.mass, plan.system.stiffness, plan.dt
    x, v, z = _initial_state(plan, streams)
    n_rec = plan.steps // plan.record_every + 1
    X = np.empty((len(ids), n_rec))
    V = np.empty((len(ids), n_rec))
    X[:, 0], V[:, 0] = x, v
    heun = plan.scheme is Scheme.STRONG_ORDER1
    if isinstance(plan.bath, Ohmic):
        zeta = plan.bath.zeta
        sig = math.sqrt(2.0 * zeta * plan.kT * dt) / m

        def acc(x, v):
            return (-zeta * v - K * x) / m

        for n in range(1, plan.steps + 1):
            xi = sig * streams.next()
            a = acc(x, v)
            if heun:
                xp = x + v * dt
                vp = v + a * dt + xi
                x, v = x + 0.5 * (v + vp) * dt, v + 0.5 * (a + acc(xp, vp)) * dt + xi
            else:
                x, v = x + v * dt, v + a * dt + xi
            if n % plan.record_every == 0:
                _record(X, V, n // plan.record_every, x, v, ids)
    else:
        zeta, om = plan.bath.zeta, plan.bath.omega_r
        decay = math.exp(-om * dt)
        drag = zeta * (-math.expm1(-om * dt))
        sig = math.sqrt(plan.kT * zeta * om * (-math.expm1(-2.0 * om * dt)))
        for n in range(1, plan.steps + 1):
            xi = streams.next()
            z_new = decay * z - drag * v + sig * xi
            a = (z - K * x) / m
            if heun:
                xp = x + v * dt
                vp = v + a * dt
                x, v = x + 0.5 * (v + vp) * dt, v + 0.5 * (a + (z_new - K * xp) / m) * dt
            else:
                x, v = x + v * dt, v + a * dt
            z = z_new
            if n % plan.record_every == 0:
                _record(X, V, n // plan.record_every, x, v, ids)
    return X, V


def _record(X, V, k, x, v, ids):
    bad = ~np.isfinite(x) | (np.abs(x) > OVERFLOW_GUARD)
    if bad.any():
        i = int(ids[int(np.flatnonzero(bad)[0])])
        raise BlowUpError(f"path {i} left the overflow guard", path_index=i)
    X[:, k], V[:, k] = x, v


def integrate_langevin(plan: SimulationPlan) -> TrajectoryEnsemble:
    """Integrate the classical Langevin equation for every path of ``plan``.

    Ohmic baths use Euler-Maruyama or stochastic Heun (strong order 1 for
    additive noise). A single-relaxation bath is embedded with one auxiliary
    force variable whose Ornstein-Uhlenbeck update is exact over a step.
    """
    ids = np.arange(plan.n_paths)
    chunks = np.array_split(ids, plan.workers)
    if plan.workers == 1:
        parts = [_run_chunk(plan, ids)]
    else:
        with ThreadPoolExecutor(plan.workers) as ex:
            parts = list(ex.map(lambda c: _run_chunk(plan, c), chunks))
    X = np.concatenate([p[0] for p in parts])
    V = np.concatenate([p[1] for p in parts])
    prov = {"rng": "Philox", "key": "(seed << 64) | path_id", "seed": plan.seed}
    return TrajectoryEnsemble(plan.t_grid, X, V, plan, prov)


def integrate_memory_convolution(plan: SimulationPlan, n_paths: int | None = None) -> np.ndarray:
    """Single-relaxation paths with the memory force summed directly, O(steps^2).

    Uses the same noise and discretization as the embedded Euler-Maruyama
    scheme, so trajectories agree to round-off. Returns all positions.
    """
    if not isinstance(plan.bath, SingleRelaxation) or plan.scheme is not Scheme.EULER_MARUYAMA:
        raise UnsupportedOperation("convolution oracle covers single-relaxation Euler-Maruyama plans")
    n_paths = n_paths or plan.n_paths
    ids = np.arange(n_paths)
    streams = _Streams(plan.seed, ids)
    m, K, dt = plan.system.mass, plan.system.stiffness, plan.dt
    zeta, om = plan.bath.zeta, plan.bath.omega_r
    decay = math.exp(-om * dt)
    drag = zeta * (-math.expm1(-om * dt))
    sig = math.sqrt(plan.kT * zeta * om * (-math.expm1(-2.0 * om * dt)))
    x, v, z0 = _initial_state(plan, streams)
    N = plan.steps
    xs = np.empty((n_paths, N + 1))
    vs = np.empty((n_paths, N + 1))
    noise = np.empty((n_paths, N))
    xs[:, 0], vs[:, 0] = x, v
    powers = decay ** np.arange(N + 1)
    for n in range(N):
        noise[:, n] = sig * streams.next()
        # z_n = decay^n z_0 + sum_{k<n} decay^(n-1-k) (noise_k - drag v_k)
        w = powers[n - 1 :: -1][:n] if n else powers[:0]
        z = powers[n] * z0 + (noise[:, :n] - drag * vs[:, :n]) @ w
        xs[:, n + 1] = xs[:, n] + vs[:, n] * dt
        vs[:, n + 1] = vs[:, n] + (z - K * xs[:, n]) / m * dt
    return xs


def ensemble_msd(ens: TrajectoryEnsemble, min_paths: int = 100) -> SampledFunction:
    """``s(t) = <(x(t) - x(0))^2>`` with path-level jackknife standard errors.

    ``y`` has columns ``(s, se)``.
    """
    n = ens.n_paths
    if n < min_paths:
        raise DomainError(f"need at least {min_paths} paths for ensemble statistics")
    d = (ens.paths - ens.paths[:, :1]) ** 2
    total = d.sum(axis=0)
    s = total / n
    loo = (total[None, :] - d) / (n - 1)
    se = np.sqrt((n - 1) / n * ((loo - loo.mean(axis=0)) ** 2).sum(axis=0))
    s[0] = 0.0
    se[0] = 0.0
    return SampledFunction(ens.t_grid.copy(), np.column_stack([s, se]), {"quantity": "ensemble msd"})


def fit_diffusion(msd: SampledFunction, t_min: float) -> float:
    """Half the least-squares slope of ``s(t)`` for ``t >= t_min``."""
    t = msd.x
    s = np.asarray(msd.y)[:, 0] if np.ndim(msd.y) == 2 else np.asarray(msd.y)
    sel = t >= t_min
    if sel.sum() < 2:
        raise DomainError("fit window holds fewer than two points")
    slope = np.polyfit(t[sel], s[sel], 1)[0]
    return 0.5 * slope


def write_msd_csv(path, msd: SampledFunction, header: dict | None = None):
    y = np.asarray(msd.y)
    write_csv(path, {"t": msd.x, "s": y[:, 0], "se": y[:, 1]}, header)


def dump_paths(path, ens: TrajectoryEnsemble):
    """Raw positions: magic, uint64 n_paths, uint64 columns, float64 dt, then row-major float64."""
    X = np.ascontiguousarray(ens.paths, dtype="<f8")
    dt = float(ens.t_grid[1] - ens.t_grid[0]) if ens.t_grid.size > 1 else ens.plan.dt
    with open(path, "wb") as fh:
        fh.write(DUMP_MAGIC)
        fh.write(struct.pack("<QQd", X.shape[0], X.shape[1], dt))
        fh.write(X.tobytes())


def load_paths(path) -> tuple:
    """Inverse of :func:`dump_paths`: ``(paths, dt)``."""
    raw = Path(path).read_bytes()
    if raw[:8] != DUMP_MAGIC:
        raise FormatError("not a path dump")
    n, k, dt = struct.unpack("<QQd", raw[8:32])
    data = np.frombuffer(raw[32:], dtype="<f8")
    if data.size != n * k:
        raise FormatError("truncated path dump")
    return data.reshape(n, k).copy(), dt


# --- colored noise --------------------------------------------------------------

def noise_covariance(bath: BathModel, state: ThermalState, lags, units: UnitSystem = REDUCED):
    """Classical force covariance on a grid of lags (white noise as ``2 zeta kT/dt`` at lag 0)."""
    kT = state.kT(units)
    lags = np.abs(np.asarray(lags, dtype=float))
    if isinstance(bath, Ohmic):
        dt = lags[1] - lags[0] if lags.size > 1 else 1.0
        return np.where(lags == 0, 2.0 * bath.zeta * kT / dt, 0.0)
    if isinstance(bath, SingleRelaxation):
        return kT * bath.zeta * bath.omega_r * np.exp(-bath.omega_r * lags)
    raise UnsupportedOperation("colored noise is generated for Ohmic and single-relaxation baths")


def generate_colored_noise(bath: BathModel, state: ThermalState, t_grid, seed: int, n_paths: int = 1,
                           units: UnitSystem = REDUCED, strict: bool = False) -> SampledFunction:
    """Stationary Gaussian force samples by circulant embedding.

    The covariance on the grid is exact when the embedding is non-negative.
    Otherwise negative eigenvalues are clipped with a warning (biased), or an
    :class:`EmbeddingError` is raised when ``strict``. ``y`` has shape
    ``(len(t_grid), n_paths)``.
    """
    t = np.asarray(t_grid, dtype=float)
    sf = SampledFunction(t, np.zeros(t.size))
    dt = sf.require_uniform()
    N = t.size
    c = noise_covariance(bath, state, dt * np.arange(N), units)
    row = np.concatenate([c, c[-2:0:-1]]) if N > 2 else c
    M = row.size
    lam = np.fft.fft(row).real
    if lam.min() < -1e-10 * lam.max():
        if strict:
            raise EmbeddingError(f"embedded covariance has negative eigenvalue {lam.min():.3g}; "
                                 f"use a longer grid (try {2 * N} points) or a finer step")
        warnings.warn("circulant embedding not non-negative; clipping eigenvalues biases the covariance",
                      RuntimeWarning, stacklevel=2)
    lam = np.clip(lam, 0.0, None)
    amp = np.sqrt(lam / M)
    out = np.empty((N, n_paths))
    for p in range(n_paths):
        g = path_generator(seed, p)
        zr = g.standard_normal(M)
        zi = g.standard_normal(M)
        out[:, p] = np.fft.fft(amp * (zr + 1j * zi)).real[:N]
    return SampledFunction(t, out, {"quantity": "force noise", "seed": seed, "dt": dt})


def noise_periodogram(noise: SampledFunction) -> SampledFunction:
    """Path-averaged one-sided periodogram ``|FFT dt|^2 / (pi N dt)`` at ``w_k = 2 pi k/(N dt)``."""
    y = np.asarray(noise.y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    N = y.shape[0]
    dt = noise.spacing
    F = np.fft.rfft(y, axis=0) * dt
    S = (np.abs(F) ** 2).mean(axis=1) / (math.pi * N * dt)
    w = 2 * math.pi * np.fft.rfftfreq(N, dt)
    return SampledFunction(w[1:], S[1:], {"quantity": "noise periodogram"})
