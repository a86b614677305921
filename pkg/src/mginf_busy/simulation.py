"""Monte Carlo busy cycles of the M|G|inf queue.

With infinitely many servers nobody waits, so the system is empty exactly
when every departure time so far lies behind the clock.  Tracking the
running maximum ``E`` of departure times is therefore enough: an arrival at
``a > E`` closes the busy period that ended at ``E`` and opens a new one.
The recursion ``E <- max(E, a + s)`` is a cumulative maximum, which numpy
does in one pass per chunk of arrivals.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, NamedTuple, Optional, Union

import numpy as np

from .curves import Curve, write_columns
from .model import Exponential, QueueParams, ServiceModel

MIN_CHUNK = 4096
MAX_CHUNK = 1 << 20


@dataclass(frozen=True)
class SimConfig:
    seed: int
    n_cycles: int
    model: ServiceModel
    params: QueueParams

    def __post_init__(self):
        if self.n_cycles < 1:
            raise ValueError("n_cycles must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.model.validate(self.params)


class CycleSample(NamedTuple):
    idle: float
    busy: float


@dataclass(frozen=True, eq=False)
class CycleSamples:
    """Completed (idle, busy) pairs in order of occurrence."""

    idle: np.ndarray
    busy: np.ndarray

    def __len__(self) -> int:
        return self.idle.size

    def __getitem__(self, i) -> CycleSample:
        return CycleSample(float(self.idle[i]), float(self.busy[i]))

    @property
    def cycle(self) -> np.ndarray:
        return self.idle + self.busy

    def to_csv(self, path: Union[str, Path]) -> None:
        write_columns(path, {"idle": self.idle, "busy": self.busy})

    @classmethod
    def concat(cls, parts: list["CycleSamples"]) -> "CycleSamples":
        return cls(np.concatenate([p.idle for p in parts]), np.concatenate([p.busy for p in parts]))


def service_sampler(model: ServiceModel, params: QueueParams) -> Callable[[np.ndarray], np.ndarray]:
    """Map uniforms on [0, 1) to service times by inversion."""
    if isinstance(model, Exponential):
        return lambda u: -params.alpha * np.log1p(-u)
    return lambda u: model.quantile(params, u)


def _run(seed_seq: np.random.SeedSequence, n_cycles: int, model: ServiceModel,
         params: QueueParams) -> CycleSamples:
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    draw_service = service_sampler(model, params)
    per_cycle = math.exp(params.rho)  # mean arrivals per busy cycle

    # times are kept relative to the latest arrival; uniforms are drawn as
    # (gap, service) pairs so the stream does not depend on the chunk size
    busy_end = 0.0
    open_start: Optional[float] = None
    open_idle = 0.0
    idles, busies = [], []
    done = 0
    while done < n_cycles:
        m = int(min(MAX_CHUNK, max(MIN_CHUNK, 1.1 * per_cycle * (n_cycles - done))))
        u = rng.random((m, 2))
        arrivals = np.cumsum(-np.log1p(-u[:, 0]) / params.lam)
        departures = arrivals + draw_service(u[:, 1])
        end_before = np.maximum.accumulate(np.concatenate(([busy_end], departures)))[:-1]
        starts = np.flatnonzero(arrivals > end_before)
        if starts.size:
            closes = end_before[starts]
            idle = arrivals[starts] - closes
            busy = closes[1:] - arrivals[starts[:-1]]
            chunk_idle = idle[:-1]
            if open_start is not None:
                busy = np.concatenate(([closes[0] - open_start], busy))
                chunk_idle = np.concatenate(([open_idle], chunk_idle))
            idles.append(chunk_idle)
            busies.append(busy)
            done += busy.size
            open_start = arrivals[starts[-1]]
            open_idle = idle[-1]
        shift = arrivals[-1]
        busy_end = max(end_before[-1], departures[-1]) - shift
        if open_start is not None:
            open_start -= shift
    idle = np.concatenate(idles)[:n_cycles]
    busy = np.concatenate(busies)[:n_cycles]
    return CycleSamples(idle, np.maximum(busy, 0.0))


def simulate_cycles(cfg: SimConfig) -> CycleSamples:
    """Exactly ``cfg.n_cycles`` busy cycles from an empty system at time 0."""
    return _run(np.random.SeedSequence(cfg.seed), cfg.n_cycles, cfg.model, cfg.params)


def simulate_replicas(cfg: SimConfig, n_replicas: int, workers: int = 1) -> CycleSamples:
    """Split ``cfg.n_cycles`` over independent streams spawned from ``cfg.seed``.

    Streams come from ``SeedSequence(seed).spawn``; results are concatenated
    in stream order so the output does not depend on ``workers``.
    """
    if n_replicas < 1:
        raise ValueError("n_replicas must be >= 1")
    streams = np.random.SeedSequence(cfg.seed).spawn(n_replicas)
    base, extra = divmod(cfg.n_cycles, n_replicas)
    sizes = [base + (i < extra) for i in range(n_replicas)]
    jobs = [(s, k) for s, k in zip(streams, sizes) if k > 0]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda j: _run(j[0], j[1], cfg.model, cfg.params), jobs))
    else:
        parts = [_run(s, k, cfg.model, cfg.params) for s, k in jobs]
    return CycleSamples.concat(parts)


# -- empirical distribution and goodness of fit ------------------------------


@dataclass(frozen=True, eq=False)
class EmpiricalCdf:
    values: np.ndarray

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float).ravel())
        if v.size == 0:
            raise ValueError("empirical CDF of an empty sample")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size

    def __call__(self, x):
        return np.searchsorted(self.values, x, side="right") / self.n

    def left(self, x):
        return np.searchsorted(self.values, x, side="left") / self.n


def empirical_cdf(samples) -> EmpiricalCdf:
    return EmpiricalCdf(samples)


def ks_distance(emp: EmpiricalCdf, reference: Union[Curve, Callable]) -> float:
    """Kolmogorov-Smirnov distance between a sample and a distribution on [0, inf).

    The reference may carry an atom at 0 (its left limit there is 0) and is
    taken as continuous elsewhere.  A :class:`Curve` reference is read by
    linear interpolation and held at its last value beyond its horizon.
    """
    x, idx, counts = np.unique(emp.values, return_index=True, return_counts=True)
    right = (idx + counts) / emp.n
    left = idx / emp.n
    ref = np.asarray(reference(x), dtype=float)
    ref_left = np.where(x > 0, ref, 0.0)
    return float(max(np.max(np.abs(right - ref)), np.max(np.abs(left - ref_left))))


def ks_critical(n: int, level: float = 0.99) -> float:
    """Asymptotic Kolmogorov critical value ``K_level / sqrt(n)``."""
    from scipy.stats import kstwobign

    return float(kstwobign.ppf(level) / math.sqrt(n))


class IndependenceReport(NamedTuple):
    n: int
    corr: float
    threshold: float
    passed: bool


def independence_check(samples: CycleSamples, min_n: int = 10_000) -> IndependenceReport:
    """Pearson correlation of idle and busy lengths against ``3 / sqrt(n)``."""
    n = len(samples)
    if n < min_n:
        raise ValueError(f"need at least {min_n} cycles, got {n}")
    if np.ptp(samples.idle) == 0 or np.ptp(samples.busy) == 0:
        raise ValueError("correlation undefined for a constant component")
    corr = float(np.corrcoef(samples.idle, samples.busy)[0, 1])
    threshold = 3.0 / math.sqrt(n)
    return IndependenceReport(n, corr, threshold, abs(corr) < threshold)


def summary(samples: CycleSamples, ks: Optional[float] = None) -> dict:
    rep_corr = float(np.corrcoef(samples.idle, samples.busy)[0, 1]) if len(samples) > 1 else float("nan")
    return {
        "n": len(samples),
        "mean_idle": float(samples.idle.mean()),
        "mean_busy": float(samples.busy.mean()),
        "var_busy": float(samples.busy.var(ddof=1)) if len(samples) > 1 else 0.0,
        "corr": rep_corr,
        "ks": ks,
    }


def write_summary(path: Union[str, Path], report: dict) -> None:
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
