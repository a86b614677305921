"""Monte Carlo busy cycles checked against the exact distributions.

The simulator tracks only the running maximum of departure times, so a
million cycles take a fraction of a second.  Kolmogorov-Smirnov distances
against the series and the idle/busy correlation are the two sanity checks.
"""
import math
import time

import numpy as np

from mginf_busy import (
    Exponential,
    QueueParams,
    SeriesConfig,
    SimConfig,
    SpecialFamily,
    busy_cdf_series,
    cycle_cdf_from_busy,
    empirical_cdf,
    independence_check,
    ks_critical,
    ks_distance,
    simulate_cycles,
    simulate_replicas,
)

params = QueueParams(lam=0.5, alpha=1.0)
cfg = SimConfig(seed=42, n_cycles=1_000_000, model=Exponential(), params=params)

start = time.perf_counter()
samples = simulate_cycles(cfg)
print(f"{len(samples)} cycles in {time.perf_counter() - start:.2f} s")

series = busy_cdf_series(Exponential(), params, SeriesConfig.for_params(params))
cycle = cycle_cdf_from_busy(series, params)
ks_b = ks_distance(empirical_cdf(samples.busy), series.cdf)
ks_z = ks_distance(empirical_cdf(samples.cycle), cycle)
print(f"KS busy {ks_b:.5f}, KS cycle {ks_z:.5f}, 99% critical value {ks_critical(len(samples)):.5f}")

se = samples.busy.std(ddof=1) / math.sqrt(len(samples))
print(f"mean busy {samples.busy.mean():.4f} +- {se:.4f}, exact (e^rho - 1)/lam = {math.expm1(params.rho) / params.lam:.4f}")
print("independence:", independence_check(samples))

# replicas come from spawned seed streams; the worker count does not matter
a = simulate_replicas(cfg, n_replicas=4, workers=1)
b = simulate_replicas(cfg, n_replicas=4, workers=4)
print("replicas identical across worker counts:", np.array_equal(a.busy, b.busy))

# special family with beta = 0: zero-length busy periods occur with probability G(0)
sp = SpecialFamily(0.0)
p1 = QueueParams(1.0, 1.0)
s1 = simulate_cycles(SimConfig(7, 200_000, sp, p1))
print(f"\nspecial family: P(B = 0) simulated {np.mean(s1.busy == 0):.4f}, G(0) = {sp.atom(p1):.4f}")
rate = math.exp(-p1.rho) * p1.lam
print(f"cycle vs Exponential({rate:.4f}): KS {ks_distance(empirical_cdf(s1.cycle), lambda t: -np.expm1(-rate * t)):.5f}")
