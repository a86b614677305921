"""A service law given as a table.

Any nondecreasing table of G on [0, t_max] that reaches 1 can drive the
series, the general bounds and the simulator.  Here service is uniform on
[0, 2] with a 10% atom at zero.
"""
import math
from pathlib import Path
import tempfile

import numpy as np

from mginf_busy import (
    QueueParams,
    SeriesConfig,
    SimConfig,
    Tabulated,
    busy_cdf_series,
    empirical_cdf,
    general_busy_band,
    ks_distance,
    simulate_cycles,
)

t = np.linspace(0.0, 2.0, 401)
table = Tabulated(t, 0.1 + 0.9 * t / 2.0)
alpha = table.mean()
params = QueueParams(lam=0.8, alpha=alpha)
print(f"table mean alpha = {alpha:.4f}, rho = {params.rho:.4f}")

# round trip through the CSV format the command line reads
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "service.csv"
    table.to_csv(path)
    table = Tabulated.from_csv(path)
    print("first lines of the table file:", path.read_text().splitlines()[:3])

cfg = SeriesConfig.for_params(params)
series = busy_cdf_series(table, params, cfg)
print(f"P(B <= 0) = {series.cdf.values[0]:.4f} (the service atom G(0) = 0.1)")

band = general_busy_band(table, params, cfg)
print("series inside general bounds:", bool(band.contains(series.cdf.values).all()))
for x in (0.5, 1.0, 3.0):
    i = int(round(x / cfg.h))
    print(f"  t={x}: [{band.lower.values[i]:.4f}, {band.upper.values[i]:.4f}]  exact {series.cdf.values[i]:.4f}")

samples = simulate_cycles(SimConfig(1, 500_000, table, params))
print(f"KS busy vs series: {ks_distance(empirical_cdf(samples.busy), series.cdf):.5f}")
print(f"mean busy {samples.busy.mean():.4f}, exact {math.expm1(params.rho) / params.lam:.4f}")
