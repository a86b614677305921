"""Exact busy-period and busy-cycle distributions.

For the special service family the busy period B and the busy cycle Z have
closed forms.  The convolution series works for any service law, so the two
can be checked against each other on a grid.
"""
import numpy as np
from scipy.integrate import trapezoid

from mginf_busy import (
    Exponential,
    QueueParams,
    SeriesConfig,
    SpecialFamily,
    busy_cdf_series,
    busy_cdf_special,
    cycle_cdf_from_busy,
    cycle_cdf_special,
)

params = QueueParams(lam=1.0, alpha=1.0)
lo, hi = SpecialFamily.beta_range(params)
print(f"rho = {params.rho}, admissible beta in [{lo:.4f}, {hi:.4f}]")

beta = 0.0
model = SpecialFamily(beta)
cfg = SeriesConfig.for_params(params)
series = busy_cdf_series(model, params, cfg)
print(f"series used {series.terms_used} terms, tail bound {series.truncation_bound:.1e}")

t = np.array([0.0, 0.5, 1.0, 2.0, 5.0, 10.0])
print("\n   t   closed B   series B    |diff|")
for x, a, b in zip(t, busy_cdf_special(params, beta, t), series.cdf(t)):
    print(f"{x:5.1f}  {a:.8f}  {b:.8f}  {abs(a - b):.1e}")

# the cycle is idle + busy with independent parts, so it is a convolution
cycle = cycle_cdf_from_busy(series, params)
print("\n   t   closed Z   conv Z")
for x, a, b in zip(t, cycle_cdf_special(params, beta, t), cycle(t)):
    print(f"{x:5.1f}  {a:.8f}  {b:.8f}")

# beta = 0 makes Z exponential with rate e^-rho lam
print("\nZ(1) =", cycle_cdf_special(params, 0.0, 1.0), "vs", 1 - np.exp(-np.exp(-1.0)))

# exponential service has no closed form; the series still gives the mean
exp_params = QueueParams(lam=0.5, alpha=1.0)
exp_curve = busy_cdf_series(Exponential(), exp_params, SeriesConfig.for_params(exp_params)).cdf
mean = trapezoid(1 - exp_curve.values, exp_curve.t)
print(f"\nM|M|inf lam=0.5: E[B] from series {mean:.5f}, exact {np.expm1(0.5) / 0.5:.5f}")
