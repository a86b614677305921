"""Analytic bounds on the busy period and busy cycle for exponential service.

Two upper bounds compete: the service law G(t) itself and a closed form in
the rate.  They cross exactly once, at t = alpha e^rho.  Below rho = 1 there
is also an informative rate lower bound.
"""
from mginf_busy import (
    Exponential,
    QueueParams,
    SeriesConfig,
    best_busy_band,
    best_cycle_band,
    busy_cdf_series,
    cycle_cdf_from_busy,
    upper_switch_time,
)

for rho in (0.5, 1.0, 2.0):
    params = QueueParams.from_rho(rho, rho)  # alpha = 1
    horizon = 30.0
    band = best_busy_band(params, h=0.01, horizon=horizon)
    series = busy_cdf_series(Exponential(), params, SeriesConfig(h=0.01, horizon=horizon)).cdf

    upper_src = [s[1] for s in band.per_point_source]
    switch = next(band.t[i] for i in range(1, len(upper_src)) if upper_src[i] != upper_src[i - 1])
    inside = band.contains(series.values).all()
    print(f"rho={rho}: upper switches at t={switch:.2f} (alpha e^rho = {upper_switch_time(params):.4f}),"
          f" series inside band: {inside}")

    width = band.upper.values - band.lower.values
    for t in (0.5, 2.0, 5.0):
        i = int(round(t / 0.01))
        print(f"   t={t:4.1f}  [{band.lower.values[i]:.4f}, {band.upper.values[i]:.4f}]"
              f"  exact {series.values[i]:.4f}  width {width[i]:.4f}"
              f"  ({band.per_point_source[i][0]} / {band.per_point_source[i][1]})")

    # cycle bounds are the idle period convolved with the busy bounds
    cyc_band = best_cycle_band(params, 0.01, horizon)
    cyc = cycle_cdf_from_busy(series, params)
    print(f"   cycle CDF inside cycle band: {cyc_band.contains(cyc.values).all()}")

band = best_busy_band(QueueParams(1.0, 1.0), 0.01, 20.0)
band.to_csv("busy_band_rho1.csv")
print("\nwrote busy_band_rho1.csv (columns t, lower, upper and their sources)")
