"""Busy-period and busy-cycle distributions of the M|G|inf queue.

Exact convolution-series CDFs, closed forms for a special service family,
analytic bounds for exponential service, and a Monte Carlo oracle.
"""

from .bounds import (
    BoundBand,
    Bounds,
    best_busy_band,
    best_cycle_band,
    busy_bounds_general,
    cycle_band_from_busy,
    cycle_bounds_rate,
    cycle_bounds_service,
    general_busy_band,
    mm_busy_lower,
    mm_busy_service_sandwich,
    mm_busy_upper,
    rate_lower_informative,
    service_sandwich,
    upper_switch_time,
)
from .curves import Curve, grid
from .exact import (
    BusyCdfResult,
    SeriesConfig,
    TruncationError,
    busy_cdf_series,
    busy_cdf_special,
    cycle_cdf_from_busy,
    cycle_cdf_special,
    hypoexp_cdf,
    special_curve,
)
from .model import (
    DomainError,
    Exponential,
    ExtrapolationError,
    QueueParams,
    ServiceModel,
    SpecialFamily,
    Tabulated,
    busy_kernel,
    equilibrium_cdf,
    equilibrium_pdf,
    service_cdf,
)
from .simulation import (
    CycleSample,
    CycleSamples,
    EmpiricalCdf,
    SimConfig,
    empirical_cdf,
    independence_check,
    ks_critical,
    ks_distance,
    simulate_cycles,
    simulate_replicas,
)

__version__ = "0.1.0"
