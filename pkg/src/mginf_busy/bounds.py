"""Analytic lower/upper bounds on the busy-period and busy-cycle CDFs.

Bound identifiers used in :class:`BoundBand` sources:

``series_upper`` / ``series_lower``
    convolution series of the equilibrium density with weights
    ``(rho e^-rho)^n`` and ``rho^n`` (any service law).
``service_upper`` / ``service_lower``
    ``G(t)`` and ``e^-rho G(t)``.
``exp_rate_upper`` / ``exp_rate_lower``
    exponential-service closed forms
    ``1 - exp(-rho - (1 - rho e^-rho) t / alpha)`` and ``1 - exp(-(1 - rho) t / alpha)``.
``cycle_rate_*`` / ``cycle_service_*``
    the idle period convolved with the ``exp_rate_*`` and ``service_*`` laws.
``trivial``
    the constant 0 lower bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Union

import numpy as np

from .curves import Curve, grid, write_columns
from .exact import (
    SINGULAR_EPS,
    SeriesConfig,
    erlang2_sf,
    hypoexp_sf,
    sampled_power_sum,
    terms_for_tolerance,
)
from .model import (
    DomainError,
    Exponential,
    QueueParams,
    ServiceModel,
    equilibrium_pdf,
    service_cdf,
)

BUSY_PERIOD = "BusyPeriod"
BUSY_CYCLE = "BusyCycle"


class Bounds(NamedTuple):
    lower: object
    upper: object


@dataclass(frozen=True, eq=False)
class BoundBand:
    lower: Curve
    upper: Curve
    per_point_source: list[tuple[str, str]]
    target: str = BUSY_PERIOD
    lower_informative: bool = True
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.lower) != len(self.upper) or len(self.per_point_source) != len(self.lower):
            raise ValueError("band components must share one grid")
        if np.any(self.lower.values > self.upper.values + 1e-12):
            raise ValueError("band lower exceeds upper")

    @property
    def t(self) -> np.ndarray:
        return self.lower.t

    def contains(self, values, slack: float = 1e-9) -> np.ndarray:
        """Boolean mask of grid points where ``values`` lies inside the band."""
        v = np.asarray(values, dtype=float)
        return (v >= self.lower.values - slack) & (v <= self.upper.values + slack)

    def to_csv(self, path: Union[str, Path]) -> None:
        lo_src, up_src = zip(*self.per_point_source)
        write_columns(
            path,
            {
                "t": self.t,
                "lower": self.lower.values,
                "upper": self.upper.values,
                "lower_src": lo_src,
                "upper_src": up_src,
            },
        )


def _nonneg(t):
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("t must be nonnegative")
    return arr


def _out(x, t):
    return float(x) if np.ndim(t) == 0 else np.asarray(x, dtype=float)


# -- busy period, exponential service ---------------------------------------


def mm_busy_upper(params: QueueParams, t):
    """``1 - exp(-rho - (1 - rho e^-rho) t / alpha)``."""
    tt = _nonneg(t)
    rho, alpha = params.rho, params.alpha
    return _out(-np.expm1(-rho - (1.0 - rho * math.exp(-rho)) * tt / alpha), t)


def mm_busy_lower(params: QueueParams, t, clamp: bool = True):
    """``1 - exp(-(1 - rho) t / alpha)``, clamped at 0 unless ``clamp=False``.

    For ``rho >= 1`` the raw expression is never positive and the clamped
    bound is the trivial 0.
    """
    tt = _nonneg(t)
    with np.errstate(over="ignore"):
        raw = -np.expm1(-(1.0 - params.rho) * tt / params.alpha)
    return _out(np.maximum(raw, 0.0) if clamp else raw, t)


def mm_busy_service_sandwich(params: QueueParams, t) -> Bounds:
    """``(e^-rho G(t), G(t))`` with ``G`` exponential of mean ``alpha``."""
    g = -np.expm1(-_nonneg(t) / params.alpha)
    return Bounds(_out(math.exp(-params.rho) * g, t), _out(g, t))


def service_sandwich(model: ServiceModel, params: QueueParams, t) -> Bounds:
    """``(e^-rho G(t), G(t))`` for any service law."""
    g = np.asarray(service_cdf(model, params, t))
    return Bounds(_out(math.exp(-params.rho) * g, t), _out(g, t))


def upper_switch_time(params: QueueParams) -> float:
    """Time ``alpha e^rho`` after which ``exp_rate_upper`` beats ``service_upper``."""
    return params.alpha * math.exp(params.rho)


def best_busy_band(params: QueueParams, h: float, horizon: float) -> BoundBand:
    """Pointwise tightest busy-period band for exponential service.

    The lower envelope never uses ``exp_rate_upper`` (it always dominates
    ``exp_rate_lower``).  For ``rho < 1``, ``service_lower`` is still the
    better lower bound on a short initial stretch, because its slope at 0 is
    ``e^-rho / alpha > (1 - rho) / alpha``; ``exp_rate_lower`` takes over
    after the single crossing.  Ties go to ``exp_rate_lower`` when it is
    informative.
    """
    t = grid(h, horizon)
    informative = rate_lower_informative(params)
    rate_lo = mm_busy_lower(params, t)
    serv = mm_busy_service_sandwich(params, t)
    rate_up = mm_busy_upper(params, t)

    lo_pick_rate = (rate_lo >= serv.lower) if informative else (rate_lo > serv.lower)
    up_pick_rate = rate_up <= serv.upper
    lower = np.where(lo_pick_rate, rate_lo, serv.lower)
    upper = np.where(up_pick_rate, rate_up, serv.upper)
    sources = [
        ("exp_rate_lower" if a else "service_lower", "exp_rate_upper" if b else "service_upper")
        for a, b in zip(lo_pick_rate, up_pick_rate)
    ]
    return BoundBand(
        Curve(h, lower, "busy_lower", "max(exp_rate_lower, service_lower)"),
        Curve(h, upper, "busy_upper", "min(exp_rate_upper, service_upper)"),
        sources,
        BUSY_PERIOD,
        lower_informative=True,
        diagnostics={"exp_rate_lower_informative": informative,
                     "upper_switch_time": upper_switch_time(params)},
    )


# -- busy period, general service -------------------------------------------


def busy_bounds_general(model: ServiceModel, params: QueueParams, cfg: SeriesConfig) -> BoundBand:
    """Series bounds built from the equilibrium density ``f``.

    Both series are cut at a term count chosen from ``f^{*n} <= 1/alpha``.
    Dropping terms only raises the upper curve, so it stays an upper bound;
    the lower curve has the tail bound subtracted so it stays a lower bound
    even when ``tol`` is not reached.  For ``rho >= 1`` the lower series
    diverges and the lower curve is the trivial 0.
    """
    model.validate(params)
    rho, lam = params.rho, params.lam
    pdf = lambda t: equilibrium_pdf(model, params, t)

    w_up = rho * math.exp(-rho)
    n_up, tail_up = _terms(w_up, rho, cfg)
    t, s_up = sampled_power_sum(pdf, cfg, w_up, n_up)
    upper = np.clip(1.0 - s_up / lam, 0.0, 1.0)

    diagnostics = {"upper_terms": n_up, "upper_tail_bound": tail_up}
    informative = rho < 1.0
    if informative:
        n_lo, tail_lo = _terms(rho, rho, cfg)
        _, s_lo = sampled_power_sum(pdf, cfg, rho, n_lo)
        lower = np.clip(1.0 - s_lo / lam - tail_lo, 0.0, 1.0)
        diagnostics.update(lower_terms=n_lo, lower_tail_bound=tail_lo)
        lo_src = "series_lower"
    else:
        lower = np.zeros_like(upper)
        lo_src = "trivial"
    lower = np.minimum(lower, upper)
    return BoundBand(
        Curve(cfg.h, lower, "busy_lower", lo_src),
        Curve(cfg.h, upper, "busy_upper", "series_upper"),
        [(lo_src, "series_upper")] * t.size,
        BUSY_PERIOD,
        lower_informative=informative,
        diagnostics=diagnostics,
    )


def _terms(weight: float, rho: float, cfg: SeriesConfig) -> tuple[int, float]:
    # (1/lam) sum_{n>N} w^n f^{*n} <= (1/rho) w^{N+1} / (1 - w), using f^{*n} <= 1/alpha
    prefactor = weight / (rho * (1.0 - weight))
    try:
        return terms_for_tolerance(weight, prefactor, cfg.tol, cfg.max_terms)
    except ArithmeticError as exc:
        return cfg.max_terms, exc.achieved_bound


def general_busy_band(model: ServiceModel, params: QueueParams, cfg: SeriesConfig) -> BoundBand:
    """Tightest of the series bounds and the ``G`` sandwich at every grid point."""
    series = busy_bounds_general(model, params, cfg)
    serv = service_sandwich(model, params, series.t)
    lo_pick = series.lower.values >= serv.lower
    up_pick = series.upper.values <= serv.upper
    lower = np.where(lo_pick, series.lower.values, serv.lower)
    upper = np.where(up_pick, series.upper.values, serv.upper)
    sources = [
        (s[0] if a else "service_lower", s[1] if b else "service_upper")
        for s, a, b in zip(series.per_point_source, lo_pick, up_pick)
    ]
    return BoundBand(
        Curve(cfg.h, lower, "busy_lower", "max(series_lower, service_lower)"),
        Curve(cfg.h, upper, "busy_upper", "min(series_upper, service_upper)"),
        sources,
        BUSY_PERIOD,
        lower_informative=True,
        diagnostics=series.diagnostics,
    )


# -- busy cycle, exponential service ----------------------------------------


def cycle_bounds_rate(params: QueueParams, t) -> Bounds:
    """Idle period convolved with the ``exp_rate_lower``/``exp_rate_upper`` laws.

    lower: ``1 - [(rho-1) e^{-lam t} + rho e^{-(1-rho) t/alpha}] / (2 rho - 1)``
    upper: ``1 - [(rho-1) e^{-lam t} + rho e^{-rho-(1-rho e^-rho) t/alpha}] / (rho(1+e^-rho) - 1)``

    Both are evaluated as hypoexponential laws (the upper one mixed with the
    atom ``1 - e^-rho`` of its busy law), switching to the equal-rate limit
    when a denominator is within ``SINGULAR_EPS`` of zero.  The lower bound
    is clamped to [0, 1]; it is only informative for ``rho < 1`` (see
    :func:`rate_lower_informative`).
    """
    tt = _nonneg(t)
    lam, alpha, rho = params.lam, params.alpha, params.rho

    if abs(2.0 * rho - 1.0) < SINGULAR_EPS:
        lo_sf = erlang2_sf(1.0 / (2.0 * alpha), tt)
    else:
        lo_sf = hypoexp_sf(lam, (1.0 - rho) / alpha, tt)
    lower = np.clip(1.0 - lo_sf, 0.0, 1.0)

    em = math.exp(-rho)
    nu = (1.0 - rho * em) / alpha
    if abs(rho * (1.0 + em) - 1.0) < SINGULAR_EPS:
        up_sf = erlang2_sf(lam, tt)
    else:
        up_sf = hypoexp_sf(lam, nu, tt)
    upper = 1.0 - ((1.0 - em) * np.exp(-lam * tt) + em * up_sf)
    return Bounds(_out(lower, t), _out(upper, t))


def rate_lower_informative(params: QueueParams) -> bool:
    """Whether ``exp_rate_lower`` and its cycle counterpart are nontrivial."""
    return params.rho < 1.0


def cycle_bounds_service(params: QueueParams, t) -> Bounds:
    """Idle period convolved with the ``service_lower``/``service_upper`` laws.

    upper: ``1 - (rho e^{-t/alpha} - e^{-lam t}) / (rho - 1)``, lower: ``e^-rho``
    times it; Erlang-2 limit when ``|rho - 1| < SINGULAR_EPS``.
    """
    tt = _nonneg(t)
    if abs(params.rho - 1.0) < SINGULAR_EPS:
        sf = erlang2_sf(1.0 / params.alpha, tt)
    else:
        sf = hypoexp_sf(params.lam, 1.0 / params.alpha, tt)
    upper = 1.0 - sf
    return Bounds(_out(math.exp(-params.rho) * upper, t), _out(upper, t))


def best_cycle_band(params: QueueParams, h: float, horizon: float) -> BoundBand:
    """Pointwise tightest of the two cycle bound pairs."""
    t = grid(h, horizon)
    rate = cycle_bounds_rate(params, t)
    serv = cycle_bounds_service(params, t)
    informative = rate_lower_informative(params)
    lo_pick = (rate.lower >= serv.lower) if informative else np.zeros(t.size, bool)
    up_pick = rate.upper <= serv.upper
    lower = np.where(lo_pick, rate.lower, serv.lower)
    upper = np.where(up_pick, rate.upper, serv.upper)
    sources = [
        ("cycle_rate_lower" if a else "cycle_service_lower",
         "cycle_rate_upper" if b else "cycle_service_upper")
        for a, b in zip(lo_pick, up_pick)
    ]
    return BoundBand(
        Curve(h, lower, "cycle_lower", "max(cycle_rate_lower, cycle_service_lower)"),
        Curve(h, upper, "cycle_upper", "min(cycle_rate_upper, cycle_service_upper)"),
        sources,
        BUSY_CYCLE,
        diagnostics={"cycle_rate_lower_informative": informative},
    )


def cycle_band_from_busy(band: BoundBand, params: QueueParams) -> BoundBand:
    """Cycle band obtained by convolving each side of a busy band with the idle law.

    Valid for any pointwise bounds since the convolution is monotone in its
    busy-period argument.
    """
    from .exact import cycle_cdf_from_busy

    lower = cycle_cdf_from_busy(band.lower, params)
    upper = cycle_cdf_from_busy(band.upper, params)
    lower = Curve(lower.h, np.minimum(lower.values, upper.values), "cycle_lower", lower.provenance)
    return BoundBand(
        lower,
        Curve(upper.h, upper.values, "cycle_upper", upper.provenance),
        [("idle*" + a, "idle*" + b) for a, b in band.per_point_source],
        BUSY_CYCLE,
        lower_informative=band.lower_informative,
    )


def is_exponential(model: ServiceModel) -> bool:
    return isinstance(model, Exponential)
