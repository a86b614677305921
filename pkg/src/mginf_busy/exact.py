"""Exact busy-period and busy-cycle distribution functions.

The general busy-period CDF is

    P(B <= t) = 1 - (1/lam) sum_{n>=1} c^{*n}(t),

with ``c`` the kernel from :func:`mginf_busy.model.busy_kernel`.  The series
is evaluated on a uniform grid with trapezoid-rule convolutions and cut at a
number of terms chosen from an a-priori bound on the dropped tail.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np
from scipy import fft as sp_fft
from scipy.signal import lfilter

from .curves import Curve, grid
from .model import DomainError, QueueParams, ServiceModel, SpecialFamily, busy_kernel

SINGULAR_EPS = 1e-9


class TruncationError(ArithmeticError):
    """The series tail bound cannot reach the requested tolerance."""

    def __init__(self, message: str, achieved_bound: float, terms: int):
        super().__init__(message)
        self.achieved_bound = achieved_bound
        self.terms = terms


@dataclass(frozen=True)
class SeriesConfig:
    """Grid and truncation controls for convolution series.

    ``richardson`` combines the trapezoid result on steps ``h`` and ``h/2``
    as ``(4 S_{h/2} - S_h) / 3``, cancelling the ``h^2`` error term.
    """

    h: float = 0.01
    horizon: float = 40.0
    tol: float = 1e-8
    max_terms: int = 200
    richardson: bool = True

    def __post_init__(self):
        if not (0 < self.h < self.horizon):
            raise ValueError("need 0 < h < horizon")
        if not (0 < self.tol < 1):
            raise ValueError("tol must lie in (0, 1)")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")

    @classmethod
    def for_params(cls, params: QueueParams, **kw) -> "SeriesConfig":
        kw.setdefault("horizon", params.default_horizon())
        return cls(**kw)


@dataclass(frozen=True)
class BusyCdfResult:
    cdf: Curve
    terms_used: int
    truncation_bound: float

    def to_files(self, csv_path: Union[str, Path]) -> Path:
        """Write the curve CSV and a ``.json`` sidecar next to it."""
        csv_path = Path(csv_path)
        self.cdf.to_csv(csv_path)
        sidecar = csv_path.with_suffix(".json")
        sidecar.write_text(
            json.dumps(
                {"terms_used": self.terms_used, "truncation_bound": self.truncation_bound},
                indent=2,
            )
            + "\n"
        )
        return sidecar


def trapezoid_convolve(a: np.ndarray, b: np.ndarray, h: float) -> np.ndarray:
    """Trapezoid approximation of ``int_0^t a(s) b(t-s) ds`` on the grid of ``a``."""
    n = a.size
    nfft = sp_fft.next_fast_len(2 * n)
    full = sp_fft.irfft(sp_fft.rfft(a, nfft) * sp_fft.rfft(b, nfft), nfft)[:n]
    return h * (full - 0.5 * (a[0] * b + a * b[0]))


def convolution_power_sum(kernel: np.ndarray, h: float, weight: float, n_terms: int) -> np.ndarray:
    """``sum_{n=1}^{N} weight^n kernel^{*n}`` by repeated trapezoid convolution."""
    n = kernel.size
    nfft = sp_fft.next_fast_len(2 * n)
    k_hat = sp_fft.rfft(kernel, nfft)
    term = weight * kernel
    total = term.copy()
    for _ in range(n_terms - 1):
        full = sp_fft.irfft(k_hat * sp_fft.rfft(term, nfft), nfft)[:n]
        term = weight * h * (full - 0.5 * (kernel[0] * term + kernel * term[0]))
        total += term
    return total


def sampled_power_sum(
    fn: Callable[[np.ndarray], np.ndarray], cfg: SeriesConfig, weight: float, n_terms: int
) -> tuple[np.ndarray, np.ndarray]:
    """Sample ``fn`` on the config grid and return ``(t, power sum)``."""
    t = grid(cfg.h, cfg.horizon)
    coarse = convolution_power_sum(fn(t), cfg.h, weight, n_terms)
    if not cfg.richardson:
        return t, coarse
    fine_t = 0.5 * cfg.h * np.arange(2 * t.size - 1)
    fine = convolution_power_sum(fn(fine_t), 0.5 * cfg.h, weight, n_terms)
    return t, (4.0 * fine[::2] - coarse) / 3.0


def terms_for_tolerance(ratio: float, prefactor: float, tol: float, max_terms: int) -> tuple[int, float]:
    """Smallest ``N`` with ``prefactor * ratio**N <= tol``, and that bound."""
    if ratio <= 0.0:
        return 1, 0.0
    n = max(1, math.ceil((math.log(tol) - math.log(prefactor)) / math.log(ratio)))
    if n > max_terms:
        achieved = prefactor * ratio**max_terms
        raise TruncationError(
            f"tail bound {achieved:.3g} > tol={tol:g} after max_terms={max_terms}",
            achieved,
            max_terms,
        )
    bound = prefactor * ratio**n
    # guard against rounding in the logarithms
    while bound > tol and n < max_terms:
        n += 1
        bound *= ratio
    return n, bound


def busy_cdf_series(model: ServiceModel, params: QueueParams, cfg: SeriesConfig) -> BusyCdfResult:
    """Busy-period CDF on a grid from the truncated convolution series.

    Uses ``c <= lam`` and ``int c = 1 - e^-rho``, so ``c^{*n} <= lam (1 - e^-rho)^{n-1}``
    and the dropped tail after ``N`` terms is at most ``(1 - e^-rho)^N e^rho``.
    """
    model.validate(params)
    ratio = -math.expm1(-params.rho)
    n_terms, bound = terms_for_tolerance(ratio, math.exp(params.rho), cfg.tol, cfg.max_terms)
    _, u = sampled_power_sum(lambda t: busy_kernel(model, params, t), cfg, 1.0, n_terms)
    values = np.clip(1.0 - u / params.lam, 0.0, 1.0)
    curve = Curve(cfg.h, values, label="busy_cdf_series", provenance=f"series N={n_terms}")
    curve.check_cdf()
    return BusyCdfResult(curve, n_terms, bound)


def _beta_checked(params: QueueParams, beta: float) -> float:
    SpecialFamily(beta).validate(params)
    lo, hi = SpecialFamily.beta_range(params)
    return min(max(beta, lo), hi)


def _nonneg(t):
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("t must be nonnegative")
    return arr


def _out(x, t):
    return float(x) if np.ndim(t) == 0 else x


def erlang2_sf(rate: float, t):
    return (1.0 + rate * t) * np.exp(-rate * t)


def hypoexp_sf(r1: float, r2: float, t):
    """Survival function of ``Exp(r1) + Exp(r2)``, stable as ``r1 -> r2``.

    ``(r1 e^{-r2 t} - r2 e^{-r1 t}) / (r1 - r2)``; for ``|r1 - r2| t <= 1`` the
    difference is rewritten with ``expm1`` so no digits cancel.
    """
    t = np.asarray(t, dtype=float)
    d = r1 - r2
    if d == 0.0:
        return erlang2_sf(r1, t)
    with np.errstate(over="ignore", invalid="ignore"):
        near = np.abs(d * t) <= 1.0
        stable = np.exp(-r1 * t) * (1.0 + r1 * np.expm1(d * t) / d)
        direct = (r1 * np.exp(-r2 * t) - r2 * np.exp(-r1 * t)) / d
    return np.where(near, stable, direct)


def hypoexp_cdf(r1: float, r2: float, t):
    return 1.0 - hypoexp_sf(r1, r2, t)


def busy_cdf_special(params: QueueParams, beta: float, t):
    """Closed-form busy-period CDF for the special service family.

    ``1 - ((1 - e^-rho)(lam + beta)/lam) exp(-e^-rho (lam + beta) t)``.
    """
    beta = _beta_checked(params, beta)
    tt = _nonneg(t)
    a = params.lam + beta
    q = -math.expm1(-params.rho) * a / params.lam
    return _out(1.0 - q * np.exp(-math.exp(-params.rho) * a * tt), t)


def cycle_cdf_special(params: QueueParams, beta: float, t):
    """Closed-form busy-cycle CDF ``P(I + B <= t)`` for the special family.

    The busy period is an atom ``p0`` at zero plus ``q`` times an
    Exponential(mu) law with ``mu = e^-rho (lam + beta)``; adding the
    Exponential(lam) idle period gives

        1 - (1-e^-rho)(lam+beta)/(lam-mu) e^{-mu t} + beta/(lam-mu) e^{-lam t}.

    When ``lam - mu`` vanishes (``beta = lam (e^rho - 1)``, reachable for
    ``rho <= ln 2``) the limit is ``1 - (1 + (e^rho - 1) lam t) e^{-lam t}``.
    """
    beta = _beta_checked(params, beta)
    tt = _nonneg(t)
    lam = params.lam
    a = lam + beta
    mu = math.exp(-params.rho) * a
    q = -math.expm1(-params.rho) * a / lam
    idle_sf = np.exp(-lam * tt)
    if abs(lam - mu) < SINGULAR_EPS * lam:
        sf = (1.0 + math.expm1(params.rho) * lam * tt) * idle_sf
    else:
        sf = (1.0 - q) * idle_sf + q * hypoexp_sf(lam, mu, tt)
    return _out(1.0 - sf, t)


def exp_smooth_linear(values: np.ndarray, rate: float, h: float) -> np.ndarray:
    """``int_0^t rate e^{-rate s} v(t - s) ds`` for ``v`` linear between grid points.

    The exponential is integrated exactly on each cell, which gives the
    recursion ``y[k+1] = E y[k] + w0 v[k] + w1 v[k+1]`` with ``E = e^{-rate h}``
    and ``w0 + w1 = 1 - E``, so no probability mass is created or lost.
    """
    x = rate * h
    decay = math.exp(-x)
    one_minus = -math.expm1(-x)
    w0 = (one_minus - x * decay) / x
    w1 = one_minus - w0
    y = lfilter([w1, w0], [1.0, -decay], values)
    # the filter starts with y[0] = w1 v[0]; the integral over [0, 0] is 0
    y -= w1 * values[0] * decay ** np.arange(values.size)
    return y


def cycle_cdf_from_busy(busy: Union[BusyCdfResult, Curve], params: QueueParams) -> Curve:
    """Busy-cycle CDF as the convolution of the idle and busy laws on the grid.

    The busy law's mass at zero, ``P(B <= 0)``, is convolved analytically.
    The remaining part is read as linear between grid points and integrated
    exactly against the Exponential(lam) idle density.
    """
    curve = busy.cdf if isinstance(busy, BusyCdfResult) else busy
    curve.check_cdf()
    lam, h = params.lam, curve.h
    t = curve.t
    atom = curve.values[0]
    cont = curve.values - atom
    values = -atom * np.expm1(-lam * t) + exp_smooth_linear(cont, lam, h)
    return Curve(
        h,
        np.clip(values, 0.0, 1.0),
        label=f"cycle[{curve.label}]" if curve.label else "cycle_cdf",
        provenance=f"Exp(lam) * {curve.provenance or curve.label}".strip(),
    )


def special_curve(fn, params: QueueParams, beta: float, h: float, horizon: float,
                  label: Optional[str] = None) -> Curve:
    t = grid(h, horizon)
    return Curve(h, fn(params, beta, t), label=label or fn.__name__,
                 provenance=f"closed form beta={beta:.12g}")
