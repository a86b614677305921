"""Queue parameters and service-time laws for the M|G|inf queue.

Every model exposes the service CDF ``G``, its survival ``1 - G``, the
integrated survival ``int_0^t (1 - G)``, and from those the equilibrium
(stationary-excess) law ``F``/``f`` and the busy-period kernel ``c``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

TABLE_MASS_TOL = 1e-6
BETA_RANGE_RTOL = 1e-12


class DomainError(ValueError):
    """Argument outside the domain of a distribution function."""


class ExtrapolationError(ValueError):
    """Tabulated law evaluated beyond its grid before reaching 1."""


@dataclass(frozen=True)
class QueueParams:
    """Arrival rate ``lam`` and mean service time ``alpha``; ``rho`` is derived."""

    lam: float
    alpha: float
    rho: float = field(init=False)

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise DomainError(f"arrival rate must be positive, got {self.lam}")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise DomainError(f"mean service time must be positive, got {self.alpha}")
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "rho", self.lam * self.alpha)

    @classmethod
    def from_rho(cls, lam: float, rho: float) -> "QueueParams":
        return cls(lam, rho / lam)

    def default_horizon(self) -> float:
        return 30.0 * self.alpha + 10.0 / self.lam


@dataclass(frozen=True)
class Exponential:
    """Exponential service with mean ``params.alpha``."""

    def validate(self, params: QueueParams) -> None:
        pass

    def sf(self, params: QueueParams, t):
        return np.exp(-np.asarray(t, dtype=float) / params.alpha)

    def integrated_sf(self, params: QueueParams, t):
        return -params.alpha * np.expm1(-np.asarray(t, dtype=float) / params.alpha)

    def mean(self, params: QueueParams) -> float:
        return params.alpha


@dataclass(frozen=True)
class SpecialFamily:
    """The one-parameter family for which the busy period has a closed form.

    Writing ``a = lam + beta``, ``A = lam e^-rho`` and ``C = lam (1 - e^-rho)``,

        1 - G(t) = (1 - e^-rho) a e^{-a t} / (A + C e^{-a t}),

    which is the usual form with ``e^{a t}`` factored out of the denominator,
    so nothing overflows for large ``t``.  ``G(0) = 1 - (1 - e^-rho) a / lam``
    is an atom at zero service time whenever ``beta`` is below the upper
    end of its range.
    """

    beta: float

    @staticmethod
    def beta_range(params: QueueParams) -> tuple[float, float]:
        return -params.lam, params.lam / math.expm1(params.rho)

    def validate(self, params: QueueParams) -> None:
        lo, hi = self.beta_range(params)
        slack = BETA_RANGE_RTOL * max(abs(lo), abs(hi))
        if not (lo - slack <= self.beta <= hi + slack):
            raise DomainError(
                f"beta={self.beta} outside [{lo}, {hi}] for lam={params.lam}, rho={params.rho}"
            )

    def _consts(self, params: QueueParams):
        lo, hi = self.beta_range(params)
        beta = min(max(self.beta, lo), hi)
        a = params.lam + beta
        em = math.exp(-params.rho)
        return a, params.lam * em, -params.lam * math.expm1(-params.rho), -math.expm1(-params.rho) * a

    def atom(self, params: QueueParams) -> float:
        """Probability of a zero service time, ``G(0)``."""
        a, _, _, k = self._consts(params)
        return max(0.0, 1.0 - k / params.lam)

    def sf(self, params: QueueParams, t):
        a, big_a, c, k = self._consts(params)
        decay = np.exp(-a * np.asarray(t, dtype=float))
        return k * decay / (big_a + c * decay)

    def integrated_sf(self, params: QueueParams, t):
        # lam * int_0^t (1 - G) = -log((A + C e^{-a t}) / lam)
        a, big_a, c, _ = self._consts(params)
        decay = np.exp(-a * np.asarray(t, dtype=float))
        return -np.log((big_a + c * decay) / params.lam) / params.lam

    def mean(self, params: QueueParams) -> float:
        a = self._consts(params)[0]
        return params.alpha if a > 0 else 0.0

    def quantile(self, params: QueueParams, u):
        """Generalized inverse of ``G``; zero on the atom."""
        a, big_a, c, k = self._consts(params)
        u = np.asarray(u, dtype=float)
        if a == 0.0:
            return np.zeros_like(u)
        surv = 1.0 - u
        with np.errstate(divide="ignore", invalid="ignore"):
            x = (k / surv - c) / big_a
            out = np.log(np.maximum(x, 1.0)) / a
        return np.where(u <= self.atom(params), 0.0, out)


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Service CDF given on a grid ``t[0] = 0 < t[1] < ...``, linearly interpolated."""

    t: np.ndarray
    G: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        g = np.asarray(self.G, dtype=float)
        if t.ndim != 1 or t.shape != g.shape or t.size < 2:
            raise ValueError("t and G must be 1-D arrays of equal length >= 2")
        if t[0] != 0.0:
            raise ValueError("tabulated grid must start at t = 0")
        if np.any(np.diff(t) <= 0):
            raise ValueError("tabulated t must be strictly increasing")
        if np.any(np.diff(g) < 0):
            raise ValueError("tabulated G must be nondecreasing")
        if g[0] < 0 or g[-1] > 1 + TABLE_MASS_TOL:
            raise ValueError("tabulated G must lie in [0, 1]")
        if abs(g[-1] - 1.0) > TABLE_MASS_TOL:
            raise ValueError(f"defective service law: final G = {g[-1]!r}")
        g = np.minimum(g, 1.0)
        t.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "G", g)
        cum = np.concatenate(([0.0], np.cumsum(0.5 * np.diff(t) * (2.0 - g[1:] - g[:-1]))))
        cum.setflags(write=False)
        object.__setattr__(self, "_cum_sf", cum)

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "Tabulated":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = [h.strip() for h in next(reader)]
            if header != ["t", "G"]:
                raise ValueError(f"expected header 't,G', got {','.join(header)!r}")
            rows = [(float(r[0]), float(r[1])) for r in reader if r]
        arr = np.array(rows, dtype=float)
        return cls(arr[:, 0], arr[:, 1])

    def to_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("t,G\n")
            for ti, gi in zip(self.t, self.G):
                fh.write(f"{ti:.12g},{gi:.12g}\n")

    def validate(self, params: QueueParams) -> None:
        m = self.mean(params)
        if abs(m - params.alpha) > 1e-6 * max(m, params.alpha):
            raise DomainError(
                f"params.alpha={params.alpha} does not match the table mean {m}"
            )

    def _check(self, t: np.ndarray) -> None:
        if np.any(t > self.t[-1]) and self.G[-1] < 1.0:
            raise ExtrapolationError(
                f"t beyond tabulated grid end {self.t[-1]} with G={self.G[-1]} < 1"
            )

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        self._check(t)
        return np.interp(t, self.t, self.G, right=self.G[-1])

    def sf(self, params: QueueParams, t):
        return 1.0 - self.cdf(t)

    def integrated_sf(self, params: QueueParams, t):
        t = np.asarray(t, dtype=float)
        self._check(t)
        tc = np.minimum(t, self.t[-1])
        i = np.clip(np.searchsorted(self.t, tc, side="right") - 1, 0, self.t.size - 2)
        dt = tc - self.t[i]
        s0 = 1.0 - self.G[i]
        s1 = 1.0 - np.interp(tc, self.t, self.G)
        return self._cum_sf[i] + 0.5 * dt * (s0 + s1)

    def mean(self, params: QueueParams = None) -> float:
        return float(self._cum_sf[-1])

    def quantile(self, params: QueueParams, u):
        u = np.asarray(u, dtype=float)
        j = np.clip(np.searchsorted(self.G, u, side="left"), 0, self.t.size - 1)
        jm = np.maximum(j - 1, 0)
        g0, g1 = self.G[jm], self.G[j]
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(g1 > g0, (u - g0) / (g1 - g0), 1.0)
        out = self.t[jm] + np.clip(w, 0.0, 1.0) * (self.t[j] - self.t[jm])
        return np.where(j == 0, self.t[0], out)


ServiceModel = Union[Exponential, SpecialFamily, Tabulated]


def _time(t):
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("t must be nonnegative")
    return arr


def _out(x, t):
    return float(x) if np.ndim(t) == 0 else x


def service_cdf(model: ServiceModel, params: QueueParams, t):
    """Service-time distribution function G(t)."""
    model.validate(params)
    tt = _time(t)
    return _out(np.clip(1.0 - model.sf(params, tt), 0.0, 1.0), t)


def equilibrium_cdf(model: ServiceModel, params: QueueParams, t):
    """F(t) = (1/alpha) int_0^t (1 - G(x)) dx."""
    model.validate(params)
    tt = _time(t)
    m = model.mean(params)
    if m == 0.0:
        return _out(np.zeros_like(tt), t)
    return _out(np.clip(model.integrated_sf(params, tt) / m, 0.0, 1.0), t)


def equilibrium_pdf(model: ServiceModel, params: QueueParams, t):
    """f(t) = (1 - G(t)) / alpha."""
    model.validate(params)
    tt = _time(t)
    m = model.mean(params)
    if m == 0.0:
        return _out(np.zeros_like(tt), t)
    return _out(model.sf(params, tt) / m, t)


def busy_kernel(model: ServiceModel, params: QueueParams, t):
    """c(t) = lam (1 - G(t)) exp(-lam int_0^t (1 - G))."""
    model.validate(params)
    tt = _time(t)
    lam = params.lam
    c = lam * model.sf(params, tt) * np.exp(-lam * model.integrated_sf(params, tt))
    return _out(c, t)
