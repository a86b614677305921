"""Uniform-grid sampled functions of time and their CSV form."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

CDF_MONOTONE_TOL = 1e-9
CDF_UPPER_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Curve:
    """Values of a function on ``t = 0, h, 2h, ...``.

    Between grid points the curve is read by linear interpolation; past the
    horizon it is held at its final value.
    """

    h: float
    values: np.ndarray
    label: str = ""
    provenance: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("a curve needs at least two values")
        if not self.h > 0:
            raise ValueError("grid step must be positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def t0(self) -> float:
        return 0.0

    @property
    def t(self) -> np.ndarray:
        return self.h * np.arange(self.values.size)

    @property
    def horizon(self) -> float:
        return self.h * (self.values.size - 1)

    def __len__(self) -> int:
        return self.values.size

    def __call__(self, t):
        return np.interp(t, self.t, self.values)

    def check_cdf(self) -> None:
        """Raise ``ValueError`` unless the curve is a plausible distribution function."""
        v = self.values
        if np.any(np.isnan(v)):
            raise ValueError(f"{self.label or 'curve'}: NaN values")
        if v.min() < -CDF_UPPER_TOL or v.max() > 1.0 + CDF_UPPER_TOL:
            raise ValueError(f"{self.label or 'curve'}: values leave [0, 1]")
        if np.any(np.diff(v) < -CDF_MONOTONE_TOL):
            raise ValueError(f"{self.label or 'curve'}: not nondecreasing")

    def to_csv(self, path: Union[str, Path]) -> None:
        write_columns(path, {"t": self.t, "value": self.values})

    @classmethod
    def from_csv(cls, path: Union[str, Path], label: str = "", provenance: str = "") -> "Curve":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        t, v = data[:, 0], data[:, 1]
        h = float(t[1] - t[0])
        if not np.allclose(np.diff(t), h, rtol=1e-9, atol=1e-12):
            raise ValueError("curve CSV must be on a uniform grid")
        return cls(h, v, label=label, provenance=provenance)


def grid(h: float, horizon: float) -> np.ndarray:
    """Uniform grid ``0, h, ..., n h`` with ``n h`` the first point at or past ``horizon``."""
    if not (h > 0 and horizon > h):
        raise ValueError("need 0 < h < horizon")
    n = int(np.ceil(horizon / h - 1e-9))
    return h * np.arange(n + 1)


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    return f"{float(x):.12g}"


def write_columns(path: Union[str, Path], columns: dict) -> None:
    names = list(columns)
    cols = [columns[k] for k in names]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(names) + "\n")
        for row in zip(*cols):
            fh.write(",".join(_fmt(x) for x in row) + "\n")
