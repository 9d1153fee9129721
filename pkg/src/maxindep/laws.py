"""Tabulated laws of scalar random variables."""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator


class CoverageError(ValueError):
    """The tabulated mass misses the prescribed tolerance."""

    def __init__(self, msg, total=None):
        super().__init__(msg)
        self.total = total


@dataclass
class TabulatedLaw:
    """cdf (and optionally pdf) on an increasing grid, monotone cubic in between."""

    grid: np.ndarray
    cdf_values: np.ndarray
    pdf_values: Optional[np.ndarray] = None
    name: str = ""
    end_tol: float = 1e-6
    _interp: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.cdf_values = np.asarray(self.cdf_values, dtype=float)
        if self.grid.ndim != 1 or len(self.grid) != len(self.cdf_values) or len(self.grid) < 2:
            raise ValueError("grid and cdf must be 1-d arrays of equal length >= 2")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(np.diff(self.cdf_values) < -1e-12):
            i = int(np.argmin(np.diff(self.cdf_values)))
            raise ValueError(f"cdf decreases near {self.grid[i]:.6g}")
        self.cdf_values = np.clip(np.maximum.accumulate(self.cdf_values), 0.0, 1.0)
        if self.pdf_values is not None:
            self.pdf_values = np.asarray(self.pdf_values, dtype=float)
            if np.any(self.pdf_values < -1e-12):
                raise ValueError("pdf has negative values")
            self.pdf_values = np.maximum(self.pdf_values, 0.0)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            self._interp = PchipInterpolator(self.grid, self.cdf_values, extrapolate=False)

    # -- evaluation
    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.asarray(self._interp(np.clip(x, self.grid[0], self.grid[-1])), dtype=float)
        out = np.where(x < self.grid[0], 0.0, out)
        out = np.where(x > self.grid[-1], 1.0, out)
        return float(out) if out.ndim == 0 else out

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.pdf_values is not None:
            out = np.interp(x, self.grid, self.pdf_values, left=0.0, right=0.0)
        else:
            out = np.where((x < self.grid[0]) | (x > self.grid[-1]), 0.0,
                           self._interp(np.clip(x, self.grid[0], self.grid[-1]), 1))
        return float(out) if np.ndim(out) == 0 else out

    def survival(self, x):
        return 1.0 - self.cdf(x)

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        c = self.cdf_values
        keep = np.concatenate([[True], np.diff(c) > 0])
        return np.interp(p, c[keep], self.grid[keep])

    def sample(self, rng: np.random.Generator, size: int):
        return self.quantile(rng.random(size))

    # -- checks
    def coverage(self) -> tuple[float, float]:
        return float(self.cdf_values[0]), float(1.0 - self.cdf_values[-1])

    def validate(self, pdf_tol: float = 1e-6):
        left, right = self.coverage()
        if left > self.end_tol or right > self.end_tol:
            raise CoverageError(f"{self.name or 'law'}: end masses {left:.3g}, {right:.3g} exceed {self.end_tol:g}",
                                total=1.0 - left - right)
        if self.pdf_values is not None:
            cells = np.diff(self.grid) * 0.5 * (self.pdf_values[1:] + self.pdf_values[:-1])
            bad = np.max(np.abs(cells - np.diff(self.cdf_values)))
            if bad > pdf_tol:
                raise ValueError(f"pdf inconsistent with cdf increments ({bad:.3g})")
        return self

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("s,pdf,cdf\n")
        pdf = self.pdf_values if self.pdf_values is not None else self.pdf(self.grid)
        for s, f, c in zip(self.grid, pdf, self.cdf_values):
            buf.write(f"{s:.17g},{f:.17g},{c:.17g}\n")
        return buf.getvalue()


def cumulative_from_right(grid, density, tail: float = 0.0):
    """int_s^{grid[-1]} density + tail, by integrating a cubic spline of the density."""
    sp = CubicSpline(grid, density).antiderivative()
    return sp(grid[-1]) - sp(grid) + tail


def cumulative_from_left(grid, density, head: float = 0.0):
    sp = CubicSpline(grid, density).antiderivative()
    return sp(grid) - sp(grid[0]) + head


def law_from_density(grid, density, name="", right_tail: float = 0.0, end_tol: float = 1e-6) -> TabulatedLaw:
    """cdf(s) = 1 - int_s^inf density; mass to the right of the grid passed as right_tail."""
    grid = np.asarray(grid, dtype=float)
    density = np.maximum(np.asarray(density, dtype=float), 0.0)
    cdf = 1.0 - cumulative_from_right(grid, density, right_tail)
    return TabulatedLaw(grid, np.clip(cdf, 0.0, 1.0), density, name=name, end_tol=end_tol)


def product_cdf(laws, x):
    """cdf of the maximum of independent variables."""
    out = np.ones_like(np.asarray(x, dtype=float))
    for law in laws:
        out = out * law.cdf(x)
    return out
