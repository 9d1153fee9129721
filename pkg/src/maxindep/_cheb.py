"""Chebyshev-Lobatto collocation helpers on an interval [a, b]."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.interpolate import BarycentricInterpolator


class ChebGrid:
    """Lobatto points in increasing order, with D and indefinite-integral matrices."""

    def __init__(self, a: float, b: float, degree: int):
        self.a, self.b, self.n = float(a), float(b), int(degree)
        self.x = -np.cos(np.pi * np.arange(self.n + 1) / self.n)
        self.t = self.a + (self.b - self.a) * (self.x + 1.0) / 2.0
        self.D, self.Q = _matrices(self.n)
        h = (self.b - self.a) / 2.0
        self.D = self.D / h
        self.Q = self.Q * h  # integral from a
        self.QR = self.Q - self.Q[-1]  # integral from b

    def interp(self, values, t):
        return BarycentricInterpolator(self.t, values)(np.asarray(t, dtype=float))

    def weights(self):
        """Clenshaw-Curtis weights for the grid."""
        return self.Q[-1].copy()


@lru_cache(maxsize=8)
def _matrices(n: int):
    x = -np.cos(np.pi * np.arange(n + 1) / n)
    V = C.chebvander(x, n)
    Vi = np.linalg.inv(V)
    Dm = np.zeros((n + 1, n + 1))
    Im = np.zeros((n + 2, n + 1))
    for k in range(n + 1):
        e = np.zeros(n + 1)
        e[k] = 1.0
        d = C.chebder(e)
        Dm[: len(d), k] = d
        Im[:, k] = C.chebint(e, lbnd=-1)
    return V @ Dm @ Vi, C.chebvander(x, n + 1) @ Im @ Vi
