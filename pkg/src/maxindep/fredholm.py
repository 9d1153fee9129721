"""Nystrom discretization of symmetric kernels, Fredholm determinants, spectra."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .specfun import airy_ai


class InvalidOperatorError(ValueError):
    pass


class KernelEvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class QuadGrid:
    nodes: np.ndarray
    weights: np.ndarray
    lower: float
    upper: float

    def __post_init__(self):
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")

    def __len__(self):
        return len(self.nodes)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def shifted(self, delta: float) -> "QuadGrid":
        return QuadGrid(self.nodes + delta, self.weights, self.lower + delta, self.upper + delta)


def gauss_legendre(a: float, b: float, panels: int = 10, order: int = 16) -> QuadGrid:
    """Composite Gauss-Legendre rule on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        nodes.append(lo + half * (x + 1.0))
        weights.append(half * w)
    return QuadGrid(np.concatenate(nodes), np.concatenate(weights), float(a), float(b))


def halfline_cutoff(s: float) -> float:
    return max(20.0, s + 20.0)


def halfline_grid(s: float = 0.0, panels: int = 10, order: int = 16, cutoff: Optional[float] = None) -> QuadGrid:
    """Truncated copy of R_+ adapted to kernels shifted by s."""
    L = halfline_cutoff(s) if cutoff is None else cutoff
    return gauss_legendre(0.0, L, panels, order)


@dataclass
class KernelOperator:
    matrix: np.ndarray
    grid: Optional[QuadGrid]
    symmetrized: bool = True
    _eig: Optional[tuple] = field(default=None, repr=False, compare=False)
    kernel: Optional[Callable] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        m = self.matrix
        if m.shape[0] != m.shape[1]:
            raise ValueError("matrix must be square")
        if not np.allclose(m, m.T, rtol=0, atol=1e-13 * max(1.0, np.abs(m).max())):
            raise InvalidOperatorError("matrix is not symmetric")

    def eig(self):
        if self._eig is None:
            vals, vecs = np.linalg.eigh(0.5 * (self.matrix + self.matrix.T))
            order = np.argsort(vals)[::-1]
            self._eig = (vals[order], vecs[:, order])
        return self._eig

    def to_json(self) -> str:
        payload = {"matrix": self.matrix.tolist(), "symmetrized": self.symmetrized}
        if self.grid is not None:
            payload["grid"] = {
                "nodes": self.grid.nodes.tolist(),
                "weights": self.grid.weights.tolist(),
                "domain": [self.grid.lower, self.grid.upper],
            }
        return json.dumps(payload)


def discretize(kernel: Callable, grid: QuadGrid) -> KernelOperator:
    """Nystrom matrix sqrt(w_i w_j) K(x_i, x_j)."""
    x = grid.nodes
    X, Y = np.meshgrid(x, x, indexing="ij")
    K = np.asarray(kernel(X, Y), dtype=float)
    bad = np.argwhere(~np.isfinite(K))
    if len(bad):
        i, j = bad[0]
        raise KernelEvaluationError(f"non-finite kernel value at nodes ({i}, {j})")
    sw = np.sqrt(grid.weights)
    M = sw[:, None] * K * sw[None, :]
    M = 0.5 * (M + M.T)
    return KernelOperator(M, grid, True, kernel=kernel)


def airy_kernel(x, y):
    """Christoffel-Darboux form of the Airy kernel, exact diagonal."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ax, apx = airy_ai(x)
    ay, apy = airy_ai(y)
    d = x - y
    same = np.abs(d) < 1e-10
    safe = np.where(same, 1.0, d)
    off = (ax * apy - apx * ay) / safe
    diag = apx * apx - x * ax * ax
    return np.where(same, diag, off)


def shifted_airy_kernel(s: float):
    """K_{Ai_s}(x, y) = K_Ai(x + s, y + s) on the half-line."""
    return lambda x, y: airy_kernel(np.asarray(x) + s, np.asarray(y) + s)


def airy_operator(s: float, grid: Optional[QuadGrid] = None) -> KernelOperator:
    g = halfline_grid(s) if grid is None else grid
    return discretize(shifted_airy_kernel(s), g)


def hankel_operator(symbol: Callable, grid: QuadGrid) -> KernelOperator:
    """Nystrom matrix of the Hankel operator f -> int symbol(x + y) f(y) dy."""
    return discretize(lambda x, y: symbol(np.asarray(x) + np.asarray(y)), grid)


def fredholm_det(op: KernelOperator) -> float:
    vals, _ = op.eig()
    if len(vals) and np.max(np.abs(vals)) >= 1.0:
        raise InvalidOperatorError(f"spectral radius {np.max(np.abs(vals)):.3g} >= 1")
    return float(np.prod(1.0 - vals))


@dataclass
class Eigenpair:
    value: float
    node_values: np.ndarray  # psi at grid nodes, L2(grid) normalized
    op: KernelOperator = field(repr=False)

    def __call__(self, x):
        """Nystrom interpolation psi(x) = lambda^-1 int K(x, y) psi(y) dy."""
        g = self.op.grid
        x = np.atleast_1d(np.asarray(x, dtype=float))
        K = self.op.kernel(x[:, None], g.nodes[None, :])
        return (K @ (g.weights * self.node_values)) / self.value


def leading_spectrum(op: KernelOperator, k_max: int) -> list[Eigenpair]:
    n = op.matrix.shape[0]
    if k_max > n:
        raise ValueError(f"k_max={k_max} exceeds matrix size {n}")
    vals, vecs = op.eig()
    sw = np.sqrt(op.grid.weights) if op.grid is not None else np.ones(n)
    out = []
    for k in range(k_max):
        out.append(Eigenpair(float(vals[k]), vecs[:, k] / sw, op))
    return out


@dataclass(frozen=True)
class DiscreteDet:
    value: float
    tail_trace: float
    truncation_ok: bool


def discrete_fredholm_det(kernel: Callable, shift: int, truncation: int, tail_tol: float = 1e-12) -> DiscreteDet:
    """det(I - K) over indices shift, shift+1, ..., shift+truncation-1."""
    idx = shift + np.arange(truncation)
    X, Y = np.meshgrid(idx, idx, indexing="ij")
    K = np.asarray(kernel(X, Y), dtype=float)
    K = 0.5 * (K + K.T)
    vals = np.linalg.eigvalsh(K)
    # next few diagonal entries bound the dropped trace (diagonal decays fast)
    extra = shift + truncation + np.arange(8)
    tail = float(np.sum(np.abs(np.asarray(kernel(extra, extra), dtype=float))))
    return DiscreteDet(float(np.prod(1.0 - vals)), tail, tail < tail_tol)


def trace(op: KernelOperator) -> float:
    return float(np.trace(op.matrix))


__all__ = [
    "QuadGrid", "KernelOperator", "Eigenpair", "DiscreteDet", "InvalidOperatorError",
    "KernelEvaluationError", "gauss_legendre", "halfline_grid", "halfline_cutoff", "discretize",
    "airy_kernel", "shifted_airy_kernel", "airy_operator", "hankel_operator", "fredholm_det",
    "leading_spectrum", "discrete_fredholm_det", "trace",
]
