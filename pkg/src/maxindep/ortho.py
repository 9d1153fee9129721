"""Parametric orthogonal polynomials and the max/min-independence laws built on them.

Truncated measures are discretized by composite Gauss-Legendre rules and their
Jacobi (or Hessenberg) matrices obtained by Lanczos / Arnoldi with full
reorthogonalization, which is the discretized Stieltjes procedure in stable form.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import dblquad, quad
from scipy.special import gammainc, gammaln, log_ndtr

from .laws import CoverageError, TabulatedLaw

SQRT2PI = math.sqrt(2.0 * math.pi)


class PrecisionError(ArithmeticError):
    pass


class MeasureError(ValueError):
    pass


def precision_mode(default: str = "double") -> str:
    mode = os.environ.get("MAXINDEP_PRECISION", default)
    if mode not in ("double", "extended"):
        raise ValueError(f"precision must be double or extended, got {mode!r}")
    return mode


# ---------------------------------------------------------------- discretized Stieltjes

def _lanczos(x, w, n, dtype=np.float64):
    """Recurrence coefficients a_0..a_{n-1}, b_1..b_{n-1} of the discrete measure sum w_i delta_{x_i}.

    Returns (a, b, Q) where Q[:, j] = sqrt(w) p_j(x) for the orthonormal p_j.
    """
    x = np.asarray(x, dtype=dtype)
    q = np.sqrt(np.asarray(w, dtype=dtype))
    m0 = np.sum(q * q)
    Q = np.zeros((len(x), n), dtype=dtype)
    Q[:, 0] = q / np.sqrt(m0)
    a = np.zeros(n, dtype=dtype)
    b = np.zeros(n, dtype=dtype)  # b[j] = beta_j = (norm ratio), b[0] unused
    for j in range(n):
        v = x * Q[:, j]
        a[j] = np.dot(Q[:, j], v)
        v = v - a[j] * Q[:, j]
        if j:
            v = v - np.sqrt(b[j]) * Q[:, j - 1]
        for _ in range(2):  # full reorthogonalization
            v = v - Q[:, : j + 1] @ (Q[:, : j + 1].T @ v)
        if j + 1 < n:
            nv = np.sqrt(np.dot(v, v))
            b[j + 1] = nv * nv
            Q[:, j + 1] = v / nv
    return a, b, Q, m0


def _gaussian_rule(lo: float, hi: float, n_nodes: int = 1200):
    """Composite Gauss-Legendre rule for phi(x) dx on [lo, hi]."""
    t, tw = np.polynomial.legendre.leggauss(24)
    panels = max(1, n_nodes // 24)
    edges = np.linspace(lo, hi, panels + 1)
    h = 0.5 * np.diff(edges)
    x = (edges[:-1, None] + h[:, None] * (t[None, :] + 1)).ravel()
    w = (h[:, None] * tw[None, :]).ravel() * np.exp(-0.5 * x * x) / SQRT2PI
    return x, w


@dataclass
class ParametricOPRL:
    """Monic orthogonal polynomials of degree <= k for phi restricted to (-inf, t] (or [t, inf))."""

    k: int
    t: float
    side: str
    a: np.ndarray
    b: np.ndarray  # b[j] = ||p_j||^2 / ||p_{j-1}||^2 for j >= 1
    log_m0: float
    residual: float

    def log_norm2(self, j: Optional[int] = None) -> float:
        j = self.k if j is None else j
        return self.log_m0 + float(np.sum(np.log(self.b[1 : j + 1])))

    @property
    def norm2(self) -> float:
        return math.exp(self.log_norm2())

    def coefficients(self) -> np.ndarray:
        """Monic coefficients of P_k, lowest degree first."""
        pm, p = np.zeros(1), np.ones(1)
        for j in range(self.k):
            nxt = np.concatenate([[0.0], p]) - self.a[j] * np.concatenate([p, [0.0]])
            if j:
                nxt[: len(pm)] -= self.b[j] * pm
            pm, p = p, nxt
        return p

    def __call__(self, x):
        """Monic P_k(x) by the three-term recurrence."""
        x = np.asarray(x, dtype=float)
        pm, p = np.zeros_like(x), np.ones_like(x)
        for j in range(self.k):
            pm, p = p, (x - self.a[j]) * p - (self.b[j] * pm if j else 0.0)
        return p

    def log_abs_orthonormal_at(self, x: float) -> float:
        """log |P_k(x)| - log ||P_k|| evaluated with per-step rescaling."""
        pm, p = 0.0, 1.0 / math.exp(0.5 * self.log_m0)
        logscale = 0.0
        for j in range(self.k):
            nxt = ((x - self.a[j]) * p - (math.sqrt(self.b[j]) * pm if j else 0.0)) / math.sqrt(self.b[j + 1])
            pm, p = p, nxt
            m = max(abs(p), abs(pm))
            if m > 1e100 or (0 < m < 1e-100):
                p, pm, logscale = p / m, pm / m, logscale + math.log(m)
        return logscale + math.log(abs(p)) if p != 0 else -math.inf


def _truncated_gaussian(k: int, t: float, side: str, precision: str) -> ParametricOPRL:
    if side not in ("max", "min"):
        raise ValueError("side must be max or min")
    # reflect the min side: [t, inf) under x -> -x is (-inf, -t]
    tt = t if side == "max" else -t
    lo = min(tt, 0.0) - 40.0 - 2.0 * math.sqrt(k + 1)
    hi = tt
    n_nodes = 600 + 24 * k
    x, w = _gaussian_rule(lo, hi, n_nodes)
    if np.sum(w) <= 0:
        raise PrecisionError(f"truncated Gaussian mass underflows at t={t}")
    dtype = np.longdouble if precision == "extended" else np.float64
    a, b, Q, m0 = _lanczos(x, w, k + 1, dtype)
    G = Q.T @ Q
    res = float(np.max(np.abs(G - np.eye(k + 1))))
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if side == "min":
        a = -a
    log_m0 = float(log_ndtr(tt))
    return ParametricOPRL(k, t, side, a, b, log_m0, res)


def truncated_hermite(k: int, t: float, side: str = "max", precision: Optional[str] = None) -> ParametricOPRL:
    """H_k(.|t) orthogonal for phi on (-inf, t] (side='max') or [t, inf) (side='min')."""
    precision = precision_mode() if precision is None else precision
    if k < 0:
        raise ValueError("k must be >= 0")
    if precision == "double" and k > 60:
        precision = "extended"
    op = _truncated_gaussian(k, t, side, precision)
    if op.residual > 1e-8:
        raise PrecisionError(f"orthogonality residual {op.residual:.2e} at k={k}, t={t}; use extended precision")
    return op


def diagonal_hermite_log2(k: int, x: float, side: str = "max") -> float:
    """log of H_k(x|x)^2 (side 'max') or of the tilde version (side 'min')."""
    op = truncated_hermite(k, x, side)
    return 2.0 * op.log_abs_orthonormal_at(x) + op.log_norm2()


def w_density(k: int, x, side: str = "max") -> np.ndarray:
    """f_{W_k}(x) = H_k(x|x)^2 phi(x) / k! (min side: tilde polynomials)."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.array([math.exp(diagonal_hermite_log2(k, float(v), side) - 0.5 * v * v - math.log(SQRT2PI) - gammaln(k + 1))
                    for v in xs])
    return out if np.ndim(x) else float(out[0])


def w_cdf(k: int, s, side: str = "max") -> np.ndarray:
    """P(W_k <= s) = ||H_k(.|s)||^2 / k! ; min side returns P(W~_k >= s) = ||H~_k(.|s)||^2 / k!."""
    xs = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.array([math.exp(min(0.0, truncated_hermite(k, float(v), side).log_norm2() - gammaln(k + 1))) for v in xs])
    return out if np.ndim(s) else float(out[0])


def _w_grid(k: int, n: int = 801) -> np.ndarray:
    edge = math.sqrt(4 * k + 2)
    return np.linspace(-edge - 9.0, edge + 9.0, n)


def law_w(k: int, side: str = "max", grid=None, tol: float = 1e-4) -> TabulatedLaw:
    """Law of W_k (side 'max') or of W~_k (side 'min'); cdf from norms, pdf from the diagonal."""
    g = _w_grid(k) if grid is None else np.asarray(grid, dtype=float)
    pdf = w_density(k, g, side)
    norms = w_cdf(k, g, side)
    cdf = norms if side == "max" else 1.0 - norms
    dx = np.diff(g)
    mass = float(np.sum(0.5 * dx * (pdf[1:] + pdf[:-1])))
    if abs(mass - 1.0) > tol:
        raise CoverageError(f"W_{k} ({side}): normalization defect {abs(mass - 1):.2e}", total=mass)
    return TabulatedLaw(g, cdf, pdf, name=f"W_{k}" if side == "max" else f"W~_{k}")


def gue_extreme_cdf(N: int, s: float, side: str = "max") -> float:
    """P(lambda_max <= s) = prod_k F_{W_k}(s); side 'min' returns P(lambda_min <= s)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if side == "max":
        return float(np.prod([w_cdf(k, s, "max") for k in range(N)]))
    return 1.0 - float(np.prod([w_cdf(k, s, "min") for k in range(N)]))


def gue_extreme_law(N: int, side: str = "max", n: int = 1201) -> TabulatedLaw:
    """Tabulated law of lambda_max (or lambda_min) of GUE_N from the product of W_k cdfs."""
    g = _w_grid(N - 1, n)
    if side == "max":
        cdf = np.prod([w_cdf(k, g, "max") for k in range(N)], axis=0)
    else:
        cdf = 1.0 - np.prod([w_cdf(k, g, "min") for k in range(N)], axis=0)
    return TabulatedLaw(g, cdf, name=f"GUE_{N} {side}")


def norm_derivative_residual(k: int, s: float, h: float = 1e-4) -> float:
    """Relative gap between d/ds ||H_k(.|s)||^2 (central difference) and H_k(s|s)^2 phi(s)."""
    fd = (math.exp(truncated_hermite(k, s + h).log_norm2()) - math.exp(truncated_hermite(k, s - h).log_norm2())) / (2 * h)
    exact = math.exp(diagonal_hermite_log2(k, s) - 0.5 * s * s) / SQRT2PI
    return abs(fd - exact) / exact


def min_max_duality_residual(k: int, t: float) -> float:
    """| k! - ||H~_k(.|t)||^2_{[t,inf)} - ||H_k(.|t)||^2_{(-inf,t]} | / k!; zero only for k = 0."""
    a = math.exp(truncated_hermite(k, t, "max").log_norm2() - gammaln(k + 1))
    b = math.exp(truncated_hermite(k, t, "min").log_norm2() - gammaln(k + 1))
    return abs(1.0 - a - b)


def reflection_residual(k: int, t: float) -> float:
    """| ||H~_k(.|t)||^2_{[t,inf)} - ||H_k(.|-t)||^2_{(-inf,-t]} | / k!, i.e. W~_k = -W_k in law."""
    a = math.exp(truncated_hermite(k, t, "min").log_norm2() - gammaln(k + 1))
    x, w = _gaussian_rule(t, t + 40.0 + 2.0 * math.sqrt(k + 1), 600 + 24 * k)
    _, b, _, m0 = _lanczos(x, w, k + 1)
    return abs(a - math.exp(math.log(m0) + float(np.sum(np.log(b[1:]))) - gammaln(k + 1)))


# ---------------------------------------------------------------- rescaling at the edge

def effective_shift(n: int, c: float) -> float:
    """(n - m) / n^{1/3} for the integer m = floor(n - c n^{1/3}) actually used."""
    m = int(math.floor(n - c * n ** (1.0 / 3.0)))
    return (n - m) / n ** (1.0 / 3.0)


def rescaled_density(n: int, c: float, y: float) -> float:
    """2^{-1/2} n^{1/6} f_{W^_m}(sqrt(2n) + 2^{-1/2} n^{-1/6} y) with m = n - c n^{1/3}, W^ = W / sqrt 2."""
    m = int(math.floor(n - c * n ** (1.0 / 3.0)))
    x = math.sqrt(2.0 * n) + y / (math.sqrt(2.0) * n ** (1.0 / 6.0))
    # f_{W^}(x) = sqrt 2 f_W(sqrt 2 x)
    return n ** (1.0 / 6.0) * w_density(m, math.sqrt(2.0) * x)


# ---------------------------------------------------------------- general line ensembles

@dataclass
class LineMeasure:
    """Weight rho on (lo, hi) with a truncated-moment oracle."""

    rho: Callable
    lo: float
    hi: float
    name: str = ""
    nodes: int = 1200

    def rule(self, t: float, side: str = "max"):
        a, b = (self.lo, min(t, self.hi)) if side == "max" else (max(t, self.lo), self.hi)
        if b <= a:
            return np.zeros(0), np.zeros(0)
        x, tw = np.polynomial.legendre.leggauss(24)
        panels = max(1, self.nodes // 24)
        edges = np.linspace(a, b, panels + 1)
        h = 0.5 * np.diff(edges)
        xs = (edges[:-1, None] + h[:, None] * (x[None, :] + 1)).ravel()
        ws = (h[:, None] * tw[None, :]).ravel() * self.rho(xs)
        return xs, ws

    def moments(self, t: float, n: int) -> np.ndarray:
        x, w = self.rule(t)
        return np.array([np.sum(w * x**j) for j in range(n)])


def gaussian_measure() -> LineMeasure:
    return LineMeasure(lambda x: np.exp(-0.5 * x * x) / SQRT2PI, -40.0, 40.0, "gaussian")


def _check_moments(measure: LineMeasure, k: int):
    m = measure.moments(measure.hi, 2 * k + 1)
    H = np.array([[m[i + j] for j in range(k + 1)] for i in range(k + 1)])
    d = np.diag(H)
    if not np.all(np.isfinite(H)) or np.any(d <= 0):
        raise MeasureError(f"moment matrix of {measure.name or 'measure'} has a non-positive diagonal")
    try:
        np.linalg.cholesky(H / np.sqrt(np.outer(np.diag(H), np.diag(H))))
    except np.linalg.LinAlgError as exc:
        raise MeasureError(f"moment matrix of {measure.name or 'measure'} is not positive definite") from exc


def parametric_opoly(measure: LineMeasure, k: int, t: float) -> ParametricOPRL:
    x, w = measure.rule(t)
    if len(x) == 0 or np.sum(w) <= 0:
        return ParametricOPRL(k, t, "max", np.zeros(k + 1), np.zeros(k + 1), -math.inf, 0.0)
    a, b, Q, m0 = _lanczos(x, w, k + 1)
    res = float(np.max(np.abs(Q.T @ Q - np.eye(k + 1))))
    return ParametricOPRL(k, t, "max", a, b, math.log(m0), res)


def _line_point(measure: LineMeasure, k: int, s: float, log_full: float) -> tuple[float, float]:
    """(density, cdf) of Y_{k+1} at s."""
    rho = float(measure.rho(np.array([s]))[0])
    op = parametric_opoly(measure, k, s)
    if not np.isfinite(op.log_m0) or (k and np.any(op.b[1 : k + 1] <= 0)):
        # empty arc: P_0 = 1, while P_k(s|s) -> 0 for k >= 1
        return (rho * math.exp(-log_full) if k == 0 else 0.0), 0.0
    ln = op.log_norm2()
    val = 2 * op.log_abs_orthonormal_at(s) + ln
    return math.exp(val - log_full) * rho, math.exp(min(0.0, ln - log_full))


def parametric_line_density(measure: LineMeasure, k: int, x: float) -> float:
    full = parametric_opoly(measure, k, measure.hi)
    return _line_point(measure, k, float(x), full.log_norm2())[0]


def parametric_line_law(measure: LineMeasure, k: int, grid=None, tol: float = 1e-6) -> TabulatedLaw:
    """Density P_k(x|x)^2 rho(x) / ||P_k(.|inf)||^2, cdf ||P_k(.|s)||^2 / ||P_k(.|inf)||^2.

    Normalization is checked by adaptive quadrature of the density, independently of the cdf.
    """
    _check_moments(measure, k)
    log_full = parametric_opoly(measure, k, measure.hi).log_norm2()
    g = np.linspace(measure.lo, measure.hi, 801) if grid is None else np.asarray(grid, dtype=float)
    pdf, cdf = np.array([_line_point(measure, k, float(s), log_full) for s in g]).T
    mass = quad(lambda x: _line_point(measure, k, x, log_full)[0], measure.lo, measure.hi,
                limit=200, epsabs=1e-10, epsrel=1e-10)[0]
    if abs(mass - 1.0) > tol:
        raise CoverageError(f"line law k={k}: normalization defect {abs(mass - 1):.2e}", total=mass)
    return TabulatedLaw(g, cdf, pdf, name=f"Y_{k + 1}")


# ---------------------------------------------------------------- partial-arc OPUC

@dataclass
class PartialArcOPUC:
    """Monic OPUC of degree <= k for rho(phi) dphi / 2pi restricted to the arc [0, theta)."""

    k: int
    theta: float
    H: np.ndarray  # Hessenberg recurrence of z on the orthonormal basis
    m0: float
    residual: float

    def log_norm2(self) -> float:
        return math.log(self.m0) + 2.0 * float(np.sum(np.log(np.abs(np.diag(self.H, -1)[: self.k]))))

    def orthonormal_at(self, z: complex) -> complex:
        q = [1.0 / math.sqrt(self.m0) + 0j]
        for j in range(self.k):
            v = z * q[j] - sum(self.H[i, j] * q[i] for i in range(j + 1))
            q.append(v / self.H[j + 1, j])
        return q[self.k]

    def monic_at(self, z: complex) -> complex:
        return self.orthonormal_at(z) * math.exp(0.5 * self.log_norm2())


def partial_arc_opuc(rho: Callable, k: int, theta: float, nodes: int = 480) -> PartialArcOPUC:
    """Arnoldi (complex Gram-Schmidt with reorthogonalization) on the discretized arc measure."""
    t, tw = np.polynomial.legendre.leggauss(24)
    panels = max(1, nodes // 24)
    edges = np.linspace(0.0, theta, panels + 1)
    h = 0.5 * np.diff(edges)
    phi = (edges[:-1, None] + h[:, None] * (t[None, :] + 1)).ravel()
    w = (h[:, None] * tw[None, :]).ravel() * rho(phi) / (2 * math.pi)
    z = np.exp(1j * phi)
    m0 = float(np.sum(w))
    Q = np.zeros((len(z), k + 1), dtype=complex)
    Q[:, 0] = np.sqrt(w) / math.sqrt(m0)
    H = np.zeros((k + 1, k + 1), dtype=complex)
    for j in range(k):
        v = z * Q[:, j]
        for _ in range(2):
            c = Q[:, : j + 1].conj().T @ v
            v = v - Q[:, : j + 1] @ c
            H[: j + 1, j] += c
        nv = np.linalg.norm(v)
        if nv < 1e-13:
            raise PrecisionError(f"arc Gram-Schmidt broke down at degree {j + 1}")
        H[j + 1, j] = nv
        Q[:, j + 1] = v / nv
    res = float(np.max(np.abs(Q.conj().T @ Q - np.eye(k + 1))))
    if res > 1e-8:
        raise PrecisionError(f"arc orthogonality residual {res:.2e}")
    return PartialArcOPUC(k, theta, H, m0, res)


def cue_weight(phi):
    return np.ones_like(np.asarray(phi, dtype=float))


def partial_arc_cdf(rho: Callable, k: int, theta) -> np.ndarray:
    """P(A_{k+1} <= theta) = ||P_k(.|theta)||^2 / ||P_k(.|2pi)||^2."""
    full = partial_arc_opuc(rho, k, 2 * math.pi).log_norm2()
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    out = np.array([0.0 if v <= 0 else 1.0 if v >= 2 * math.pi else
                    math.exp(min(0.0, partial_arc_opuc(rho, k, float(v)).log_norm2() - full)) for v in th])
    return out if np.ndim(theta) else float(out[0])


def partial_arc_circle_law(rho: Callable, k: int, n: int = 401, tol: float = 1e-5) -> TabulatedLaw:
    if k > 30:
        raise ValueError("k <= 30")
    full = partial_arc_opuc(rho, k, 2 * math.pi).log_norm2()
    g = np.linspace(0.0, 2 * math.pi, n)
    pdf, cdf = [0.0], [0.0]
    for v in g[1:]:
        op = partial_arc_opuc(rho, k, float(v))
        cdf.append(math.exp(min(0.0, op.log_norm2() - full)))
        pdf.append(abs(op.monic_at(np.exp(1j * v))) ** 2 * float(rho(np.array([v]))[0]) / (2 * math.pi) / math.exp(full))
    pdf, cdf = np.array(pdf), np.array(cdf)
    if k == 0:
        pdf[0] = pdf[1]
    else:
        pdf[0] = 0.0
    mass = float(np.sum(0.5 * np.diff(g) * (pdf[1:] + pdf[:-1])))
    if abs(mass - 1.0) > tol:
        raise CoverageError(f"arc law k={k}: normalization defect {abs(mass - 1):.2e}", total=mass)
    return TabulatedLaw(g, cdf, pdf, name=f"A_{k + 1}")


def circle_max_cdf(N: int, theta: float, rho: Callable = cue_weight) -> float:
    return float(np.prod([partial_arc_cdf(rho, k, theta) for k in range(N)]))


# ---------------------------------------------------------------- Ginibre

def ginibre_modulus_cdf(N: int, r: float) -> float:
    """prod_{k=1..N} P(Gamma(k) <= r^2)."""
    if N < 1 or r < 0:
        raise ValueError("need N >= 1 and r >= 0")
    return float(np.prod(gammainc(np.arange(1, N + 1), r * r)))


def gue2_brute_force(s: float) -> float:
    """(1/Z_2) int int_{(-inf,s]^2} (x-y)^2 exp(-(x^2+y^2)/2) dx dy by 2-d adaptive quadrature."""

    f = lambda y, x: (x - y) ** 2 * math.exp(-0.5 * (x * x + y * y)) / (2 * math.pi)
    lo = -40.0
    val = dblquad(f, lo, s, lo, s, epsabs=1e-13, epsrel=1e-12)[0]
    return val / 2.0
