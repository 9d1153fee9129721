"""Spectral flow of the Airy Hankel operator H(Ai_s) and the laws built from it.

The flow tracks the leading eigenpairs of H(Ai_s)^2 = K_{Ai_s} (or of the KPZ
kernel) along an s-grid.  Densities are squared overlaps <Ai_s, Psi_k>^2, which
by the fixed-interval Fuchs relation equal -d lambda_k / ds.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import airy, eval_jacobi, expit, roots_jacobi

from . import painleve
from .fredholm import KernelOperator, QuadGrid, airy_kernel, gauss_legendre
from .specfun import bessel_j
from .laws import CoverageError, TabulatedLaw, cumulative_from_left, cumulative_from_right, law_from_density

NOISE = 1e-12  # eigenvalues below this carry no usable eigenvector


class TrackingError(RuntimeError):
    pass


class ConditioningError(RuntimeError):
    pass


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class KpzParams:
    t: float

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError("KPZ time must be positive")

    @property
    def gamma(self) -> float:
        return (self.t / 2.0) ** (1.0 / 3.0)

    def fermi(self, x):
        """P(R <= gamma x) for the logistic R."""
        return expit(self.gamma * np.asarray(x, dtype=float))

    def f(self, x):
        return np.sqrt(self.fermi(x))


# ---------------------------------------------------------------- grids

def airy_cutoff(s: float) -> float:
    """Half-line truncation for Ai(x + y + s); quantized so neighbouring s share grids."""
    return float(max(20.0, 2.0 * math.ceil((14.0 - s) / 2.0)))


@lru_cache(maxsize=64)
def _halfline(L: float) -> QuadGrid:
    return gauss_legendre(0.0, L, int(math.ceil(L / 2.0)), 16)


def _graded(a: float, b: float, c: float) -> QuadGrid:
    """Width-2 panels on [a, b], width-5 panels on [b, c]."""
    x, w = np.polynomial.legendre.leggauss(16)
    edges = np.concatenate([np.linspace(a, b, int(math.ceil((b - a) / 2.0)) + 1),
                            np.linspace(b, c, max(1, int(math.ceil((c - b) / 5.0))) + 1)[1:]])
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        h = 0.5 * (hi - lo)
        nodes.append(lo + h * (x + 1))
        weights.append(h * w)
    return QuadGrid(np.concatenate(nodes), np.concatenate(weights), a, c)


def hankel_matrix(s: float, grid: QuadGrid) -> np.ndarray:
    x, sw = grid.nodes, np.sqrt(grid.weights)
    i, j = np.triu_indices(len(x))
    A = np.empty((len(x), len(x)))
    A[i, j] = airy(x[i] + x[j] + s)[0]  # only the upper triangle is evaluated
    A[j, i] = A[i, j]
    return sw[:, None] * A * sw[None, :]


# ---------------------------------------------------------------- KPZ kernel

@lru_cache(maxsize=32)
def _fermi_offsets(gamma: float, width: float = 40.0):
    """Symmetric composite rule on [-W, W], W = width/gamma, split at the Fermi step."""
    W = width / gamma
    panel = min(1.0, 2.0 / gamma)
    n = int(math.ceil(W / panel))
    t, tw = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(0.0, W, n + 1)
    h = 0.5 * np.diff(edges)
    p = (edges[:-1, None] + h[:, None] * (t[None, :] + 1)).ravel()
    q = (h[:, None] * tw[None, :]).ravel()
    return np.concatenate([-p[::-1], p]), np.concatenate([q[::-1], q])


def kpz_kernel_values(x, y, s: float, params: KpzParams) -> np.ndarray:
    """K_KPZ(s,t)(x, y) = int Ai(x+v) Ai(y+v) F(gamma (v - s)) dv for grids x (rows), y (cols).

    Written as K_Ai(x+s, y+s) plus the smooth correction from F - 1_{v>s}.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    base = airy_kernel(x[:, None] + s, y[None, :] + s)
    w, ww = _fermi_offsets(params.gamma)
    G = params.fermi(w) - (w > 0)
    Ax = airy(x[:, None] + s + w[None, :])[0]
    Ay = Ax if y is x else airy(y[:, None] + s + w[None, :])[0]
    return base + (Ax * (ww * G)) @ Ay.T


def kpz_kernel_s_derivative(x, y, s: float, params: KpzParams) -> np.ndarray:
    """d/ds K_KPZ(s,t)(x, y) = -gamma int Ai(x+v) Ai(y+v) F'(gamma (v - s)) dv."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    w, ww = _fermi_offsets(params.gamma)
    g = params.gamma
    Fp = expit(g * w) * expit(-g * w)
    Ax = airy(x[:, None] + s + w[None, :])[0]
    Ay = airy(y[:, None] + s + w[None, :])[0]
    return -g * (Ax * (ww * Fp)) @ Ay.T


def logistic_gauss_rule(n: int = 64):
    """Gauss rule for the logistic law; Jacobi matrix b_k = k^4 pi^2 / (4k^2 - 1)."""
    k = np.arange(1, n)
    off = np.sqrt(k**4 * np.pi**2 / (4.0 * k**2 - 1.0))
    nodes, V = np.linalg.eigh(np.diag(off, 1) + np.diag(off, -1))
    return nodes, V[0] ** 2


def logistic_panel_rule(order: int = 64, width: float = 4.0, span: float = 40.0):
    """Composite rule: order-point Gauss-Legendre panels against the logistic density."""
    t, tw = np.polynomial.legendre.leggauss(order)
    edges = np.arange(-span, span + width / 2, width)
    h = 0.5 * np.diff(edges)
    r = (edges[:-1, None] + h[:, None] * (t[None, :] + 1)).ravel()
    w = (h[:, None] * tw[None, :]).ravel() * expit(r) * expit(-r)
    return r, w


def randomized_airy_kernel(x, y, s: float, params: KpzParams, rule=None) -> np.ndarray:
    """E[K_Ai(x + s + R/gamma, y + s + R/gamma)] with R logistic."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    r, w = logistic_panel_rule() if rule is None else rule
    out = np.zeros((len(x), len(y)))
    for rj, wj in zip(r, w):
        sh = s + rj / params.gamma
        out += wj * airy_kernel(x[:, None] + sh, y[None, :] + sh)
    return out


def kpz_grid(s_min: float, params: KpzParams) -> QuadGrid:
    a = max(20.0, 14.0 - s_min)
    return _graded(0.0, a, a + max(5.0, 34.0 / params.gamma))


def kpz_kernel(s: float, params: KpzParams, grid: Optional[QuadGrid] = None) -> KernelOperator:
    """Nystrom operator of K_KPZ(s,t) on the half-line; the kernel callable evaluates off-grid."""
    g = kpz_grid(s, params) if grid is None else grid
    sw = np.sqrt(g.weights)
    M = sw[:, None] * kpz_kernel_values(g.nodes, g.nodes, s, params) * sw[None, :]
    kern = lambda x, y: kpz_kernel_values(np.ravel(x), np.ravel(y), s, params)
    return KernelOperator(0.5 * (M + M.T), g, True, kernel=kern)


def kpz_symmetrized(s: float, params: KpzParams, lower: Optional[float] = None, upper: float = 20.0):
    """Nystrom matrix of M_f H(Ai_s)^2 M_f on L^2(R): f(u) K_Ai(u+s, v+s) f(v)."""
    lo = -(36.0 / params.gamma) - max(0.0, s) if lower is None else lower
    g = gauss_legendre(lo, upper, int(math.ceil((upper - lo) / 1.0)), 16)
    u, sw = g.nodes, np.sqrt(g.weights)
    fu = params.f(u)
    K = airy_kernel(u[:, None] + s, u[None, :] + s)
    M = (sw * fu)[:, None] * K * (sw * fu)[None, :]
    return g, 0.5 * (M + M.T), sw * fu * airy(u + s)[0]


# ---------------------------------------------------------------- eigenflow

@dataclass
class EigenFlow:
    s_grid: np.ndarray
    k_max: int
    lam: np.ndarray  # (n_s, k_max) eigenvalues of K
    mu: Optional[np.ndarray]  # signed eigenvalues of H (Airy flows)
    psi0: np.ndarray  # Psi_k^{(s)}(0)
    overlap: np.ndarray  # <Ai_s, Psi_k> or <f_t Ai_s, Psi_k>, sign aligned
    flipped: np.ndarray  # sign flips applied during tracking
    kpz: Optional[KpzParams] = None
    _varying: Optional[np.ndarray] = field(default=None, repr=False)

    def density(self, k: int) -> np.ndarray:
        return self.overlap[:, k - 1] ** 2

    def eigenvalue(self, k: int) -> np.ndarray:
        return self.lam[:, k - 1]

    def to_csv(self, k: int) -> str:
        rows = ["s,lambda,psi0,overlap"]
        for s, l, p, o in zip(self.s_grid, self.lam[:, k - 1], self.psi0[:, k - 1], self.overlap[:, k - 1]):
            rows.append(f"{s:.17g},{l:.17g},{p:.17g},{o:.17g}")
        return "\n".join(rows) + "\n"


def _airy_slice(s: float, k: int):
    g = _halfline(airy_cutoff(s))
    mu, V = np.linalg.eigh(hankel_matrix(s, g))
    order = np.argsort(-np.abs(mu))[:k]
    mu, V = mu[order], V[:, order]
    a = np.sqrt(g.weights) * airy(g.nodes + s)[0]
    ov = a @ V
    return {"s": s, "grid": g, "mu": mu, "lam": mu * mu, "V": V, "overlap": ov,
            "psi0": np.divide(ov, mu, out=np.zeros_like(ov), where=np.abs(mu) > 1e-300)}


class _KpzSlices:
    """K_KPZ(s) = A diag(w F(gamma(v - s))) A^T with A = Ai(x + v) tabulated once for the whole flow."""

    def __init__(self, params: KpzParams, grid: QuadGrid, s_min: float, s_max: float):
        self.params, self.grid = params, grid
        g = params.gamma
        lo, hi = s_min - 36.0 / g, 25.0
        panels = int(math.ceil((hi - lo) / min(1.0, 1.0 / g)))
        v = gauss_legendre(lo, hi, panels, 16) if panels <= 600 else None
        self.v, self.w = (v.nodes, v.weights) if v else (np.zeros(10**4), None)
        self.pts = np.concatenate([[0.0], grid.nodes])
        # near the step limit the v-rule gets long; fall back to the Christoffel-Darboux form
        self.A = airy(self.pts[:, None] + self.v[None, :])[0] if self.w is not None else None
        self.sw = np.sqrt(grid.weights)

    def __call__(self, s: float, k: int):
        if self.A is None:
            K = kpz_kernel_values(self.pts, self.pts, s, self.params)[:, 1:]
        else:
            F = expit(self.params.gamma * (self.v - s))
            K = (self.A * (self.w * F)) @ self.A[1:].T
        M = self.sw[:, None] * K[1:] * self.sw[None, :]
        lam, V = np.linalg.eigh(0.5 * (M + M.T))
        order = np.argsort(lam)[::-1][:k]
        lam, V = lam[order], V[:, order]
        phi0 = ((self.sw * K[0]) @ V) / np.maximum(lam, 1e-300)
        return {"s": s, "grid": self.grid, "mu": None, "lam": lam, "V": V,
                "overlap": np.sqrt(np.maximum(lam, 0.0)) * phi0, "psi0": phi0}


def _transfer(prev, cur):
    """Previous eigenvectors expressed on the current grid (Nystrom interpolation)."""
    if prev["grid"] is cur["grid"]:
        return prev["V"]
    gp, gc = prev["grid"], cur["grid"]
    A = airy(gc.nodes[:, None] + gp.nodes[None, :] + prev["s"])[0] * np.sqrt(gp.weights)[None, :]
    ok = np.abs(prev["mu"]) > 1e-7  # smaller ones are below NOISE and never checked
    V = np.sqrt(gc.weights)[:, None] * (A @ prev["V"][:, ok])
    out = np.zeros((len(gc.nodes), prev["V"].shape[1]))
    # H psi = mu psi, so the interpolant carries the sign of mu
    out[:, ok] = V / np.linalg.norm(V, axis=0) * np.sign(prev["mu"][ok])
    return out


def _align(prev, cur, k_max):
    """Sign-align cur against prev; raise on ambiguous pairing."""
    Vp = _transfer(prev, cur)
    C = Vp.T @ cur["V"]
    lam_p, lam_c = prev["lam"], cur["lam"]
    flips = np.zeros(k_max, dtype=bool)
    for k in range(k_max):
        live = NOISE < lam_c[k] < 1 - NOISE and NOISE < lam_p[k] < 1 - NOISE
        if live:
            row = np.abs(C[:, k])
            if row[k] < 0.5 or np.argmax(row) != k:
                raise TrackingError(f"eigenvalue crossing ambiguity for k={k + 1} on s in "
                                    f"[{prev['s']:.6g}, {cur['s']:.6g}]; refine the s-grid")
        if C[k, k] < 0:
            cur["V"][:, k] *= -1
            cur["overlap"][k] *= -1
            cur["psi0"][k] *= -1
            flips[k] = True
    return flips


def build_eigenflow(s_grid, k_max: int = 40, kpz: Optional[KpzParams] = None, jobs: int = 1,
                    chunk: int = 64) -> EigenFlow:
    """Track the leading k_max eigenpairs along s_grid (increasing)."""
    s_grid = np.asarray(s_grid, dtype=float)
    if np.any(np.diff(s_grid) <= 0):
        raise ValueError("s_grid must be strictly increasing")
    n = len(s_grid)
    if kpz is None:
        work = lambda s: _airy_slice(float(s), k_max)
    else:
        slicer = _KpzSlices(kpz, kpz_grid(float(s_grid[0]), kpz), float(s_grid[0]), float(s_grid[-1]))
        work = lambda s: slicer(float(s), k_max)
    lam = np.zeros((n, k_max))
    mu = np.zeros((n, k_max)) if kpz is None else None
    psi0 = np.zeros((n, k_max))
    ov = np.zeros((n, k_max))
    flipped = np.zeros((n, k_max), dtype=bool)
    prev = None
    pool = ThreadPoolExecutor(jobs) if jobs > 1 else None
    try:
        for start in range(0, n, chunk):
            block = s_grid[start:start + chunk]
            slices = list(pool.map(work, block)) if pool else [work(s) for s in block]
            for i, cur in enumerate(slices):
                j = start + i
                if prev is not None:
                    flipped[j] = _align(prev, cur, k_max)
                lam[j], psi0[j], ov[j] = cur["lam"], cur["psi0"], cur["overlap"]
                if mu is not None:
                    mu[j] = cur["mu"]
                prev = cur
    finally:
        if pool:
            pool.shutdown()
    return EigenFlow(s_grid, k_max, lam, mu, psi0, ov, flipped, kpz)


def default_s_grid(lo: float = -10.0, hi: float = 8.0, step: float = 0.02) -> np.ndarray:
    return np.linspace(lo, hi, int(round((hi - lo) / step)) + 1)


def extended_s_grid(k_max: int, hi: float = 8.0) -> np.ndarray:
    """Step 0.02 on [-10, hi]; step 0.05 further left, far enough that lambda_{k_max} ~ 1."""
    lo = -10.0 - max(0.0, (1.5 * math.pi * k_max) ** (2.0 / 3.0) + 6.0 - 10.0)
    lo = 0.5 * math.floor(2 * lo)
    left = np.arange(lo, -10.0, 0.05)
    return np.concatenate([left, default_s_grid(-10.0, hi)])


# ---------------------------------------------------------------- laws from the flow

def _check_mass(density, grid, name, tol=1e-4):
    total = float(cumulative_from_right(grid, density)[0])
    if total < 1.0 - tol:
        raise CoverageError(f"{name}: flow carries mass {total:.6g} < 1 - {tol:g}; extend the s-grid", total=total)
    return total


def law_zk_prime(flow: EigenFlow, k: int, tol: float = 1e-4) -> TabulatedLaw:
    """Law with density <Ai_s, Psi_k^{(s)}>^2 (or the KPZ overlap when the flow carries one)."""
    if not 1 <= k <= flow.k_max:
        raise ValueError(f"k must be in 1..{flow.k_max}")
    d = flow.density(k)
    _check_mass(d, flow.s_grid, f"Z'_{k}", tol)
    return law_from_density(flow.s_grid, d, name=f"Z'_{k}", end_tol=tol)


def partial_cdf_prime(flow: EigenFlow, k: int) -> np.ndarray:
    """1 - int_s^{s_max} density: exact for s inside the grid whatever the left coverage."""
    return 1.0 - cumulative_from_right(flow.s_grid, flow.density(k))


def kpz_max_laws(params: KpzParams, s_grid, k_max: int = 40, jobs: int = 1, strict: bool = False):
    """Tracked KPZ flow and the laws of Z_k^{KPZ(t)}; strict=True enforces full mass per law."""
    flow = build_eigenflow(s_grid, k_max, kpz=params, jobs=jobs)
    laws = []
    for k in range(1, k_max + 1):
        d = flow.density(k)
        if strict:
            _check_mass(d, flow.s_grid, f"Z_{k}^KPZ")
        laws.append(law_from_density(flow.s_grid, d, name=f"Z_{k}^KPZ", end_tol=1e-4))
    return flow, laws


def kpz_s_grid(params: KpzParams, lo: Optional[float] = -2.5, step: float = 0.05) -> np.ndarray:
    """Right end where lambda_1 < 1e-8; lo=None reaches left until 1 - lambda_1 ~ exp(-gamma |s|) < 1e-5."""
    hi = 6.0 + 16.0 / params.gamma
    if lo is None:
        lo = -math.ceil(12.0 / params.gamma + 6.0)
    return np.linspace(lo, hi, int(round((hi - lo) / step)) + 1)


# varying-interval route

def varying_boundary(s: float, k_max: int):
    """Eigenpairs of K_Ai on L^2([s, s + L)) and the boundary values g_k(s)^2."""
    L = airy_cutoff(s)
    g = gauss_legendre(s, s + L, int(math.ceil(L / 2.0)), 16)
    x, sw = g.nodes, np.sqrt(g.weights)
    M = sw[:, None] * airy_kernel(x[:, None], x[None, :]) * sw[None, :]
    lam, V = np.linalg.eigh(0.5 * (M + M.T))
    order = np.argsort(lam)[::-1][:k_max]
    lam, V = lam[order], V[:, order]
    row = sw * airy_kernel(np.full_like(x, s), x)
    g0 = (row @ V) / np.maximum(lam, 1e-300)
    return lam, g0


def _varying_table(flow: EigenFlow) -> np.ndarray:
    if flow._varying is None:
        flow._varying = np.array([varying_boundary(float(s), flow.k_max)[1] ** 2 for s in flow.s_grid])
    return flow._varying


def phi_k(flow: EigenFlow, k: int) -> np.ndarray:
    """Phi_k(s) = int_{-inf}^s Psi_k^{(t)}(0)^2 dt, with the flow's left end as -inf."""
    return cumulative_from_left(flow.s_grid, _varying_table(flow)[:, k - 1])


def law_zk_ter(flow: EigenFlow, k: int, tol: float = 1e-4) -> TabulatedLaw:
    """Survival exp(-Phi_k(s)) from the varying-interval boundary values."""
    if flow.lam[0, k - 1] < 1.0 - tol:
        raise CoverageError(f"Z''_{k}: lambda_{k} = {flow.lam[0, k - 1]:.6g} at the left end, not ~1",
                            total=float(flow.lam[0, k - 1]))
    surv = np.exp(-phi_k(flow, k))
    dens = _varying_table(flow)[:, k - 1] * surv
    return TabulatedLaw(flow.s_grid, 1.0 - surv, dens, name=f"Z''_{k}", end_tol=tol)


def exponential_pushforward_error(flow: EigenFlow, k: int, n: int = 10_000) -> float:
    """max |cdf(Phi_k^{-1}(E_p)) - p| over n quantile levels p of Exp(1), E_p = -log(1 - p)."""
    law = law_zk_ter(flow, k)
    Phi = CubicSpline(flow.s_grid, _varying_table(flow)[:, k - 1]).antiderivative()
    Phi0 = Phi(flow.s_grid[0])
    p = (np.arange(n) + 0.5) / n
    e = -np.log1p(-p)
    e = e[e <= Phi(flow.s_grid[-1]) - Phi0]
    lo = np.full(e.shape, flow.s_grid[0])
    hi = np.full(e.shape, flow.s_grid[-1])
    for _ in range(60):  # bisection on the monotone antiderivative
        mid = 0.5 * (lo + hi)
        below = Phi(mid) - Phi0 < e
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    z = 0.5 * (lo + hi)
    return float(np.max(np.abs(law.cdf(z) - (-np.expm1(-e)))))


# Hankel-power route

def hankel_power_norms(ell_max: int, s_grid) -> np.ndarray:
    """||H(Ai_u)^ell Ai_u||^2 on the half-line for u in s_grid, columns ell = 0..ell_max."""
    if ell_max < 0 or ell_max > 12:
        raise ValueError("ell must be in 0..12")
    out = np.zeros((len(s_grid), ell_max + 1))
    for i, u in enumerate(np.asarray(s_grid, dtype=float)):
        g = _halfline(airy_cutoff(u))
        v = np.sqrt(g.weights) * airy(g.nodes + u)[0]
        M = hankel_matrix(u, g) if ell_max else None
        for ell in range(ell_max + 1):
            out[i, ell] = v @ v
            if ell < ell_max:
                v = M @ v
    return out


def law_zk_norm(ell: int, s_grid=None, norms: Optional[np.ndarray] = None) -> TabulatedLaw:
    """cdf(s) = exp(-int_s^inf ||H(Ai_u)^ell Ai_u||^2 du); the left mass is kept as data."""
    s_grid = default_s_grid() if s_grid is None else np.asarray(s_grid, dtype=float)
    dens = (hankel_power_norms(ell, s_grid) if norms is None else norms)[:, ell]
    cdf = np.exp(-cumulative_from_right(s_grid, dens))
    return TabulatedLaw(s_grid, cdf, dens * cdf, name=f"Z_{ell}(Ai)")


def norm_laws(ell_max: int = 12, s_grid=None) -> list[TabulatedLaw]:
    s_grid = default_s_grid() if s_grid is None else np.asarray(s_grid, dtype=float)
    norms = hankel_power_norms(ell_max, s_grid)
    return [law_zk_norm(ell, s_grid, norms) for ell in range(ell_max + 1)]


def airy_diagonal(u):
    """||Ai_u||^2 = int_u^inf Ai^2 = Ai'(u)^2 - u Ai(u)^2."""
    ai, aip = airy(np.asarray(u, dtype=float))[:2]
    return aip * aip - u * ai * ai


def divergence_exponent(L_values=(10.0, 14.0, 20.0, 28.0, 40.0), right: float = 8.0) -> float:
    """Fitted p in int_{-L}^{right} ||Ai_s||^2 ds ~ L^p."""
    vals = []
    for L in L_values:
        g = gauss_legendre(-L, right, int(math.ceil((L + right) / 2.0)), 16)
        vals.append(g.integrate(airy_diagonal(g.nodes)))
    return float(np.polyfit(np.log(L_values), np.log(vals), 1)[0])


# ---------------------------------------------------------------- TW1 and Q

def hankel_spectrum(s: float) -> np.ndarray:
    g = _halfline(airy_cutoff(s))
    mu = np.linalg.eigvalsh(hankel_matrix(s, g))
    return mu[np.argsort(-np.abs(mu))]


def tw1_cdf(s: float, route: str = "ferrari_spohn") -> float:
    if route == "ferrari_spohn":
        mu = hankel_spectrum(float(s))
        return float(np.prod(1.0 - mu))
    if route == "sqrt_formula":
        return math.sqrt(painleve.tw2_cdf_classical(s) * math.exp(-integral_q(s)))
    raise ValueError(f"unknown route {route!r}")


def integral_q(s: float, window: painleve.Window = painleve.DEFAULT) -> float:
    """int_s^inf q with the Airy tail beyond the solver window."""
    hm = painleve.hastings_mcleod_solution(window)
    total = 0.0
    if s < window.L_plus:
        g = gauss_legendre(s, window.L_plus, int(math.ceil((window.L_plus - s) / 1.0)), 24)
        total += g.integrate(hm(g.nodes))
    start = max(s, window.L_plus)
    g = gauss_legendre(start, start + 16.0, 8, 24)
    return total + g.integrate(airy(g.nodes)[0])


def law_q(s_grid=None) -> TabulatedLaw:
    """P(Q <= s) = exp(-int_s^inf q)."""
    s_grid = default_s_grid() if s_grid is None else np.asarray(s_grid, dtype=float)
    hm = painleve.hastings_mcleod_solution()
    lp = painleve.DEFAULT.L_plus
    q = np.where(s_grid <= lp, hm(np.minimum(s_grid, lp)), airy(s_grid)[0])
    tail = integral_q(float(s_grid[-1]))
    cdf = np.exp(-cumulative_from_right(s_grid, q, tail))
    return TabulatedLaw(s_grid, cdf, q * cdf, name="Q")


@dataclass
class QkFactor:
    """1 - l_k(s) for the k-th eigenvalue l_k of L_s = 2H(I+H)^{-1}.

    A genuine cdf only when the matching eigenvalue of H is positive.
    """

    k: int
    grid: np.ndarray
    values: np.ndarray
    density: np.ndarray
    positive: bool

    def as_law(self) -> TabulatedLaw:
        if not self.positive:
            raise ValueError(f"factor {self.k} comes from a negative eigenvalue of H and is not a cdf")
        return TabulatedLaw(self.grid, self.values, self.density, name=f"Q_{self.k}", end_tol=1e-4)

    def __call__(self, s):
        return np.interp(s, self.grid, self.values)


def law_q_and_qk(s_grid=None, k_max: int = 40, cond_tol: float = 1e-8, flow: Optional[EigenFlow] = None):
    """Law of Q and the factors 1 - l_k built from resolvent overlaps along the H-flow.

    -d l_k/ds = <(I+H)^{-1} Ai_s, psi_k>^2 / mu_k; factors with mu_k < 0 exceed 1.
    """
    s_grid = default_s_grid(-6.0, 8.0) if s_grid is None else np.asarray(s_grid, dtype=float)
    flow = build_eigenflow(s_grid, k_max) if flow is None else flow
    mu = flow.mu
    worst = float(np.min(1.0 + mu))
    if worst < cond_tol:
        i, k = np.unravel_index(np.argmin(1.0 + mu), mu.shape)
        raise ConditioningError(f"1 + mu_{k + 1} = {worst:.3g} at s = {flow.s_grid[i]:.4g}")
    res = flow.overlap / (1.0 + mu)  # <(I+H)^{-1} Ai_s, psi_k>
    safe = np.abs(mu) > 1e-14
    dens = np.where(safe, res**2 / np.where(safe, mu, 1.0), 0.0)
    factors = []
    for k in range(k_max):
        vals = 1.0 - cumulative_from_right(flow.s_grid, dens[:, k])
        positive = bool(np.median(mu[:, k][np.abs(mu[:, k]) > NOISE]) > 0) if np.any(np.abs(mu[:, k]) > NOISE) else True
        factors.append(QkFactor(k + 1, flow.s_grid, vals, dens[:, k], positive))
    return law_q(flow.s_grid), factors


# ---------------------------------------------------------------- Fuchs checks

def _eig_at(matrix_fn, s, k):
    lam, V = np.linalg.eigh(matrix_fn(s))
    order = np.argsort(lam)[::-1]
    return lam[order][k - 1], V[:, order][:, k - 1]


def _interval_grid(a, L):
    return gauss_legendre(a, a + L, int(math.ceil(L / 2.0)), 16)


@dataclass
class FuchsResult:
    family: str
    variant: str
    k: int
    s: float
    finite_difference: float
    formula: float

    @property
    def relative_residual(self) -> float:
        return abs(self.finite_difference - self.formula) / max(abs(self.formula), 1e-300)


def fuchs_check(family: str, variant: str, k: int, s: float, h: float = 1e-3,
                params: Optional[KpzParams] = None) -> FuchsResult:
    """Compare a central difference of lambda_k with the fixed / varying / mixed Fuchs formula.

    airy : fixed   K_{Ai_s} on R_+               l' = -<Ai_s, g>^2
           varying K_Ai on [s, inf)              l' = -l g(s)^2
           mixed   K_Ai(x - s/2, y - s/2) on [s, inf)   l' = -l g(s)^2 + <K' g, g>
    kpz  : fixed   K_KPZ(s) on R_+              l' = <K' g, g>
           varying K_KPZ(0) on [s, inf)          l' = -l g(s)^2
           mixed   K_KPZ(s) on [s, inf)          l' = -l g(s)^2 + <K' g, g>
    """
    if family not in ("airy", "kpz") or variant not in ("fixed", "varying", "mixed"):
        raise ValueError("family in {airy, kpz}, variant in {fixed, varying, mixed}")
    if family == "kpz" and params is None:
        params = KpzParams(1.0)
    L = airy_cutoff(s) + (0.0 if family == "airy" else 34.0 / params.gamma)

    def kernel(s_par):
        if family == "airy":
            return lambda x, y: airy_kernel(x + (-0.5 * s_par if variant == "mixed" else s_par if variant == "fixed" else 0.0),
                                            y + (-0.5 * s_par if variant == "mixed" else s_par if variant == "fixed" else 0.0))
        shift = 0.0 if variant == "varying" else s_par
        return lambda x, y: kpz_kernel_values(x, y, shift, params)

    def dkernel(s_par, x, y):
        if family == "airy":
            shift = -0.5 * s_par if variant == "mixed" else s_par
            a, b = airy(x + shift)[0], airy(y + shift)[0]
            return (0.5 if variant == "mixed" else -1.0) * np.outer(a, b)
        return kpz_kernel_s_derivative(x, y, s_par, params)

    def grid_for(s_par):
        lo = 0.0 if variant == "fixed" else s_par
        return _interval_grid(lo, L)

    def matrix(s_par):
        g = grid_for(s_par)
        x, sw = g.nodes, np.sqrt(g.weights)
        K = kernel(s_par)(x[:, None], x[None, :]) if family == "airy" else kernel(s_par)(x, x)
        M = sw[:, None] * K * sw[None, :]
        return 0.5 * (M + M.T)

    lp, _ = _eig_at(matrix, s + h, k)
    lm, _ = _eig_at(matrix, s - h, k)
    fd = (lp - lm) / (2 * h)
    lam, v = _eig_at(matrix, s, k)
    g = grid_for(s)
    x, sw = g.nodes, np.sqrt(g.weights)
    formula = 0.0
    if variant in ("varying", "mixed"):
        Kfun = kernel(s)
        row = Kfun(np.array([s]), x) if family == "kpz" else Kfun(np.full_like(x, s), x)
        gs = float(np.ravel(row) * sw @ v) / lam
        formula -= lam * gs * gs
    if variant in ("fixed", "mixed"):
        Kd = sw[:, None] * dkernel(s, x, x) * sw[None, :]
        formula += float(v @ Kd @ v)
    return FuchsResult(family, variant, k, s, float(fd), float(formula))


# ---------------------------------------------------------------- commuting operator

@dataclass
class CommutingSpectrum:
    s: float
    eigenvalues: np.ndarray  # descending
    coefficients: np.ndarray  # Laguerre-function coefficients, columns
    beta: float

    def __call__(self, k: int, x):
        return _laguerre_functions(np.asarray(x, dtype=float), self.coefficients.shape[0], self.beta) @ self.coefficients[:, k - 1]


def _laguerre_functions(x, n, beta, derivative=False):
    """phi_j(x) = sqrt(beta) exp(-beta x/2) L_j(beta x), j < n (and derivatives).

    The exponential is carried through the recurrence so large x never overflows.
    """
    y = beta * np.atleast_1d(x)
    e = np.exp(-y / 2)
    Lm, L = np.zeros_like(y), e
    dLm, dL = np.zeros_like(y), np.zeros_like(y)
    P, dP = [L], [dL]
    for j in range(1, n):
        Ln = ((2 * j - 1 - y) * L - (j - 1) * Lm) / j
        dLn = dL - L  # L_j' = L_{j-1}' - L_{j-1}
        Lm, L = L, Ln
        dLm, dL = dL, dLn
        P.append(L)
        dP.append(dL)
    P = np.sqrt(beta) * np.array(P).T
    if not derivative:
        return P
    dP = np.sqrt(beta) * np.array(dP).T
    return P, beta * (dP - 0.5 * P)


def _commuting_galerkin(s, size, beta):
    """Matrix of d/dx x d/dx - x(x + s) on span{phi_j}, plus the basis on the quadrature grid."""
    g = gauss_legendre(0.0, (4.0 * size + 120.0) / beta, size + 40, 16)
    F, dF = _laguerre_functions(g.nodes, size, beta, derivative=True)
    w = g.weights
    A = -(dF * (w * g.nodes)[:, None]).T @ dF - (F * (w * g.nodes * (g.nodes + s))[:, None]).T @ F
    return 0.5 * (A + A.T)


def commuting_operator_spectrum(s: float, k_max: int = 5, size: int = 60, beta: float = 4.0) -> CommutingSpectrum:
    """Galerkin matrix of d/dx x d/dx - x(x + s) in the scaled Laguerre-function basis."""
    A = _commuting_galerkin(s, size, beta)
    vals, vecs = np.linalg.eigh(A)
    order = np.argsort(vals)[::-1][:k_max]
    return CommutingSpectrum(s, vals[order], vecs[:, order], beta)


def commuting_overlaps(s: float, k_max: int = 5, size: int = 60, beta: float = 4.0):
    """|<Psi_k^{flow}, Psi_k^{commute}>| for k <= k_max, and the commutation residual."""
    spec = commuting_operator_spectrum(s, k_max, size, beta)
    g = _halfline(airy_cutoff(s))
    mu, V = np.linalg.eigh(hankel_matrix(s, g))
    order = np.argsort(-np.abs(mu))[:k_max]
    V = V[:, order]
    sw = np.sqrt(g.weights)
    overlaps = []
    for k in range(1, k_max + 1):
        c = spec(k, g.nodes) * sw
        overlaps.append(abs(float(c @ V[:, k - 1])) / float(np.linalg.norm(c)))
    return np.array(overlaps), commutation_residual(s, k_max, size, beta)


def commutation_residual(s: float, k_max: int = 5, size: int = 60, beta: float = 4.0) -> float:
    """max ||[L, K] v|| / ||v|| over the leading K-eigenvectors, in the Laguerre basis."""
    A = _commuting_galerkin(s, size, beta)
    g = gauss_legendre(0.0, airy_cutoff(s), int(airy_cutoff(s)), 16)
    Fg = _laguerre_functions(g.nodes, size, beta) * g.weights[:, None]
    K = Fg.T @ airy_kernel(g.nodes[:, None] + s, g.nodes[None, :] + s) @ Fg
    K = 0.5 * (K + K.T)
    lam, V = np.linalg.eigh(K)
    V = V[:, np.argsort(lam)[::-1][:k_max]]
    R = A @ K - K @ A
    return float(max(np.linalg.norm(R @ V[:, k]) / np.linalg.norm(A @ V[:, k]) for k in range(k_max)))


# ---------------------------------------------------------------- prolate (Annex-type) operators

def zernike_basis(N: float, k: int, x):
    """T_k^{(N)}(x) = sqrt(2(2k+N+1)) x^{N+1/2} P_k^{(N,0)}(1 - 2x^2) and its derivative."""
    x = np.asarray(x, dtype=float)
    u = 1 - 2 * x * x
    tau = math.sqrt(2 * (2 * k + N + 1))
    P = eval_jacobi(k, N, 0, u)
    dP = 0.5 * (k + N + 1) * eval_jacobi(k - 1, N + 1, 1, u) if k > 0 else 0.0 * u
    T = tau * x ** (N + 0.5) * P
    dT = tau * x ** (N - 0.5) * ((N + 0.5) * P - 4 * x * x * dP)
    return T, dT


def pho_matrix(N: float, c: float, size: int) -> np.ndarray:
    """<T_j, PHO_{N,c} T_k> for j, k < size by Gauss-Jacobi quadrature in u = 1 - 2x^2.

    Derivative term integrated by parts: -int (1 - x^2) T_j' T_k'.
    """
    n = size + 4
    uN, wN = roots_jacobi(n, N, 0)  # weight (1-u)^N
    uM, wM = roots_jacobi(n, N - 1, 0)  # weight (1-u)^{N-1}
    xN, xM = np.sqrt((1 - uN) / 2), np.sqrt((1 - uM) / 2)
    # x^{2N+1} dx = ((1-u)/2)^N du/4 and x^{2N-1} dx = ((1-u)/2)^{N-1} du/4
    cN = 2.0 ** (-N) / 4
    cM = 2.0 ** (-(N - 1)) / 4
    TN = np.array([zernike_basis(N, k, xN)[0] for k in range(size)]) / xN ** (N + 0.5)
    TM = np.array([zernike_basis(N, k, xM)[0] for k in range(size)]) / xM ** (N + 0.5)
    dTM = np.array([zernike_basis(N, k, xM)[1] for k in range(size)]) / xM ** (N - 0.5)
    gram_x2 = (TN * (wN * cN * xN**2)) @ TN.T
    gram = (TN * (wN * cN)) @ TN.T
    kinetic = -(dTM * (wM * cM * (1 - xM**2))) @ dTM.T
    centrifugal = -(N * N - 0.25) * (TM * (wM * cM)) @ TM.T
    M = kinetic + centrifugal + c * c * (gram - gram_x2)
    return 0.5 * (M + M.T)


def kappa(N: float, k):
    k = np.asarray(k, dtype=float)
    return (N + 2 * k + 0.5) * (N + 2 * k + 1.5)


def tridiagonality_residual(M: np.ndarray) -> float:
    off = np.triu(np.abs(M), 2)
    return float(off.max() / max(1.0, np.abs(M).max()))


@dataclass
class ProlateResult:
    N: float
    c: float
    matrix: np.ndarray
    eigenvalues: np.ndarray  # descending (least negative first)
    tridiagonality: float


def prolate_flow(N: float, c: float, k_max: int = 10, size: Optional[int] = None) -> ProlateResult:
    if N < 1 or c < 0:
        raise ValueError("need N >= 1 and c >= 0")
    size = max(2 * k_max + 20, int(c) + 40) if size is None else size
    M = pho_matrix(N, c, size)
    vals = np.sort(np.linalg.eigvalsh(M))[::-1][:k_max]
    return ProlateResult(N, c, M, vals, tridiagonality_residual(M))


def bessel_kernel(N: float, c: float, x, y):
    """sqrt(c x y) J_N(c x y)."""
    z = c * np.asarray(x, dtype=float) * np.asarray(y, dtype=float)
    return np.sqrt(z) * bessel_j(N, z)


def bessel_airy_limit_error(N: int, s: float, X, Y) -> float:
    """max |N^{-1/6}/sqrt 2 * J_{2N, 2N - s N^{1/3}}(x, y) - Ai(X + Y + s)|, x = 1 - X N^{-2/3}/2."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    x = 1 - 0.5 * X * N ** (-2.0 / 3.0)
    y = 1 - 0.5 * Y * N ** (-2.0 / 3.0)
    c = 2 * N - s * N ** (1.0 / 3.0)
    lhs = N ** (-1.0 / 6.0) / math.sqrt(2.0) * bessel_kernel(2 * N, c, x, y)
    return float(np.max(np.abs(lhs - airy(X + Y + s)[0])))
