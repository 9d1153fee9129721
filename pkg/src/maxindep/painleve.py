"""Painleve boundary-value solvers and the two Painleve routes to the TW2 cdf.

Conventions
-----------
sigma(t; a) solves  (y'')^2 + 4 y' ((y')^2 - t y' + y) - a^2 = 0  with
y ~ t^2/4 + (4a^2 - 1)/(8t) at -inf and y ~ -a sqrt(t) at +inf (a > 0).
For a = 0 this is sigma_0 = int_t^inf q^2 (Hastings-McLeod q), and
sigma_1 - sigma_0 = q'/q.  U_n(t; a) is the sigma-PIV function in the
physicists' variable (weight exp(-t^2)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import hermite as Hm
from scipy.special import erfcx

from ._cheb import ChebGrid
from .specfun import airy_ai


class SolverError(RuntimeError):
    def __init__(self, msg, residual=None):
        super().__init__(msg if residual is None else f"{msg} (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class Window:
    L_minus: float = -10.0
    L_plus: float = 8.0
    degree: int = 256
    tol: float = 1e-13
    max_iter: int = 80


DEFAULT = Window()


def _left_pii(a: float):
    """Coefficients c_k of t^(2-3k), k = 1..6, of sigma(t; a) at -inf."""
    b = (2 * a - 3) * (2 * a - 1) * (2 * a + 1) * (2 * a + 3)
    a2 = a * a
    return [
        (2 * a - 1) * (2 * a + 1) / 8,
        b / 64,
        b * (4 * a2 - 21) / 128,
        b * (4 * a2 - 29) * (12 * a2 - 83) / 512,
        b * (704 * a2**3 - 19216 * a2**2 + 178436 * a2 - 536219) / 2048,
        b * (23296 * a2**4 - 1050880 * a2**3 + 18466208 * a2**2 - 142989520 * a2 + 393367971) / 16384,
    ]


def _right_pii(a: float):
    """Coefficients d_k of t^((1-3k)/2), k = 0..6, of sigma(t; a) at +inf, a > 0."""
    a2 = a * a
    return [
        -a,
        -a2 / 4,
        a * (4 * a2 + 1) / 32,
        -a2 * (8 * a2 + 7) / 64,
        a * (336 * a2**2 + 664 * a2 + 105) / 2048,
        -a2 * (256 * a2**2 + 932 * a2 + 507) / 1024,
        a * (27456 * a2**3 + 163248 * a2**2 + 198396 * a2 + 25025) / 65536,
    ]


def sigma_pii_left(a: float, t):
    """-inf expansion of sigma(t; a) and its derivative."""
    t = np.asarray(t, dtype=float)
    y = t * t / 4
    yp = t / 2
    for k, c in enumerate(_left_pii(a), start=1):
        y = y + c * t ** (2 - 3 * k)
        yp = yp + c * (2 - 3 * k) * t ** (1 - 3 * k)
    return y, yp


def sigma_pii_right(a: float, t):
    """+inf tail of sigma(t; a): Airy decaying branch for a = 0, series for a > 0."""
    t = np.asarray(t, dtype=float)
    if a == 0:
        ai, aip = airy_ai(t)
        return aip * aip - t * ai * ai, -ai * ai
    y = np.zeros_like(t)
    yp = np.zeros_like(t)
    for k, d in enumerate(_right_pii(a)):
        y = y + d * t ** ((1 - 3 * k) / 2)
        yp = yp + d * (1 - 3 * k) / 2 * t ** ((-1 - 3 * k) / 2)
    return y, yp


def hm_left(t):
    """Hastings-McLeod expansion at -inf."""
    t = np.asarray(t, dtype=float)
    u = t ** -3.0
    return np.sqrt(-t / 2) * (1 + u / 8 - 73 * u**2 / 128 + 10657 * u**3 / 1024 - 13912277 * u**4 / 32768)


def _newton(F, J, v, tol, max_iter, what):
    """Damped Newton with a backtracking sufficient-decrease test."""
    r = F(v)
    for _ in range(max_iter):
        dv = np.linalg.solve(J(v), -r)
        n0 = np.linalg.norm(r)
        lam = 1.0
        while True:
            trial = v + lam * dv
            rt = F(trial)
            if np.linalg.norm(rt) <= (1 - 0.25 * lam) * n0 or lam < 1e-4:
                break
            lam /= 2
        v, r = trial, rt
        if np.max(np.abs(lam * dv)) < tol:
            return v
    raise SolverError(f"{what}: Newton did not converge", float(np.linalg.norm(r)))


@dataclass
class GridFunction:
    """Values on a Chebyshev grid with spectral derivatives and interpolation."""

    grid: ChebGrid = field(repr=False)
    values: np.ndarray = field(repr=False)

    @property
    def t(self):
        return self.grid.t

    def __call__(self, t):
        return self.grid.interp(self.values, t)

    def derivative(self) -> "GridFunction":
        return GridFunction(self.grid, self.grid.D @ self.values)


# ---------------------------------------------------------------- Hastings-McLeod

@dataclass
class HastingsMcLeod(GridFunction):
    residual: float = 0.0


@lru_cache(maxsize=4)
def _hm(window: Window) -> HastingsMcLeod:
    g = ChebGrid(window.L_minus, window.L_plus, window.degree)
    t = g.t
    D2 = g.D @ g.D
    ql = float(hm_left(window.L_minus))
    qr = float(airy_ai(window.L_plus)[0])

    def F(q):
        r = D2 @ q - t * q - 2 * q**3
        r[0] = q[0] - ql
        r[-1] = q[-1] - qr
        return r

    def J(q):
        M = D2 - np.diag(t + 6 * q**2)
        M[0] = 0.0
        M[0, 0] = 1.0
        M[-1] = 0.0
        M[-1, -1] = 1.0
        return M

    w = 1 / (1 + np.exp(-2 * t))
    q0 = (1 - w) * np.sqrt(np.abs(t) / 2 + 0.1) + w * airy_ai(t)[0]
    q = _newton(F, J, q0, window.tol, window.max_iter * 2, "Hastings-McLeod")
    res = D2 @ q - t * q - 2 * q**3
    return HastingsMcLeod(g, q, float(np.max(np.abs(res[1:-1]))))


def hastings_mcleod_solution(window: Window = DEFAULT) -> HastingsMcLeod:
    return _hm(window)


def hastings_mcleod(t_grid, window: Window = DEFAULT):
    """Values of the Hastings-McLeod function on t_grid (inside the window)."""
    t = np.asarray(t_grid, dtype=float)
    if np.any(t < window.L_minus) or np.any(t > window.L_plus):
        raise ValueError("t_grid must lie inside the solver window")
    return _hm(window)(t)


# ---------------------------------------------------------------- sigma-PII

@dataclass
class PainleveSolution(GridFunction):
    a: float = 0.0
    derivative_values: np.ndarray = field(default=None, repr=False)
    second_values: np.ndarray = field(default=None, repr=False)
    boundary: dict = field(default_factory=dict)

    def prime(self, t):
        return self.grid.interp(self.derivative_values, t)

    def second(self, t):
        return self.grid.interp(self.second_values, t)

    def algebraic_residual(self):
        y, yp, ypp = self.values, self.derivative_values, self.second_values
        t = self.t
        return ypp**2 + 4 * yp * (yp**2 - t * yp + y) - self.a**2


@lru_cache(maxsize=16)
def _sigma_pii(a: float, window: Window) -> PainleveSolution:
    # unknown v = y''; y and y' rebuilt by integrating from the right end, where
    # the decaying and the algebraic modes are both pinned (two conditions);
    # the left end pins the one mode that grows toward -inf.
    g = ChebGrid(window.L_minus, window.L_plus, window.degree)
    t, D, Q = g.t, g.D, g.QR
    QQ = Q @ Q
    yl, ypl = (float(v) for v in sigma_pii_left(a, window.L_minus))
    yr, ypr = (float(v) for v in sigma_pii_right(a, window.L_plus))

    def parts(v):
        return yr + ypr * (t - window.L_plus) + QQ @ v, ypr + Q @ v

    def F(v):
        y, yp = parts(v)
        r = D @ v + 6 * yp**2 - 4 * t * yp + 2 * y
        r[0] = y[0] - yl
        return r

    def J(v):
        _, yp = parts(v)
        M = D + (12 * yp - 4 * t)[:, None] * Q + 2 * QQ
        M[0] = QQ[0]
        return M

    w = 1 / (1 + np.exp(-2 * t))
    v = _newton(F, J, 0.5 * (1 - w), window.tol, window.max_iter, f"sigma-PII a={a}")
    y, yp = parts(v)
    sol = PainleveSolution(g, y, a=a, derivative_values=yp, second_values=v)
    sol.boundary = {
        "L_minus": window.L_minus,
        "L_plus": window.L_plus,
        "left_terms": 7,
        "right_terms": "airy" if a == 0 else 7,
        "left_derivative_residual": float(yp[0] - ypl),
    }
    return sol


def solve_sigma_pii(a: float = 0.0, L_minus: float = -10.0, L_plus: float = 8.0, degree: int = 256) -> PainleveSolution:
    if a < 0:
        raise ValueError("a must be nonnegative")
    if L_minus > -8 or L_plus < 6:
        raise ValueError("window must satisfy L_minus <= -8 and L_plus >= 6")
    return _sigma_pii(float(a), Window(float(L_minus), float(L_plus), int(degree)))


# ---------------------------------------------------------------- Q from delta sigma

@dataclass
class QFunction(GridFunction):
    delta_sigma: np.ndarray = field(default=None, repr=False)


@lru_cache(maxsize=4)
def _qfun(window: Window) -> QFunction:
    s0 = _sigma_pii(0.0, window)
    s1 = _sigma_pii(1.0, window)
    ds = s1.values - s0.values
    if np.any(ds >= 0):
        bad = s0.t[ds >= 0]
        raise SolverError(f"delta sigma must be negative on the window; fails at t={bad[:5]}")
    # log Q(x) = log Ai(L+) - int_x^{L+} delta sigma; the tail beyond L+ cancels
    # against Ai'/Ai to all orders of the +inf expansion
    g = s0.grid
    logq = math.log(airy_ai(window.L_plus)[0]) + g.QR @ ds
    return QFunction(g, np.exp(logq), delta_sigma=ds)


def q_function(window: Window = DEFAULT) -> QFunction:
    return _qfun(window)


def q_from_delta_sigma(t_grid, window: Window = DEFAULT):
    return _qfun(window)(np.asarray(t_grid, dtype=float))


# ---------------------------------------------------------------- TW2 cdf routes

def _gl(a, b, n=64):
    x, w = np.polynomial.legendre.leggauss(n)
    h = (b - a) / 2
    return a + h * (x + 1), h * w


def _airy_tail_moment(s: float, start: float) -> float:
    """int_start^inf (x - s) Ai(x)^2 dx."""
    x, w = _gl(start, start + 16.0, 96)
    ai = airy_ai(x)[0]
    return float(np.dot(w, (x - s) * ai * ai))


def _shifted_square_moment(f: GridFunction, s: float, window: Window) -> float:
    """int_s^inf (x - s) f(x)^2 dx with Airy completion beyond the window."""
    if s >= window.L_plus:
        return _airy_tail_moment(s, s)
    if s < window.L_minus:
        raise ValueError(f"s={s} is left of the solver window")
    edges = np.arange(s, window.L_plus, 1.0)
    edges = np.append(edges, window.L_plus)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi - lo < 1e-14:
            continue
        x, w = _gl(lo, hi, 24)
        fx = f(x)
        total += float(np.dot(w, (x - s) * fx * fx))
    return total + _airy_tail_moment(s, window.L_plus)


def tw2_cdf_classical(s: float, window: Window = DEFAULT) -> float:
    """exp(-int (x - s)_+ q(x)^2 dx)."""
    return math.exp(-_shifted_square_moment(_hm(window), float(s), window))


def tw2_cdf_new(s: float, window: Window = DEFAULT) -> float:
    """exp(-int Q(u)^2 (u - s)_+ du) with Q built from sigma(.;1) - sigma(.;0)."""
    return math.exp(-_shifted_square_moment(_qfun(window), float(s), window))


# ---------------------------------------------------------------- Hamiltonian view

@dataclass
class Hamiltonian:
    t: np.ndarray
    p: np.ndarray
    q: np.ndarray
    pxxxiv_residual: np.ndarray
    singular: np.ndarray


def hamiltonian_reconstruction(sigma: PainleveSolution, eps: float = 1e-12) -> Hamiltonian:
    """p = -2 sigma', q = (4 sigma'' + 2a) / (8 sigma') and the P34 residual.

    In this normalization p solves p p'' = p'^2/2 + 2 p^3 + 2 t p^2 - 2 a^2.
    """
    g = sigma.grid
    a = sigma.a
    sp_, spp = sigma.derivative_values, sigma.second_values
    p = -2 * sp_
    dp = g.D @ p
    ddp = g.D @ dp
    singular = np.abs(sp_) < eps
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(singular, np.nan, (4 * spp + 2 * a) / (8 * sp_))
    res = p * ddp - (dp**2 / 2 + 2 * p**3 + 2 * g.t * p**2 - 2 * a * a)
    return Hamiltonian(g.t, p, q, res, singular)


# ---------------------------------------------------------------- sigma-PIV

def hermite_log_derivative(n: int, t):
    """pi_n'(t)/pi_n(t) and its derivative for the monic physicists' Hermite pi_n."""
    c = np.zeros(n + 1)
    c[n] = 1.0
    h = Hm.hermval(t, c)
    h1 = Hm.hermval(t, Hm.hermder(c))
    h2 = Hm.hermval(t, Hm.hermder(c, 2))
    u = h1 / h
    return u, h2 / h - u * u


def _left_piv(n: int, a: int):
    """Coefficients e_k of t^(1-2k), k = 1..5, of U_n(t; a) at -inf."""
    return [
        -n * (a + n),
        n * (a + n) * (a + 2 * n) / 2,
        -n * (2 * a**3 + 11 * a**2 * n + 18 * a * n**2 + 9 * n**3 + a + n) / 4,
        n * (5 * a**4 + 42 * a**3 * n + 118 * a**2 * n**2 + 135 * a * n**3 + 54 * n**4
             + 10 * a**2 + 30 * a * n + 20 * n**2) / 8,
        -n * (14 * a**5 + 163 * a**4 * n + 676 * a**3 * n**2 + 1283 * a**2 * n**3 + 1134 * a * n**4
              + 378 * n**5 + 70 * a**3 + 377 * a**2 * n + 614 * a * n**2 + 307 * n**3 + 21 * a + 21 * n) / 16,
    ]


def sigma_piv_left(n: int, a: int, t):
    """-inf expansion of U_n(t; a) and its derivative."""
    t = np.asarray(t, dtype=float)
    y = -2.0 * n * t
    yp = -2.0 * n + 0 * t
    for k, e in enumerate(_left_piv(n, a), start=1):
        y = y + e * t ** (1 - 2 * k)
        yp = yp + e * (1 - 2 * k) * t ** (-2 * k)
    return y, yp


@dataclass
class SigmaPIVSolution(GridFunction):
    n: int = 0
    a: int = 0
    derivative_values: np.ndarray = field(default=None, repr=False)
    second_values: np.ndarray = field(default=None, repr=False)
    boundary: dict = field(default_factory=dict)

    def algebraic_residual(self):
        y, yp, ypp, t = self.values, self.derivative_values, self.second_values, self.t
        n, a = self.n, self.a
        return ypp**2 - 4 * (t * yp - y) ** 2 + 4 * yp * (yp - 2 * a) * (yp + 2 * n)

    def log_derivative_probabilist(self, x):
        """d/dx log E_n(x; a) for the standard Gaussian weight (x = sqrt(2) t)."""
        return self(np.asarray(x, dtype=float) / math.sqrt(2)) / math.sqrt(2)


def piv_window(n: int, pad: float = 8.0) -> tuple[float, float]:
    """Window for U_n: the bulk edge sits at sqrt(2n); both ends pin modes that
    grow like exp(t^2) outward, so boundary errors are damped toward the bulk."""
    edge = math.sqrt(2 * n + 1)
    return -(edge + pad), max(6.0, edge + pad - 3.0)


def _piv_one(t, a: int):
    """Closed form U_1(t; a) from E_1(t; 0) = G(t) and E_1(t; 1) = t G(t) + g(t)/2."""
    # g/G written with erfcx to stay finite far left
    y0 = 2.0 / (math.sqrt(math.pi) * erfcx(-t))
    if a == 0:
        return y0
    # (t G + g/2)' = G, and G / (t G + g/2) = 1 / (t + y0/2)
    return 1.0 / (t + y0 / 2)


@lru_cache(maxsize=128)
def _sigma_piv(n: int, a: int, degree: int, pad: float) -> SigmaPIVSolution:
    L_minus, L_plus = piv_window(n, pad)
    g = ChebGrid(L_minus, L_plus, degree)
    t, D, Q = g.t, g.D, g.QR
    QQ = Q @ Q
    yl, _ = sigma_piv_left(n, a, L_minus)
    if a == 0:
        yr, ypr = 0.0, 0.0
    else:
        yr, ypr = (float(v) for v in hermite_log_derivative(n, L_plus))

    def parts(v):
        return yr + ypr * (t - L_plus) + QQ @ v, ypr + Q @ v

    # y''' = 4t(t y' - y) - 6 y'^2 - 8(n - a) y' + 8 a n
    def F(v):
        y, yp = parts(v)
        r = D @ v - 4 * t * (t * yp - y) + 6 * yp**2 + 8 * (n - a) * yp - 8 * a * n
        r[0] = y[0] - yl
        return r

    def J(v):
        _, yp = parts(v)
        M = D - (4 * t * t - 12 * yp - 8 * (n - a))[:, None] * Q + (4 * t)[:, None] * QQ
        M[0] = QQ[0]
        return M

    # continuation in n: U_n(t) ~ n^{3/2} u(t / sqrt(n)) away from the edge
    if n == 1:
        y0 = _piv_one(t, a)
    else:
        prev = _sigma_piv(n - 1, a, degree, pad)
        r = math.sqrt((n - 1) / n)
        y0 = prev(np.clip(t * r, prev.t[0], prev.t[-1])) / r**3
    v0 = D @ (D @ y0)
    v = _newton(F, J, v0, 1e-12, 60, f"sigma-PIV n={n} a={a}")
    y, yp = parts(v)
    sol = SigmaPIVSolution(g, y, n=n, a=a, derivative_values=yp, second_values=v)
    sol.boundary = {"L_minus": L_minus, "L_plus": L_plus, "left_residual": float(y[0] - yl),
                    "left_derivative_residual": float(yp[0] - sigma_piv_left(n, a, L_minus)[1])}
    return sol


def solve_sigma_piv(n: int, a: int, t_grid=None, degree: int = 256, pad: float = 8.0):
    """U_n(.; a); returns the solution object, or its values on t_grid if given."""
    if n < 1 or n > 30:
        raise ValueError("n must be in 1..30")
    if a not in (0, 1):
        raise ValueError("a must be 0 or 1")
    sol = _sigma_piv(int(n), int(a), int(degree), float(pad))
    if t_grid is None:
        return sol
    return sol(np.asarray(t_grid, dtype=float))
