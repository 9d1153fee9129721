"""OPUC for Toeplitz weights and the max-decompositions of Poisson-Plancherel and Schur measures.

Conventions used throughout (integer indices):
    B_s(x) = J_{x+s+1}(2 sqrt xi),   x = 0, 1, 2, ...
    K_s    = sum_{k >= s} B_k (x) B_k = K_PoPl(x + s, y + s)
    P(lambda_1 <= N) = det(I - K_N) = e^{-xi} det T_N
    q_s    = det(I - K_s) / det(I - K_{s+1}) = prod_{j >= s} (1 - |alpha_j|^2)
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .fredholm import discrete_fredholm_det
from .laws import TabulatedLaw
from .specfun import bessel_j_dorder, bessel_j_int, modified_bessel_coeff

CLOSURE = 1e-8  # |alpha_k| below this closes the infinite products


class BreakdownError(ArithmeticError):
    """|alpha_k| >= 1 or a non-positive Toeplitz pivot: precision was lost."""


class DivergenceError(ValueError):
    """Alphabet letter on or outside the unit circle."""


class ConditioningError(ArithmeticError):
    pass


class TruncationError(RuntimeError):
    pass


# ---------------------------------------------------------------- weights

@dataclass(frozen=True)
class Plancherel:
    """Weight exp(sqrt(xi) (z + 1/z)) on the circle."""

    xi: float

    def __post_init__(self):
        if not self.xi >= 0:
            raise ValueError("xi must be >= 0")

    def fourier(self, m):
        return modified_bessel_coeff(np.abs(np.asarray(m)), math.sqrt(self.xi))

    @property
    def normalization(self) -> float:
        return float(modified_bessel_coeff(0, math.sqrt(self.xi)))

    @property
    def empty_mass(self) -> float:
        return math.exp(-self.xi)


@dataclass(frozen=True)
class SchurWeight:
    """|prod_i (1 + a_i z)|^2 for a finite alphabet A inside the disk, B = conj(A)."""

    alphabet: tuple

    def __post_init__(self):
        a = np.asarray(self.alphabet, dtype=complex)
        if a.ndim != 1 or len(a) == 0:
            raise ValueError("alphabet must be a non-empty list of letters")
        if np.any(np.abs(a) >= 1):
            raise DivergenceError("alphabet letters must lie in the open unit disk")
        object.__setattr__(self, "alphabet", tuple(complex(x) for x in a))

    @property
    def letters(self) -> np.ndarray:
        return np.array(self.alphabet, dtype=complex)

    @property
    def elementary(self) -> np.ndarray:
        """e_0, ..., e_m of the alphabet (coefficients of prod (1 + a_i z))."""
        e = np.array([1.0 + 0j])
        for a in self.letters:
            e = np.concatenate([e, [0]]) + a * np.concatenate([[0], e])
        return e

    def fourier(self, m):
        e = self.elementary
        m = np.atleast_1d(np.asarray(m))
        out = np.array([np.sum(e[mm:] * np.conj(e[: len(e) - mm])) if 0 <= mm < len(e) else
                        (np.conj(np.sum(e[-mm:] * np.conj(e[: len(e) + mm]))) if -len(e) < mm < 0 else 0)
                        for mm in m.ravel()], dtype=complex)
        return out.reshape(m.shape)

    @property
    def normalization(self) -> float:
        return float(self.fourier(0)[0].real)

    @property
    def empty_mass(self) -> float:
        """H[-A B] = prod_{i,j} (1 - a_i conj(a_j))."""
        a = self.letters
        return float(np.prod(1.0 - a[:, None] * np.conj(a)[None, :]).real)

    def weight(self, theta):
        z = np.exp(1j * np.asarray(theta, dtype=float))
        return np.abs(np.prod(1.0 + self.letters[:, None] * z[None, ...], axis=0)) ** 2


# ---------------------------------------------------------------- OPUC

def toeplitz(weight, n: int) -> np.ndarray:
    """T_n[j, k] = <z^j, z^k>_w = c_{k-j}."""
    m = np.arange(-(n - 1), n)
    c = dict(zip(m.tolist(), np.asarray(weight.fourier(m), dtype=complex)))
    return np.array([[c[k - j] for k in range(n)] for j in range(n)])


@dataclass
class OpucState:
    weight: object
    alpha: np.ndarray  # alpha_0 .. alpha_{n-1}
    norms: np.ndarray  # ||Phi_k||_w^2, k = 0..n
    monic: np.ndarray  # row k: coefficients of Phi_k in z^0..z^k
    normalization: float

    @property
    def n(self) -> int:
        return len(self.alpha)

    def q(self, k: int) -> float:
        """prod_{j >= k} (1 - |alpha_j|^2) using the closed tail."""
        if k >= self.n:
            return 1.0
        return float(np.prod(1.0 - np.abs(self.alpha[k:]) ** 2))

    def q_from_norm(self, k: int) -> float:
        return float(1.0 / self.norms[k])

    def reversed_poly(self, k: int) -> np.ndarray:
        return np.conj(self.monic[k, : k + 1][::-1])

    def szego_residual(self, n_max: Optional[int] = None) -> float:
        """max_n ||Phi_{n+1} - (z Phi_n - conj(alpha_n) Phi_n^*)|| over coefficients."""
        n_max = self.n - 1 if n_max is None else min(n_max, self.n - 1)
        worst = 0.0
        for n in range(n_max + 1):
            zphi = np.concatenate([[0], self.monic[n, : n + 1]])
            star = np.concatenate([self.reversed_poly(n), [0]])
            rhs = zphi - np.conj(self.alpha[n]) * star
            worst = max(worst, float(np.max(np.abs(self.monic[n + 1, : n + 2] - rhs))))
        return worst

    def norm_recursion_residual(self) -> float:
        pred = self.norms[:-1] * (1.0 - np.abs(self.alpha) ** 2)
        return float(np.max(np.abs(pred - self.norms[1:]) / self.norms[1:]))

    def szego_tail(self) -> float:
        """|prod_k (1 - |alpha_k|^2) - 1/Z|, the Szego-theorem limit (geometric mean 1)."""
        return abs(float(np.prod(1.0 - np.abs(self.alpha) ** 2)) - 1.0 / self.normalization)


def opuc_from_weight(weight, n_max: Optional[int] = None, max_n: int = 400) -> OpucState:
    """Monic OPUC by Cholesky (Gram-Schmidt) of the Toeplitz moment matrix.

    With n_max None the degree grows until |alpha_k| < CLOSURE for a few consecutive k.
    """
    if n_max is None:
        n = 16
        while True:
            st = opuc_from_weight(weight, n)
            tail = np.abs(st.alpha[-4:])
            if np.all(tail < CLOSURE) or n >= max_n:
                if not np.all(tail < CLOSURE):
                    raise TruncationError(f"Verblunsky coefficients still {tail.max():.2e} at n = {n}")
                return st
            n *= 2
    T = toeplitz(weight, n_max + 1)
    try:
        L = np.linalg.cholesky(T)
    except np.linalg.LinAlgError as exc:
        raise BreakdownError("Toeplitz matrix lost positive definiteness") from exc
    d = np.real(np.diag(L))
    # rows of L^{-1} are the orthonormal polynomials; scale to monic
    Linv = np.linalg.solve(L, np.eye(n_max + 1))
    monic = Linv * d[:, None]
    monic = np.conj(monic) if np.iscomplexobj(monic) else monic
    norms = d**2
    alpha = -np.conj(monic[1:, 0])
    if np.any(np.abs(alpha) >= 1):
        raise BreakdownError("computed |alpha_k| >= 1")
    if isinstance(weight, Plancherel):
        if np.max(np.abs(np.imag(alpha))) > 1e-13:
            raise BreakdownError("Plancherel Verblunsky coefficients must be real")
        alpha = np.real(alpha)
    return OpucState(weight, alpha, norms, monic, weight.normalization)


# ---------------------------------------------------------------- Poisson-Plancherel

def plancherel_qk(xi: float, k: int, state: Optional[OpucState] = None) -> float:
    """q_k(xi) = P(Z <= k) = prod_{j >= k} (1 - alpha_j(xi)^2)."""
    if xi == 0:
        return 1.0
    st = opuc_from_weight(Plancherel(xi)) if state is None else state
    return st.q(k)


def law_z_popl(xi: float, state: Optional[OpucState] = None) -> TabulatedLaw:
    """Law of Z^{PoPl(xi)} on 0, 1, 2, ... as a right-continuous step table."""
    st = opuc_from_weight(Plancherel(xi)) if state is None else state
    ks = np.arange(st.n + 1)
    cdf = np.array([st.q(k) for k in ks])
    return TabulatedLaw(ks.astype(float), cdf, pmf_from_cdf(cdf), name="Z_PoPl", end_tol=1e-10)


def pmf_from_cdf(cdf) -> np.ndarray:
    return np.diff(np.concatenate([[0.0], cdf]))


def popl_pmf(xi: float, state: Optional[OpucState] = None) -> np.ndarray:
    """P(Z = l) = |alpha_{l-1}|^2 prod_{k >= l} (1 - |alpha_k|^2), alpha_{-1} := 1."""
    st = opuc_from_weight(Plancherel(xi)) if state is None else state
    a2 = np.concatenate([[1.0], np.abs(st.alpha) ** 2])
    return np.array([a2[l] * st.q(l) for l in range(st.n + 1)])


def popl_max_cdf(xi: float, N: int, state: Optional[OpucState] = None) -> float:
    """P(lambda_1 <= N) = prod_{l >= 0} q_{l+N}(xi)."""
    if N < 0:
        return 0.0
    if xi == 0:
        return 1.0
    st = opuc_from_weight(Plancherel(xi)) if state is None else state
    return float(np.prod([st.q(k) for k in range(N, st.n)]))


def toeplitz_max_cdf(weight, N: int) -> float:
    """H[-A B] det T_N(w) (e^{-xi} det T_N for Plancherel)."""
    if N <= 0:
        return weight.empty_mass if N == 0 else 0.0
    sign, logdet = np.linalg.slogdet(toeplitz(weight, N))
    return float(weight.empty_mass * np.real(sign) * math.exp(logdet))


# ---------------------------------------------------------------- discrete Bessel kernel

def _tail_orders(xi: float) -> int:
    return int(2.0 * math.e * math.sqrt(xi)) + 40


def bessel_vector(xi: float, s: int, size: int) -> np.ndarray:
    """B_s(x) = J_{x+s+1}(2 sqrt xi), x = 0..size-1."""
    return bessel_j_int(np.arange(size) + s + 1, 2.0 * math.sqrt(xi))


def _hankel(xi, x, y):
    z = 2.0 * math.sqrt(xi)
    k = np.arange(1, _tail_orders(xi) + int(max(0, -min(np.min(x), np.min(y)))) + 1)
    Jx = bessel_j_int(np.asarray(x)[..., None] + k, z)
    Jy = bessel_j_int(np.asarray(y)[..., None] + k, z)
    return np.sum(Jx * Jy, axis=-1)


def _christoffel_darboux(xi, x, y):
    z, r = 2.0 * math.sqrt(xi), math.sqrt(xi)
    x, y = np.broadcast_arrays(np.asarray(x), np.asarray(y))
    Jx, Jx1 = bessel_j_int(x, z), bessel_j_int(x + 1, z)
    Jy, Jy1 = bessel_j_int(y, z), bessel_j_int(y + 1, z)
    off = x != y
    d = np.where(off, x - y, 1)
    val = r * (Jx * Jy1 - Jx1 * Jy) / d
    # diagonal: limit y -> x through the order derivative
    diag = r * (bessel_j_dorder(x * 1.0, z) * Jx1 - bessel_j_dorder(x + 1.0, z) * Jx)
    return np.where(off, val, diag)


def _integral(xi, x, y, n: int = 128, rho: float = 0.5):
    """Double contour integral with z on |z| = 1 and omega on |omega| = rho < 1.

    K(x, y) = <G(z) z^{-x} G(1/omega) omega^{y} omega / (z - omega)>, the bracket being the mean over
    both circles and G(z) = exp(sqrt(xi)(z - 1/z)); trapezoid rule in both angles.
    """
    r = math.sqrt(xi)
    th = 2.0 * np.pi * np.arange(n) / n
    z = np.exp(1j * th)
    om = rho * np.exp(1j * th)
    Gz = np.exp(r * (z - 1.0 / z))
    Gw = np.exp(r * (1.0 / om - om))
    x, y = np.broadcast_arrays(np.asarray(x), np.asarray(y))
    out = np.empty(x.shape)
    for idx in np.ndindex(x.shape):
        fz = Gz * z ** (-float(x[idx]))
        fw = Gw * om ** float(y[idx])
        M = fz[:, None] * fw[None, :] * om[None, :] / (z[:, None] - om[None, :])
        out[idx] = float(np.real(np.mean(M)))
    return out


def discrete_bessel_kernel(xi: float, x, y, form: str = "hankel"):
    """K_PoPl(x, y) = sum_{k >= 1} J_{x+k} J_{y+k} (argument 2 sqrt xi), in one of three forms."""
    if not xi >= 0:
        raise ValueError("xi must be >= 0")
    x = np.asarray(x, dtype=int)
    y = np.asarray(y, dtype=int)
    if form not in ("hankel", "christoffel_darboux", "integral"):
        raise ValueError(f"unknown form {form!r}")
    if xi == 0:
        out = np.zeros(np.broadcast(x, y).shape)  # every J_{n}(0), n >= 1, vanishes
    elif form == "hankel":
        out = _hankel(xi, x, y)
    elif form == "christoffel_darboux":
        out = _christoffel_darboux(xi, x, y)
    else:
        out = _integral(xi, x, y)
    return float(out) if np.ndim(out) == 0 else out


def kernel_matrix(xi: float, s: int, size: Optional[int] = None) -> np.ndarray:
    """K_s on x, y = 0..size-1 (Hankel form)."""
    size = _tail_orders(xi) if size is None else size
    idx = np.arange(size) + s
    return _hankel(xi, idx[:, None], idx[None, :])


def popl_fredholm_cdf(xi: float, N: int, truncation: Optional[int] = None) -> float:
    """det(I - K_PoPl) on {N, N+1, ...}."""
    truncation = _tail_orders(xi) if truncation is None else truncation
    res = discrete_fredholm_det(lambda X, Y: _hankel(xi, X, Y), N, truncation)
    return res.value


def _resolvent_inner(xi: float, kernel_shift: int, s: int, size: int) -> float:
    K = kernel_matrix(xi, kernel_shift, size)
    B = bessel_vector(xi, s, size)
    A = np.eye(size) - K
    if np.linalg.cond(A) > 1e12:
        raise ConditioningError(f"I - K_{kernel_shift} is singular to working precision")
    return float(B @ np.linalg.solve(A, B))


def resolvent_qs(xi: float, s: int, form: str = "one_over", size: Optional[int] = None) -> float:
    """q_s(xi) from the resolvent of K_s."""
    size = _tail_orders(xi) if size is None else size
    if form == "one_over":
        return 1.0 / (1.0 + _resolvent_inner(xi, s, s, size))
    if form == "one_minus":
        return 1.0 - _resolvent_inner(xi, s + 1, s, size)
    if form == "diagonal":
        A = np.eye(size) - kernel_matrix(xi, s, size)
        e0 = np.zeros(size)
        e0[0] = 1.0
        # [(I - K_s)^{-1}]_{00} = 1 + R_s[0, 0] with R_s = K_s (I - K_s)^{-1}
        return 1.0 / float(np.linalg.solve(A, e0)[0])
    raise ValueError(f"unknown form {form!r}")


def bessel_norm2(xi: float, s: int, over: str = "N") -> float:
    """||B_s||^2 over x in N (x >= 0) or over all of Z."""
    z = 2.0 * math.sqrt(xi)
    M = _tail_orders(xi)
    if over == "N":
        x = np.arange(M + 1)
    elif over == "Z":
        x = np.arange(-M - s - 1, M + 1)
    else:
        raise ValueError("over must be 'N' or 'Z'")
    return float(np.sum(bessel_j_int(x + s + 1, z) ** 2))


def edge_randomisation_laws(xi: float, N: int, ell_max: int = 20, size: Optional[int] = None) -> np.ndarray:
    """P(Z_l <= N) = exp(-(1/l) sum_{s >= N} r_s^l), l = 1..ell_max, r_s = <(I - K_{s+1})^{-1} B_s, B_s>."""
    size = _tail_orders(xi) if size is None else size
    r = []
    s = N
    while True:
        v = _resolvent_inner(xi, s + 1, s, size)
        r.append(v)
        if v < 1e-17 or s > N + 4 * size:
            break
        s += 1
    r = np.array(r)
    ell = np.arange(1, ell_max + 1)
    return np.exp(-np.array([np.sum(r**l) / l for l in ell]))


# ---------------------------------------------------------------- Schur measure

def schur_q(weight: SchurWeight, k: int, state: Optional[OpucState] = None) -> float:
    st = opuc_from_weight(weight) if state is None else state
    return st.q(k)


def schur_max_cdf(weight: SchurWeight, N: int, state: Optional[OpucState] = None) -> float:
    """P(lambda_1 <= N) = prod_{l >= 0} q_{l+N}(A)."""
    if N < 0:
        return 0.0
    st = opuc_from_weight(weight) if state is None else state
    return float(np.prod([st.q(k) for k in range(N, st.n)]))


def total_sum_mgf(weight: SchurWeight, t) -> np.ndarray:
    """E[t^{|lambda|}] = prod_{i,j} (1 - a_i conj a_j) / (1 - t a_i conj a_j)."""
    a = weight.letters
    p = (a[:, None] * np.conj(a)[None, :]).ravel()
    t = np.asarray(t, dtype=float)
    out = np.prod((1.0 - p) / (1.0 - t[..., None] * p), axis=-1)
    return np.real(out)


def total_sum_pmf(weight: SchurWeight, n_max: int) -> np.ndarray:
    """P(|lambda| = n), n = 0..n_max: power-series coefficients of the MGF."""
    a = weight.letters
    p = (a[:, None] * np.conj(a)[None, :]).ravel()
    coef = np.zeros(n_max + 1, dtype=complex)
    coef[0] = 1.0
    for pi in p:
        geo = (1.0 - pi) * pi ** np.arange(n_max + 1)
        coef = np.convolve(coef, geo)[: n_max + 1]
    return np.real(coef)


@dataclass(frozen=True)
class Partition:
    parts: tuple = field(default_factory=tuple)

    def __post_init__(self):
        p = tuple(int(x) for x in self.parts if int(x) != 0)
        if any(x < 0 for x in p) or any(p[i] < p[i + 1] for i in range(len(p) - 1)):
            raise ValueError("parts must be weakly decreasing positive integers")
        object.__setattr__(self, "parts", p)

    @property
    def size(self) -> int:
        return sum(self.parts)

    @property
    def length(self) -> int:
        return len(self.parts)

    @property
    def first(self) -> int:
        return self.parts[0] if self.parts else 0


def partitions(n: int, max_part: Optional[int] = None):
    """All partitions of n, parts <= max_part."""
    max_part = n if max_part is None else max_part
    if n == 0:
        yield Partition(())
        return
    for first in range(min(n, max_part), 0, -1):
        for rest in partitions(n - first, first):
            yield Partition((first,) + rest.parts)


def complete_homogeneous(alphabet, k_max: int) -> np.ndarray:
    """h_0..h_{k_max} of a finite alphabet (coefficients of prod 1/(1 - a z))."""
    h = np.zeros(k_max + 1, dtype=complex)
    h[0] = 1.0
    for a in alphabet:
        h = np.array([np.sum(a ** np.arange(k, -1, -1) * h[: k + 1]) for k in range(k_max + 1)])
    return h


def schur_polynomial(lam: Partition, h: np.ndarray) -> complex:
    """Jacobi-Trudi: s_lambda = det(h_{lambda_i - i + j})."""
    n = lam.length
    if n == 0:
        return 1.0
    M = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            k = lam.parts[i] - i + j
            M[i, j] = h[k] if 0 <= k < len(h) else 0.0
    return complex(np.linalg.det(M))


def schur_enumeration_cdf(weight: SchurWeight, N: int, size_max: int = 12) -> tuple[float, float]:
    """(P(lambda_1 <= N), missing mass) by summing the Schur measure over |lambda| <= size_max."""
    a = weight.letters
    h = complete_homogeneous(a, size_max)
    hb = complete_homogeneous(np.conj(a), size_max)
    total, below = 0.0, 0.0
    for n in range(size_max + 1):
        for lam in partitions(n):
            p = weight.empty_mass * float(np.real(schur_polynomial(lam, h) * schur_polynomial(lam, hb)))
            total += p
            if lam.first <= N:
                below += p
    return below, 1.0 - total


# ---------------------------------------------------------------- discrete Fuchs lemma

@dataclass
class DiscreteFuchs:
    ell: int
    k: int
    varying: float  # relative residual of the varying-interval ratio identity
    fixed: float  # relative residual of the Delta-lambda identity
    rank_one: float  # max |Delta K + B_l B_l^T|


def _top_pairs(xi, ell, size, k_max):
    lam, V = np.linalg.eigh(kernel_matrix(xi, ell, size))
    order = np.argsort(lam)[::-1][:k_max]
    return lam[order], V[:, order]


def discrete_fuchs_check(xi: float, ell_range: Sequence[int] = range(6), k_max: int = 3,
                         size: Optional[int] = None) -> list[DiscreteFuchs]:
    """Residuals of the discrete Fuchs identities for the top k_max eigenvalues of K_l on N."""
    size = _tail_orders(xi) if size is None else size
    out = []
    for ell in ell_range:
        l0, V0 = _top_pairs(xi, ell, size, k_max)
        l1, V1 = _top_pairs(xi, ell + 1, size, k_max)
        live = int(np.sum(np.minimum(l0, l1) > 1e-13))  # pairs above roundoff
        gaps = np.abs(np.diff(l0[: live + 1])) if live else np.array([np.inf])
        if live and np.min(gaps[:live]) < 1e-8 * l0[live - 1]:
            raise ConditioningError(f"near-degenerate eigenvalues at l = {ell}; pairing unreliable")
        K0, K1 = kernel_matrix(xi, ell, size), kernel_matrix(xi, ell + 1, size)
        B = bessel_vector(xi, ell, size)
        rank_one = float(np.max(np.abs((K1 - K0) + np.outer(B, B))))
        for k in range(live):
            g0, g1 = V0[:, k], V1[:, k]
            # absolute coordinates: g_l on {l, l+1, ...}; g_{l+1} on {l+1, ...}, extended to l by the kernel
            ext = float(kernel_matrix(xi, ell, size)[0, 1:] @ g1[:-1]) / l1[k]
            g1_on_I0 = np.concatenate([[ext], g1[:-1]])
            inner_I1 = float(g0[1:] @ g1[:-1])
            inner_I0 = float(g0 @ g1_on_I0)
            varying = abs(l0[k] * inner_I1 - l1[k] * inner_I0) / abs(l0[k] * inner_I1)
            # same-coordinate (fixed interval N) identity: K_{l+1} = K_l + Delta K
            dK = K1 - K0
            pred = float(g0 @ dK @ g1) / float(g0 @ g1)
            fixed = abs((l1[k] - l0[k]) - pred) / max(abs(l1[k] - l0[k]), 1e-300)
            out.append(DiscreteFuchs(ell, k + 1, varying, fixed, rank_one))
    return out


__all__ = [
    "BreakdownError", "DivergenceError", "ConditioningError", "TruncationError",
    "Plancherel", "SchurWeight", "OpucState", "Partition", "DiscreteFuchs",
    "toeplitz", "opuc_from_weight", "plancherel_qk", "law_z_popl", "popl_pmf", "popl_max_cdf",
    "toeplitz_max_cdf", "bessel_vector", "discrete_bessel_kernel", "kernel_matrix",
    "popl_fredholm_cdf", "resolvent_qs", "bessel_norm2", "edge_randomisation_laws",
    "schur_q", "schur_max_cdf", "total_sum_mgf", "total_sum_pmf", "partitions",
    "complete_homogeneous", "schur_polynomial", "schur_enumeration_cdf", "discrete_fuchs_check",
]
