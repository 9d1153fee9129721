"""Monte Carlo oracles: GUE, CUE, Poissonized Plancherel, gamma maxima, geometric sums."""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .schur import Partition


@dataclass(frozen=True)
class Rng:
    """(seed, stream) -> independent PCG64 stream; identical pairs give identical sequences."""

    seed: int = 0
    stream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream),))
        return np.random.Generator(np.random.PCG64(ss))

    def spawn(self, n: int) -> list["Rng"]:
        return [Rng(self.seed, self.stream * 1_000_003 + j + 1) for j in range(n)]


def _gen(rng) -> np.random.Generator:
    if isinstance(rng, Rng):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return Rng(int(rng)).generator()


# ---------------------------------------------------------------- GUE

def sample_gue_spectra(N: int, M: int, rng) -> np.ndarray:
    """(M, N) sorted GUE eigenvalues, density ~ exp(-tr H^2 / 2), from the beta = 2 tridiagonal model."""
    if N < 1:
        raise ValueError("N must be >= 1")
    g = _gen(rng)
    a = g.standard_normal((M, N))
    if N == 1:
        return a
    b = np.sqrt(g.chisquare(2.0 * np.arange(N - 1, 0, -1), size=(M, N - 1)) / 2.0)
    T = np.zeros((M, N, N))
    i = np.arange(N)
    T[:, i, i] = a
    T[:, i[:-1], i[1:]] = b
    T[:, i[1:], i[:-1]] = b
    return np.linalg.eigvalsh(T)


def sample_gue_spectrum(N: int, rng) -> np.ndarray:
    return sample_gue_spectra(N, 1, rng)[0]


# ---------------------------------------------------------------- CUE

def sample_cue_angles_batch(N: int, M: int, rng) -> np.ndarray:
    """(M, N) sorted CUE eigenangles in [0, 2pi): QR of a complex Gaussian matrix with phase correction."""
    g = _gen(rng)
    Z = (g.standard_normal((M, N, N)) + 1j * g.standard_normal((M, N, N))) / math.sqrt(2.0)
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R, axis1=1, axis2=2)
    U = Q * (d / np.abs(d))[:, None, :]
    ang = np.mod(np.angle(np.linalg.eigvals(U)), 2.0 * np.pi)
    return np.sort(ang, axis=1)


def sample_cue_angles(N: int, rng) -> np.ndarray:
    return sample_cue_angles_batch(N, 1, rng)[0]


# ---------------------------------------------------------------- Plancherel / RSK

def longest_increasing(perm: Sequence[int]) -> int:
    """lambda_1 of the RSK shape by patience sorting."""
    piles: list = []
    for v in perm:
        j = bisect.bisect_left(piles, v)
        if j == len(piles):
            piles.append(v)
        else:
            piles[j] = v
    return len(piles)


def rsk_shape(perm: Sequence[int]) -> Partition:
    """Shape of the RSK insertion tableau (row insertion)."""
    rows: list[list] = []
    for v in perm:
        for row in rows:
            j = bisect.bisect_left(row, v)
            if j == len(row):
                row.append(v)
                v = None
                break
            row[j], v = v, row[j]
        if v is not None:
            rows.append([v])
    return Partition(tuple(len(r) for r in rows))


def sample_plancherel(xi: float, rng, full_shape: bool = True):
    """Poissonized Plancherel partition (or only lambda_1 when full_shape is False)."""
    if xi < 0:
        raise ValueError("xi must be >= 0")
    g = _gen(rng)
    n = int(g.poisson(xi))
    perm = g.permutation(n)
    return rsk_shape(perm) if full_shape else longest_increasing(perm)


def sample_plancherel_first_rows(xi: float, M: int, rng) -> np.ndarray:
    g = _gen(rng)
    ns = g.poisson(xi, size=M)
    return np.array([longest_increasing(g.permutation(int(n))) for n in ns])


# ---------------------------------------------------------------- Ginibre moduli, geometric sums

def sample_gamma_maxima(N: int, M: int, rng) -> np.ndarray:
    """max_{k <= N} sqrt(Gamma(k, 1))."""
    g = _gen(rng)
    return np.sqrt(g.gamma(np.arange(1, N + 1), size=(M, N))).max(axis=1)


def sample_geometric_sums(alphabet, M: int, rng) -> np.ndarray:
    """sum_{i,j} Geom(a_i conj a_j) on {0, 1, ...}; needs every product real in [0, 1)."""
    a = np.asarray(alphabet, dtype=complex)
    p = (a[:, None] * np.conj(a)[None, :]).ravel()
    if np.max(np.abs(p.imag)) > 1e-15 or np.any(p.real < 0) or np.any(p.real >= 1):
        raise ValueError("geometric-sum sampler needs real products a_i conj(a_j) in [0, 1)")
    g = _gen(rng)
    out = np.zeros(M, dtype=np.int64)
    for pi in p.real:
        if pi > 0:
            out += g.geometric(1.0 - pi, size=M) - 1  # numpy geometric starts at 1
    return out


# ---------------------------------------------------------------- ECDF and KS

@dataclass
class EmpiricalCdf:
    values: np.ndarray

    def __post_init__(self):
        self.values = np.sort(np.asarray(self.values, dtype=float).ravel())

    @property
    def M(self) -> int:
        return len(self.values)

    def __call__(self, x):
        return np.searchsorted(self.values, np.asarray(x, dtype=float), side="right") / self.M

    def merge(self, other: "EmpiricalCdf") -> "EmpiricalCdf":
        return EmpiricalCdf(np.concatenate([self.values, other.values]))

    def to_csv(self) -> str:
        return "value\n" + "".join(f"{v:.17g}\n" for v in self.values)


def ks_distance(ecdf: EmpiricalCdf, cdf: Callable, discrete: bool = False) -> float:
    """sup_x |ECDF(x) - F(x)|.

    Continuous F: checked on both sides of every sample point.  Discrete F (jumps only at
    sample support points): both step functions are compared at the distinct values.
    """
    x = ecdf.values
    if discrete:
        u = np.unique(x)
        return float(np.max(np.abs(ecdf(u) - np.asarray(cdf(u), dtype=float))))
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, ecdf.M + 1)
    up = i / ecdf.M
    return float(max(np.max(up - F), np.max(F - up) + 1.0 / ecdf.M))


def ks_threshold(M: int) -> float:
    return 3.0 / math.sqrt(M)


# ---------------------------------------------------------------- Chen-Stein

@dataclass
class ChenStein:
    exact: float
    poisson: float
    bound: float

    @property
    def holds(self) -> bool:
        return abs(self.exact - self.poisson) <= self.bound + 1e-15


def chen_stein_probabilities(p) -> ChenStein:
    p = np.asarray(p, dtype=float)
    lam = float(np.sum(p))
    bound = float(np.sum(p**2)) * (min(1.0, 1.0 / lam) if lam > 0 else 0.0)
    return ChenStein(float(np.prod(1.0 - p)), math.exp(-lam), bound)


def chen_stein_report(laws, x: float) -> ChenStein:
    """p_k = P(Z_k > x) for independent Z_k; exact no-exceedance vs its Poisson approximation."""
    rep = chen_stein_probabilities([1.0 - float(law.cdf(x)) for law in laws])
    if not rep.holds:
        raise AssertionError(f"Chen-Stein bound violated: |{rep.exact} - {rep.poisson}| > {rep.bound}")
    return rep


__all__ = [
    "Rng", "EmpiricalCdf", "ChenStein", "sample_gue_spectra", "sample_gue_spectrum",
    "sample_cue_angles_batch", "sample_cue_angles", "longest_increasing", "rsk_shape",
    "sample_plancherel", "sample_plancherel_first_rows", "sample_gamma_maxima",
    "sample_geometric_sums", "ks_distance", "ks_threshold", "chen_stein_probabilities",
    "chen_stein_report",
]
