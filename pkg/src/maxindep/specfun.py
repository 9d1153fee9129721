"""Scalar special functions: Airy, Bessel, Gaussian helpers.

Airy and Bessel values come from scipy.special (cephes/AMOS); the wrappers
add domain checks, the Laurent-coefficient convention used for circle
weights, and the order derivative of J.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import special as sps

SQRT2PI = math.sqrt(2.0 * math.pi)


def _finite(x, name="x"):
    a = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be finite")
    return a


def airy_ai(x):
    """Return (Ai(x), Ai'(x)); scalar in, scalar out, arrays broadcast."""
    a = _finite(x)
    ai, aip, _, _ = sps.airy(a)
    if a.ndim == 0:
        return float(ai), float(aip)
    return ai, aip


def airy_ai_value(x):
    return airy_ai(x)[0]


def bessel_j(nu, x):
    """J_nu(x) for real nu >= 0 and x >= 0."""
    n = _finite(nu, "nu")
    z = _finite(x)
    if np.any(n < 0) or np.any(z < 0):
        raise ValueError("bessel_j needs nu >= 0 and x >= 0")
    out = sps.jv(n, z)
    return float(out) if np.ndim(out) == 0 else out


def bessel_j_int(n, x):
    """J_n(x) for any integer order, using J_{-n} = (-1)^n J_n."""
    n = np.asarray(n)
    out = sps.jv(n.astype(float), np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def bessel_j_dorder(nu, x, h=1e-5):
    """d/dnu J_nu(x) by a central difference in the order."""
    nu = np.asarray(nu, dtype=float)
    x = np.asarray(x, dtype=float)
    out = (sps.jv(nu + h, x) - sps.jv(nu - h, x)) / (2.0 * h)
    return float(out) if np.ndim(out) == 0 else out


def modified_bessel_coeff(k, s):
    """[z^k] exp(s (z + 1/z)), which is I_{|k|}(2 s) in the usual notation."""
    s = _finite(s, "s")
    if np.any(s < 0):
        raise ValueError("s must be nonnegative")
    nu = np.abs(np.asarray(k)).astype(float)
    # iv returns nan for subnormal arguments; ive = iv there to all digits
    out = np.where(2.0 * s < 1e-300, sps.ive(nu, 2.0 * s), sps.iv(nu, 2.0 * s))
    return float(out) if np.ndim(out) == 0 else out


def modified_bessel_coeff_series(k, s, terms=80):
    """Direct summation of sum_m s^(2m+k) / (m! (m+k)!) (test oracle)."""
    k = abs(int(k))
    if s == 0:
        return 1.0 if k == 0 else 0.0
    total = 0.0
    for m in range(terms):
        total += math.exp((2 * m + k) * math.log(s) - math.lgamma(m + 1) - math.lgamma(m + k + 1))
    return total


def gauss_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / SQRT2PI


def gauss_cdf(x):
    return sps.ndtr(np.asarray(x, dtype=float))


def truncated_gaussian_moment(j: int, t: float) -> float:
    """m_j(t) = int_{-inf}^t x^j phi(x) dx via m_j = (j-1) m_{j-2} - t^(j-1) phi(t)."""
    if j < 0:
        raise ValueError("j must be >= 0")
    phi = float(gauss_pdf(t))
    m0 = float(gauss_cdf(t))
    m1 = -phi
    if j == 0:
        return m0
    if j == 1:
        return m1
    mm2, mm1 = m0, m1
    for i in range(2, j + 1):
        tail = t ** (i - 1) * phi if phi > 0 else 0.0
        mm2, mm1 = mm1, (i - 1) * mm2 - tail
    return mm1
