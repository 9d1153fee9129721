import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from maxindep import specfun as sf


def test_airy_at_zero():
    ai, _ = sf.airy_ai(0.0)
    assert ai == pytest.approx(3 ** (-2 / 3) / math.gamma(2 / 3), rel=1e-15)


@pytest.mark.parametrize("x", [-15.0, -9.7, -3.2, -0.4, 0.8, 2.5, 7.0, 15.0])
def test_airy_against_mpmath(x):
    ai, aip = sf.airy_ai(x)
    ref, refp = float(mp.airyai(x)), float(mp.airyai(x, derivative=1))
    # relative to the oscillation envelope on the left, plain relative on the right
    env = abs(x) ** -0.25 / math.sqrt(math.pi) if x < -1 else abs(ref)
    envp = abs(x) ** 0.25 / math.sqrt(math.pi) if x < -1 else abs(refp)
    assert abs(ai - ref) <= 1e-12 * env
    assert abs(aip - refp) <= 1e-12 * envp


@pytest.mark.parametrize("x", [16.0, 25.0, 60.0])
def test_airy_far_right_absolute(x):
    ai, aip = sf.airy_ai(x)
    assert abs(ai - float(mp.airyai(x))) <= 1e-14
    assert abs(aip - float(mp.airyai(x, derivative=1))) <= 1e-14


def test_airy_decay_rate():
    x = np.array([10.0, 20.0, 40.0])
    ratio = sf.airy_ai_value(x) / (x ** -0.25 * np.exp(-2 / 3 * x**1.5) / (2 * math.sqrt(math.pi)))
    assert np.all(np.abs(ratio - 1) < 0.01)
    assert np.all(np.diff(np.abs(ratio - 1)) < 0)


def test_airy_oscillation_envelope():
    x = 50.0
    lhs = sf.airy_ai_value(-x) ** 2
    rhs = math.sin(math.pi / 4 + 2 / 3 * x**1.5) ** 2 / (math.pi * math.sqrt(x))
    assert abs(lhs - rhs) < 1e-2 / (math.pi * math.sqrt(x))


def test_airy_ode_residual():
    x = np.linspace(-10, 10, 81)
    h = 1e-3
    d = lambda u: sf.airy_ai(u)[1]
    app = (-d(x + 2 * h) + 8 * d(x + h) - 8 * d(x - h) + d(x - 2 * h)) / (12 * h)
    assert np.max(np.abs(app - x * sf.airy_ai_value(x))) <= 1e-9


def test_airy_integral_representation():
    # contour Im u = 1 makes the cubic-phase integral absolutely convergent
    def integrand(u, x):
        z = u + 1j
        return (np.exp(1j * (z**3 / 3 + x * z))).real

    for x in (-6.0, -2.0, 0.5, 1.5, 4.0):
        val, _ = quad(integrand, -25, 25, args=(x,), limit=400, epsabs=1e-14)
        assert sf.airy_ai_value(x) == pytest.approx(val / (2 * math.pi), abs=1e-12)


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_airy_rejects_nonfinite(bad):
    with pytest.raises(ValueError):
        sf.airy_ai(bad)


def test_bessel_trivial_and_half_order():
    assert sf.bessel_j(0, 0) == 1.0
    x = np.linspace(0.1, 30, 50)
    assert np.allclose(sf.bessel_j(0.5, x), np.sqrt(2 / (np.pi * x)) * np.sin(x), rtol=0, atol=1e-14)


def test_bessel_airy_transition():
    nu, X = 200.0, 1.0
    val = nu ** (1 / 3) * sf.bessel_j(2 * nu, 2 * nu - X * nu ** (1 / 3))
    assert abs(val - sf.airy_ai_value(X)) < 1e-2


@pytest.mark.parametrize("nu,x", [(0.0, 3.0), (2.5, 1e-3), (17.3, 40.0), (120.0, 100.0), (500.0, 520.0),
                                  (499.5, 2000.0), (3.0, 1500.0), (250.0, 180.0)])
def test_bessel_against_mpmath(nu, x):
    ref = float(mp.besselj(nu, x))
    assert abs(sf.bessel_j(nu, x) - ref) <= 1e-10 * max(abs(ref), math.sqrt(2 / (math.pi * x)) if x > nu else abs(ref))


def test_bessel_recurrence():
    nu = np.linspace(1, 60, 40)[:, None]
    x = np.linspace(0.5, 80, 60)[None, :]
    r = sf.bessel_j(nu - 1, x) + sf.bessel_j(nu + 1, x) - 2 * nu / x * sf.bessel_j(nu, x)
    assert np.max(np.abs(r)) <= 1e-9


@pytest.mark.parametrize("nu,x", [(-1.0, 1.0), (1.0, -2.0)])
def test_bessel_domain(nu, x):
    with pytest.raises(ValueError):
        sf.bessel_j(nu, x)


def test_bessel_order_derivative():
    for nu, x in ((2.0, 2.0), (5.0, 3.3), (0.5, 10.0)):
        ref = float(mp.diff(lambda v: mp.besselj(v, x), nu))
        assert sf.bessel_j_dorder(nu, x) == pytest.approx(ref, abs=1e-9)


def test_integer_bessel_negative_order():
    for n in range(1, 6):
        assert sf.bessel_j_int(-n, 1.7) == pytest.approx((-1) ** n * sf.bessel_j(n, 1.7), abs=1e-16)


def test_modified_bessel_examples():
    assert sf.modified_bessel_coeff(0, 0.0) == 1.0
    assert sf.modified_bessel_coeff(-3, 1.7) == sf.modified_bessel_coeff(3, 1.7)
    for k in range(6):
        for s in (0.3, 1.0, 2.5):
            assert sf.modified_bessel_coeff(k, s) == pytest.approx(sf.modified_bessel_coeff_series(k, s), rel=1e-13)


def test_modified_bessel_normalization():
    s = 1.0
    k = np.arange(-60, 61)
    total = np.sum(sf.modified_bessel_coeff(k, s) ** 2)
    assert abs(total - sf.modified_bessel_coeff(0, 2 * s)) <= 1e-10


@given(st.integers(-30, 30), st.floats(0, 20))
def test_modified_bessel_symmetric_positive(k, s):
    a, b = sf.modified_bessel_coeff(k, s), sf.modified_bessel_coeff(-k, s)
    assert a == b
    assert a >= 0


def _moment_oracle(j, t):
    with mp.workdps(30):
        return float(mp.quad(lambda x: x**j * mp.exp(-x * x / 2), [-mp.inf, 0, t]) / mp.sqrt(2 * mp.pi))


def test_truncated_gaussian_moment_examples():
    assert sf.truncated_gaussian_moment(0, 40.0) == pytest.approx(1.0, abs=1e-15)
    assert sf.truncated_gaussian_moment(1, 0.0) == pytest.approx(-1 / math.sqrt(2 * math.pi), rel=1e-15)
    for t in (-3.0, 0.0, 3.0):
        ref = _moment_oracle(2, t)
        assert abs(sf.truncated_gaussian_moment(2, t) - ref) <= 1e-12


@given(st.integers(0, 12), st.floats(-6, 6))
def test_truncated_moments_match_quadrature(j, t):
    ref = _moment_oracle(j, t)
    assert sf.truncated_gaussian_moment(j, t) == pytest.approx(ref, rel=1e-8, abs=1e-11)


def test_truncated_moment_rejects_negative_order():
    with pytest.raises(ValueError):
        sf.truncated_gaussian_moment(-1, 0.0)
