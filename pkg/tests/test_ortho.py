import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.polynomial import hermite_e as He
from scipy.special import gammainc, ndtr

from maxindep import ortho
from maxindep.laws import CoverageError, TabulatedLaw
from maxindep.sampler import EmpiricalCdf, Rng, ks_distance, ks_threshold, sample_cue_angles_batch, sample_gamma_maxima

phi = lambda x: np.exp(-x * x / 2) / math.sqrt(2 * math.pi)


@pytest.mark.parametrize("t", [-3.0, 0.0, 1.5])
def test_degree_zero(t):
    op = ortho.truncated_hermite(0, t)
    assert np.array_equal(op.coefficients(), [1.0])
    assert op.norm2 == pytest.approx(ndtr(t), rel=1e-13)


@pytest.mark.parametrize("x", [-4.0, -1.0, 0.0, 2.0])
def test_degree_one_diagonal(x):
    op = ortho.truncated_hermite(1, x)
    assert float(op(x)) == pytest.approx(x + phi(x) / ndtr(x), rel=1e-12)


@pytest.mark.parametrize("k", [1, 4, 9, 15])
def test_untruncated_limit_is_hermite(k):
    op = ortho.truncated_hermite(k, 40.0)
    ref = He.herme2poly([0] * k + [1])
    assert np.allclose(op.coefficients(), ref, rtol=1e-10, atol=1e-9 * math.factorial(k) ** 0.5)
    assert op.norm2 == pytest.approx(math.factorial(k), rel=1e-10)


def test_recurrence_positivity_and_gram_residual():
    for k, t in ((5, -2.0), (20, 1.0), (40, 6.0)):
        op = ortho.truncated_hermite(k, t)
        assert np.all(op.b[1:] > 0)
        assert op.residual <= 1e-10


def test_extended_precision_switch():
    op = ortho.truncated_hermite(80, 30.0)
    assert op.residual <= 1e-8
    assert op.log_norm2() == pytest.approx(math.lgamma(81), rel=1e-10)


def test_precision_mode_env(monkeypatch):
    monkeypatch.setenv("MAXINDEP_PRECISION", "extended")
    assert ortho.precision_mode() == "extended"
    monkeypatch.setenv("MAXINDEP_PRECISION", "quad")
    with pytest.raises(ValueError):
        ortho.precision_mode()


def test_w0_is_gaussian():
    x = np.linspace(-4, 4, 33)
    assert np.max(np.abs(ortho.w_cdf(0, x) - ndtr(x))) <= 1e-12
    assert np.max(np.abs(ortho.w_density(0, x) - phi(x))) <= 1e-12
    law = ortho.law_w(0)
    assert np.max(np.abs(law.cdf_values - ndtr(law.grid))) <= 1e-12
    assert np.max(np.abs(law.cdf(x) - ndtr(x))) <= 1e-6  # monotone-cubic interpolation between nodes


@pytest.mark.parametrize("k", range(11))
def test_w_normalization(k):
    law = ortho.law_w(k)
    left, right = law.coverage()
    assert left < 1e-6 and right < 1e-6
    from scipy.integrate import quad
    mass, _ = quad(lambda x: ortho.w_density(k, x), law.grid[0], law.grid[-1], limit=200, epsabs=1e-12)
    assert abs(mass - 1) <= 1e-6


def test_min_max_duality_holds_only_at_degree_zero():
    # k! - ||H~_k||^2 = ||H_k||^2 is exact for k = 0 and fails for k >= 1 (documented discrepancy);
    # the identity that does hold is the reflection W~_k = -W_k
    assert ortho.min_max_duality_residual(0, 0.7) <= 1e-12
    assert ortho.min_max_duality_residual(2, 0.0) > 1e-2
    for k in range(6):
        for t in (-1.0, 0.0, 1.3):
            assert ortho.reflection_residual(k, t) <= 1e-8


@pytest.mark.parametrize("k", range(6))
def test_norm_telescoping(k):
    for s in (-2.0, 0.0, 2.0):
        assert ortho.norm_derivative_residual(k, s) <= 1e-6


def test_gue_extreme_small_cases():
    for s in (-1.0, 0.0, 0.8):
        assert ortho.gue_extreme_cdf(1, s) == pytest.approx(ndtr(s), abs=1e-14)
    for s in (-0.5, 0.5, 2.0):
        assert abs(ortho.gue_extreme_cdf(2, s) - ortho.gue2_brute_force(s)) <= 1e-8
    with pytest.raises(ValueError):
        ortho.gue_extreme_cdf(0, 0.0)


@given(st.integers(1, 6), st.lists(st.floats(-8, 8), min_size=2, max_size=6, unique=True))
def test_product_cdf_is_monotone(N, xs):
    x = np.sort(xs)
    F = [ortho.gue_extreme_cdf(N, v) for v in x]
    assert np.all(np.diff(F) >= -1e-14)
    assert all(0 <= f <= 1 for f in F)


def test_gue_product_limits():
    for N in (3, 8):
        assert ortho.gue_extreme_cdf(N, -15.0) < 1e-12
        assert ortho.gue_extreme_cdf(N, 15.0) > 1 - 1e-12
        assert ortho.gue_extreme_cdf(N, 15.0, "min") > 1 - 1e-12


def test_line_law_gaussian_specialization():
    g = np.linspace(-6, 6, 49)
    law = ortho.parametric_line_law(ortho.gaussian_measure(), 3, g)
    assert np.max(np.abs(law.cdf_values - ortho.w_cdf(3, g))) <= 1e-10
    assert np.max(np.abs(law.pdf_values - ortho.w_density(3, g))) <= 1e-10


def test_line_law_uniform_degree_zero():
    m = ortho.LineMeasure(lambda x: 0.5 * np.ones_like(x), -1.0, 1.0, "uniform")
    law = ortho.parametric_line_law(m, 0, np.linspace(-1, 1, 41))
    assert np.max(np.abs(law.cdf_values - (law.grid + 1) / 2)) <= 1e-12


def test_line_law_semicircle_normalized():
    m = ortho.LineMeasure(lambda x: 2 / math.pi * np.sqrt(np.clip(1 - x * x, 0, None)), -1.0, 1.0, "semicircle")
    law = ortho.parametric_line_law(m, 1, tol=1e-6)
    assert abs(law.cdf_values[-1] - 1) <= 1e-6
    assert np.all(law.pdf_values >= 0)


def test_line_law_rejects_signed_weight():
    m = ortho.LineMeasure(lambda x: x, -1.0, 1.0, "odd")
    with pytest.raises(ortho.MeasureError):
        ortho.parametric_line_law(m, 1)


def test_cue_degree_zero_is_uniform():
    law = ortho.partial_arc_circle_law(ortho.cue_weight, 0)
    assert np.max(np.abs(law.cdf_values - law.grid / (2 * math.pi))) <= 1e-10


@pytest.mark.parametrize("k", [1, 3, 8])
def test_arc_law_normalized(k):
    law = ortho.partial_arc_circle_law(ortho.cue_weight, k)
    assert abs(law.cdf_values[-1] - 1) <= 1e-5


def test_arc_opuc_orthogonality_and_monic():
    op = ortho.partial_arc_opuc(lambda p: 1 + 0.5 * np.cos(p), 6, 4.0)
    assert op.residual <= 1e-8
    # leading coefficient 1: P_k(z) / z^k -> 1 as |z| grows
    z = 1e5
    assert abs(op.monic_at(z) / z**6 - 1) < 1e-3


def test_arc_degree_limit():
    with pytest.raises(ValueError):
        ortho.partial_arc_circle_law(ortho.cue_weight, 31)


def test_cue3_max_angle_monte_carlo():
    g = np.linspace(0, 2 * math.pi, 241)
    law = TabulatedLaw(g, [ortho.circle_max_cdf(3, v) for v in g])
    M = 100_000
    x = sample_cue_angles_batch(3, M, Rng(11))[:, -1]
    assert ks_distance(EmpiricalCdf(x), law.cdf) <= ks_threshold(M)


def test_ginibre_modulus():
    r = np.linspace(0, 6, 25)
    assert np.allclose([ortho.ginibre_modulus_cdf(1, v) for v in r], 1 - np.exp(-r * r), atol=1e-15)
    F = [ortho.ginibre_modulus_cdf(6, v) for v in r]
    assert F[0] == 0 and np.all(np.diff(F) >= 0) and F[-1] > 1 - 1e-3
    assert ortho.ginibre_modulus_cdf(6, 20.0) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        ortho.ginibre_modulus_cdf(0, 1.0)


def test_ginibre_monte_carlo():
    M, N = 100_000, 6
    x = sample_gamma_maxima(N, M, Rng(5))
    cdf = lambda r: np.prod(gammainc(np.arange(1, N + 1)[:, None], np.atleast_1d(r)[None, :] ** 2), axis=0)
    assert ks_distance(EmpiricalCdf(x), cdf) <= ks_threshold(M)


def test_law_w_coverage_error():
    with pytest.raises(CoverageError):
        ortho.law_w(3, grid=np.linspace(-1, 1, 21))


def test_rescaled_density_shift_is_exact():
    assert ortho.effective_shift(27, 0.0) == 0.0
    # floor(n - c n^{1/3}) gives a shift at least c
    for n in (20, 40, 80):
        assert ortho.effective_shift(n, 1.0) >= 1.0
