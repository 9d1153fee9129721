import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from maxindep import fredholm as fr
from maxindep.painleve import tw2_cdf_classical
from maxindep.schur import discrete_bessel_kernel
from maxindep.specfun import airy_ai_value, modified_bessel_coeff


def test_rank_one_matrix_is_outer_product():
    g = fr.gauss_legendre(0.0, 3.0, 4, 8)
    f = lambda x: np.exp(-x) * np.cos(x)
    op = fr.discretize(lambda x, y: f(x) * f(y), g)
    v = np.sqrt(g.weights) * f(g.nodes)
    assert np.allclose(op.matrix, np.outer(v, v), rtol=0, atol=1e-16)


def test_airy_trace_against_quadrature():
    g = fr.gauss_legendre(0.0, 20.0, 5, 16)
    assert len(g) == 80
    op = fr.airy_operator(0.0, g)
    ref, _ = quad(lambda x: float(fr.airy_kernel(x, x)), 0, 20, epsabs=1e-13, epsrel=1e-13, limit=200)
    assert abs(fr.trace(op) - ref) <= 1e-8


def test_grid_refinement_40_to_80():
    a = fr.fredholm_det(fr.airy_operator(0.0, fr.gauss_legendre(0.0, 20.0, 2, 20)))
    b = fr.fredholm_det(fr.airy_operator(0.0, fr.gauss_legendre(0.0, 20.0, 2, 40)))
    assert abs(a - b) < 1e-9


@pytest.mark.parametrize("s", [-4.0, 0.0, 3.0])
def test_node_doubling_gauge(s):
    a = fr.fredholm_det(fr.airy_operator(s, fr.halfline_grid(s, 10, 16)))
    b = fr.fredholm_det(fr.airy_operator(s, fr.halfline_grid(s, 20, 16)))
    assert abs(a - b) <= 1e-10


def test_zero_operator():
    g = fr.gauss_legendre(0.0, 1.0, 2, 8)
    op = fr.discretize(lambda x, y: 0 * x * y, g)
    assert fr.fredholm_det(op) == 1.0


def test_far_right_tail():
    F = fr.fredholm_det(fr.airy_operator(8.0))
    # 1 - det(I - K) <= tr K = int_8^inf (x - 8) Ai(x)^2 dx
    tr, _ = quad(lambda x: (x - 8.0) * airy_ai_value(x) ** 2, 8, 40, epsabs=1e-18)
    assert 1 - 1e-6 < F < 1
    assert 1 - F <= tr + 160 * 2.3e-16  # rounding floor of the 160-factor product


def test_matches_painleve_route():
    assert abs(fr.fredholm_det(fr.airy_operator(-2.0)) - tw2_cdf_classical(-2.0)) <= 1e-6


def test_spectral_radius_guard():
    g = fr.gauss_legendre(0.0, 1.0, 2, 8)
    op = fr.discretize(lambda x, y: 2.0 + 0 * x * y, g)
    with pytest.raises(fr.InvalidOperatorError):
        fr.fredholm_det(op)


def test_nonfinite_kernel_reports_nodes():
    g = fr.gauss_legendre(0.0, 1.0, 1, 4)
    with pytest.raises(fr.KernelEvaluationError, match=r"nodes \(\d+, \d+\)"):
        fr.discretize(lambda x, y: np.where((x > 0.5) & (y > 0.5), np.nan, 0.0), g)


def test_asymmetric_matrix_rejected():
    with pytest.raises(fr.InvalidOperatorError):
        fr.KernelOperator(np.array([[0.0, 1.0], [0.0, 0.0]]), None)


def test_rank_one_spectrum():
    g = fr.gauss_legendre(0.0, 4.0, 4, 16)
    f = lambda x: np.exp(-x)
    op = fr.discretize(lambda x, y: 0.5 * f(x) * f(y), g)
    pairs = fr.leading_spectrum(op, 2)
    assert pairs[0].value == pytest.approx(0.5 * (1 - math.exp(-8)) / 2, rel=1e-12)
    assert abs(pairs[1].value) < 1e-14
    # eigenfunction is f / ||f|| up to sign
    x = np.array([0.3, 1.7])
    psi = pairs[0](x)
    ref = f(x) / math.sqrt((1 - math.exp(-8)) / 2)
    assert np.allclose(np.abs(psi), ref, rtol=1e-10)


def test_lidskii_product():
    op = fr.airy_operator(0.0)
    lam = np.array([p.value for p in fr.leading_spectrum(op, 40)])
    assert abs(np.prod(1 - lam) - fr.fredholm_det(op)) <= 1e-8


def test_eigenfunction_interpolation_hits_nodes():
    op = fr.airy_operator(-1.0)
    p = fr.leading_spectrum(op, 3)[2]
    assert np.allclose(p(op.grid.nodes), p.node_values, rtol=1e-8, atol=1e-10)
    assert p.node_values @ (op.grid.weights * p.node_values) == pytest.approx(1.0, abs=1e-12)


def test_eigenvalues_decrease_in_s():
    lam = [np.array([p.value for p in fr.leading_spectrum(fr.airy_operator(s), 4)]) for s in (-2.0, 0.0, 2.0)]
    assert np.all(lam[0] > lam[1]) and np.all(lam[1] > lam[2])


def test_k_max_too_large():
    op = fr.airy_operator(0.0, fr.gauss_legendre(0.0, 1.0, 1, 4))
    with pytest.raises(ValueError):
        fr.leading_spectrum(op, 5)


@pytest.mark.parametrize("s", [-3.0, 0.0, 2.0])
def test_squared_hankel_spectrum_in_unit_interval(s):
    g = fr.halfline_grid(s)
    H = fr.hankel_operator(lambda u: airy_ai_value(u + s), g).matrix
    lam = np.linalg.eigvalsh(H @ H)
    assert lam.min() > -1e-13 and lam.max() < 1
    assert 0 < np.prod(1 - lam) <= 1
    assert abs(np.prod(1 - lam) - fr.fredholm_det(fr.airy_operator(s, g))) <= 1e-12


@pytest.mark.parametrize("s", [-3.0, 0.5])
def test_varying_interval_equivalence(s):
    on_halfline = fr.fredholm_det(fr.airy_operator(s))
    on_interval = fr.fredholm_det(fr.discretize(fr.airy_kernel, fr.gauss_legendre(s, s + 20.0, 10, 16)))
    assert abs(on_halfline - on_interval) <= 1e-9


def test_discrete_det_examples():
    for shift in (0, 3):
        assert fr.discrete_fredholm_det(lambda x, y: discrete_bessel_kernel(0.0, x, y), shift, 30).value == 1.0
    k = lambda x, y: discrete_bessel_kernel(1.0, x, y)
    assert abs(fr.discrete_fredholm_det(k, 0, 40).value - math.exp(-1)) <= 1e-14
    # lambda_1 <= 1 means a single column: sum_m e^{-1} / (m!)^2 = e^{-1} I_0(1) in the [z^0] convention
    col = math.exp(-1) * sum(1 / math.factorial(m) ** 2 for m in range(30))
    assert abs(fr.discrete_fredholm_det(k, 1, 40).value - col) <= 1e-14
    assert col == pytest.approx(math.exp(-1) * modified_bessel_coeff(0, 1.0), rel=1e-14)


def test_discrete_det_truncation_flag():
    k = lambda x, y: discrete_bessel_kernel(9.0, x, y)
    assert not fr.discrete_fredholm_det(k, 0, 3).truncation_ok
    assert fr.discrete_fredholm_det(k, 0, 60).truncation_ok


def test_json_dump_round_trip():
    op = fr.airy_operator(0.0, fr.gauss_legendre(0.0, 2.0, 1, 4))
    d = json.loads(op.to_json())
    assert np.array_equal(np.array(d["matrix"]), op.matrix)
    assert d["grid"]["domain"] == [0.0, 2.0]


@given(st.floats(-20, 20), st.floats(0.1, 30), st.integers(1, 12), st.integers(2, 24))
def test_quadrature_grid_invariants(a, length, panels, order):
    g = fr.gauss_legendre(a, a + length, panels, order)
    assert np.all(np.diff(g.nodes) > 0)
    assert np.all(g.weights > 0)
    assert g.integrate(np.ones(len(g))) == pytest.approx(length, rel=1e-12)
    assert g.integrate(g.nodes) == pytest.approx(((a + length) ** 2 - a**2) / 2, rel=1e-10, abs=1e-10)


@given(st.floats(-6, 6))
def test_airy_operator_symmetric(s):
    M = fr.airy_operator(s, fr.halfline_grid(s, 4, 8)).matrix
    assert np.max(np.abs(M - M.T)) <= 1e-13
