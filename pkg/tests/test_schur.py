import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from maxindep import schur
from maxindep.fredholm import discrete_fredholm_det
from maxindep.specfun import bessel_j_int, modified_bessel_coeff


@pytest.fixture(scope="module")
def st1():
    return schur.opuc_from_weight(schur.Plancherel(1.0))


# ---------------------------------------------------------------- OPUC

def test_lebesgue_weight_trivial():
    s = schur.opuc_from_weight(schur.Plancherel(0.0), 12)
    assert np.all(s.alpha == 0)
    assert np.allclose(s.norms, 1.0, atol=0)


def test_alpha0_gram_schmidt(st1):
    # degree-1 Gram-Schmidt: Phi_1 = z - c_1/c_0, alpha_0 = -conj(Phi_1(0))
    c0, c1 = modified_bessel_coeff(0, 1.0), modified_bessel_coeff(1, 1.0)
    assert abs(st1.alpha[0] - c1 / c0) <= 1e-14


def test_szego_recursion_residual():
    s = schur.opuc_from_weight(schur.Plancherel(1.0), 32)
    assert s.szego_residual(30) <= 1e-10


def test_state_invariants(st1):
    assert np.all(np.abs(st1.alpha) < 1)
    assert st1.norm_recursion_residual() <= 1e-10
    assert np.all(np.diff(st1.norms) <= 1e-15)
    assert st1.szego_tail() <= 1e-12


def test_plancherel_alphas_real():
    s = schur.opuc_from_weight(schur.Plancherel(4.0))
    assert s.alpha.dtype.kind == "f"


@given(st.lists(st.tuples(st.floats(-0.8, 0.8), st.floats(-0.8, 0.8)), min_size=1, max_size=3))
def test_random_alphabets(pairs):
    a = [complex(x, y) for x, y in pairs]
    if max(abs(z) for z in a) >= 0.9:
        a = [0.9 * z / max(abs(z) for z in a) for z in a]
    s = schur.opuc_from_weight(schur.SchurWeight(tuple(a)), 12)
    assert np.all(np.abs(s.alpha) < 1)
    assert s.norm_recursion_residual() <= 1e-10


def test_alphabet_outside_disk():
    with pytest.raises(schur.DivergenceError):
        schur.SchurWeight((1.0,))
    with pytest.raises(schur.DivergenceError):
        schur.SchurWeight((0.3, 1.2j))


# ---------------------------------------------------------------- q_k and the PoPl law

def test_qk_at_zero():
    assert all(schur.plancherel_qk(0.0, k) == 1.0 for k in range(6))


def test_pmf_total_mass(st1):
    assert abs(np.sum(schur.popl_pmf(1.0, st1)) - 1.0) <= 1e-10


def test_q0_is_inverse_normalization(st1):
    assert abs(st1.q(0) - 1.0 / modified_bessel_coeff(0, 1.0)) <= 1e-10


def test_q_two_routes(st1):
    for k in range(8):
        assert abs(st1.q(k) - st1.q_from_norm(k)) <= 1e-12


def test_qk_nondecreasing_to_one(st1):
    q = np.array([st1.q(k) for k in range(st1.n + 1)])
    assert np.all(np.diff(q) >= 0)
    assert q[-1] == 1.0


def test_law_z_popl(st1):
    law = schur.law_z_popl(1.0, st1)
    assert np.all(np.diff(law.cdf_values) >= 0)
    assert abs(law.cdf_values[-1] - 1.0) <= 1e-12


def test_popl_empty_partition():
    assert abs(schur.popl_max_cdf(1.0, 0) - math.exp(-1.0)) <= 1e-12


@pytest.mark.parametrize("xi", [0.5, 1.0, 4.0])
def test_popl_vs_toeplitz_and_fredholm(xi):
    w = schur.Plancherel(xi)
    s = schur.opuc_from_weight(w)
    for N in range(11):
        p = schur.popl_max_cdf(xi, N, s)
        assert abs(p - schur.toeplitz_max_cdf(w, N)) <= 1e-10
        assert abs(p - schur.popl_fredholm_cdf(xi, N)) <= 1e-8


def test_popl_n1_closed_form():
    # lambda_1 <= 1: only one-column partitions, P = e^{-xi} sum xi^n / (n!)^2
    xi = 1.0
    ref = math.exp(-xi) * sum(xi**n / math.factorial(n) ** 2 for n in range(30))
    assert abs(schur.popl_max_cdf(xi, 1) - ref) <= 1e-12


# ---------------------------------------------------------------- discrete Bessel kernel

def test_kernel_symmetric():
    x = np.arange(8)
    K = schur.discrete_bessel_kernel(1.3, x[:, None], x[None, :])
    assert np.max(np.abs(K - K.T)) <= 1e-12
    C = schur.discrete_bessel_kernel(1.3, x[:, None], x[None, :], "christoffel_darboux")
    assert np.max(np.abs(C - C.T)) <= 1e-12


def test_kernel_cross_forms():
    h = schur.discrete_bessel_kernel(1.0, 0, 1)
    assert abs(h - schur.discrete_bessel_kernel(1.0, 0, 1, "integral")) <= 1e-8
    assert abs(schur.discrete_bessel_kernel(1.0, 2, 2) -
               schur.discrete_bessel_kernel(1.0, 2, 2, "christoffel_darboux")) <= 1e-6


def test_kernel_forms_pairwise():
    x = np.array([0, 1, 3, -1])
    y = np.array([2, 1, 0, 4])
    h = schur.discrete_bessel_kernel(2.0, x, y)
    assert np.max(np.abs(h - schur.discrete_bessel_kernel(2.0, x, y, "christoffel_darboux"))) <= 1e-8
    assert np.max(np.abs(h - schur.discrete_bessel_kernel(2.0, x, y, "integral"))) <= 1e-8


def test_kernel_direct_sum():
    z = 2.0
    ref = sum(bessel_j_int(1 + k, z) * bessel_j_int(2 + k, z) for k in range(1, 60))
    assert abs(schur.discrete_bessel_kernel(1.0, 1, 2) - ref) <= 1e-15


def test_kernel_bad_input():
    with pytest.raises(ValueError):
        schur.discrete_bessel_kernel(-1.0, 0, 0)
    with pytest.raises(ValueError):
        schur.discrete_bessel_kernel(1.0, 0, 0, "bogus")
    assert schur.discrete_bessel_kernel(0.0, 0, 0) == 0.0


def test_fredholm_det_of_kernel(st1):
    res = discrete_fredholm_det(lambda X, Y: schur.discrete_bessel_kernel(1.0, X, Y), 3, 40)
    assert abs(res.value - schur.popl_max_cdf(1.0, 3, st1)) <= 1e-10


# ---------------------------------------------------------------- resolvent forms

def test_resolvent_forms(st1):
    vals = [schur.resolvent_qs(1.0, 3, f) for f in ("one_over", "one_minus", "diagonal")]
    vals += [st1.q(3), st1.q_from_norm(3)]
    assert max(vals) - min(vals) <= 1e-8


@pytest.mark.parametrize("s", [0, 1, 5])
def test_resolvent_forms_other_s(s):
    st4 = schur.opuc_from_weight(schur.Plancherel(4.0))
    for f in ("one_over", "one_minus", "diagonal"):
        assert abs(schur.resolvent_qs(4.0, s, f) - st4.q(s)) <= 1e-8


def test_bessel_norm_over_z_and_n():
    # Neumann's identity gives 1 over all of Z; the half-line sum is strictly smaller
    assert abs(schur.bessel_norm2(1.0, 3, "Z") - 1.0) <= 1e-10
    assert schur.bessel_norm2(1.0, 3, "N") < 0.01
    with pytest.raises(ValueError):
        schur.bessel_norm2(1.0, 3, "R")


def test_qs_tail_to_one():
    assert abs(schur.resolvent_qs(1.0, 25) - 1.0) <= 1e-15


def test_resolvent_unknown_form():
    with pytest.raises(ValueError):
        schur.resolvent_qs(1.0, 3, "bogus")


# ---------------------------------------------------------------- edge randomisation

def test_edge_randomisation(st1):
    L = schur.edge_randomisation_laws(1.0, 2)
    assert L[0] < 1.0
    assert np.prod(L) < L[0]
    assert abs(np.prod(L) - schur.popl_max_cdf(1.0, 2, st1)) <= 1e-7


def test_edge_factors_monotone_in_n():
    L = np.array([schur.edge_randomisation_laws(1.0, N, 5) for N in range(6)])
    assert np.all(np.diff(L, axis=0) >= 0)
    assert np.all((L > 0) & (L <= 1))


# ---------------------------------------------------------------- Schur measure

def test_single_letter_mgf():
    w = schur.SchurWeight((0.5,))
    assert abs(schur.total_sum_mgf(w, 0.0) - 0.75) <= 1e-15
    assert abs(schur.total_sum_mgf(w, 1.0) - 1.0) <= 1e-15


def test_total_sum_pmf_matches_mgf():
    w = schur.SchurWeight((0.4, 0.3))
    p = schur.total_sum_pmf(w, 200)
    assert abs(np.sum(p) - 1.0) <= 1e-12
    t = 0.7
    assert abs(np.sum(p * t ** np.arange(201)) - schur.total_sum_mgf(w, t)) <= 1e-12


def test_schur_qk_nondecreasing():
    w = schur.SchurWeight((0.4, 0.2 + 0.3j, -0.5))
    s = schur.opuc_from_weight(w)
    q = np.array([s.q(k) for k in range(s.n + 1)])
    assert np.all(np.diff(q) >= -1e-15)
    assert abs(q[-1] - 1.0) <= 1e-12


def test_schur_enumeration_single_letter():
    w = schur.SchurWeight((0.4,))
    for N in range(4):
        below, missing = schur.schur_enumeration_cdf(w, N)
        assert missing <= 1e-9
        assert abs(schur.schur_max_cdf(w, N) - below) <= 1e-6


def test_schur_enumeration_two_letters():
    w = schur.SchurWeight((0.4, 0.3))
    for N in range(4):
        below, missing = schur.schur_enumeration_cdf(w, N, 14)
        assert abs(schur.schur_max_cdf(w, N) - below) <= missing + 1e-10


def test_schur_toeplitz_route():
    w = schur.SchurWeight((0.5, -0.2))
    for N in range(1, 6):
        assert abs(schur.schur_max_cdf(w, N) - schur.toeplitz_max_cdf(w, N)) <= 1e-10


def test_schur_polynomial_single_variable():
    # one variable: s_lambda(a) = a^{|lambda|} for one-row lambda, 0 otherwise
    h = schur.complete_homogeneous([0.4], 6)
    assert abs(schur.schur_polynomial(schur.Partition((3,)), h) - 0.4**3) <= 1e-15
    assert abs(schur.schur_polynomial(schur.Partition((2, 1)), h)) <= 1e-15


# ---------------------------------------------------------------- partitions

def test_partition_counts():
    assert [sum(1 for _ in schur.partitions(n)) for n in range(8)] == [1, 1, 2, 3, 5, 7, 11, 15]


@given(st.lists(st.integers(0, 20), max_size=8))
def test_partition_invariants(parts):
    p = schur.Partition(tuple(sorted(parts, reverse=True)))
    assert p.size == sum(parts)
    assert all(a >= b for a, b in zip(p.parts, p.parts[1:]))
    assert p.first == (max(parts) if any(parts) else 0)


def test_partition_rejects_increasing():
    with pytest.raises(ValueError):
        schur.Partition((1, 2))


# ---------------------------------------------------------------- discrete Fuchs

def test_discrete_fuchs():
    rows = schur.discrete_fuchs_check(1.0, range(6))
    assert any(r.k == 1 for r in rows)
    assert max(r.varying for r in rows if r.k == 1) <= 1e-6
    assert max(r.varying for r in rows) <= 1e-6
    assert max(r.fixed for r in rows) <= 1e-6
    assert max(r.rank_one for r in rows) <= 1e-12
