import math

import pytest
from hypothesis import given, settings, strategies as st

from modules.appell import (
    AppellSystem, a_qderiv, a_value, appell_poly, appell_weight_coeffs, lemma_constants,
    positivity_report,
)
from modules.errors import InvalidArgument, QOverflow
from modules.q_kernel import q_derivative_numeric, q_exp_lower, q_factorial

coefficient_lists = st.lists(st.floats(min_value=0.0, max_value=2.0), min_size=1, max_size=5).filter(
    lambda a: sum(a) > 1e-3
)


@pytest.mark.parametrize("coeffs", [(), (1.0, -1.0), (float("nan"),), (1.0, float("inf"))])
def test_invalid_systems_rejected(coeffs):
    with pytest.raises(InvalidArgument):
        AppellSystem(coeffs)


def test_q_outside_unit_interval_rejected():
    with pytest.raises(InvalidArgument):
        AppellSystem((1.0,), 1.5)


def test_coefficients_become_float_tuple():
    system = AppellSystem.from_coeffs([1, 2, 3], 0.5)
    assert system.coeffs == (1.0, 2.0, 3.0)
    assert system.degree == 2
    assert system.with_q(0.25) == AppellSystem((1.0, 2.0, 3.0), 0.25)


# ============================================================================
# POLYNOMIALS
# ============================================================================

@pytest.mark.parametrize("coeffs, q, k, x, expected", [
    ((1.0,), 0.5, 3, 2.0, 8.0),  # P_k = x^k for A = 1
    ((1.0,), 0.5, 0, 2.0, 1.0),
    ((1.0, 1.0), 0.5, 2, 3.0, 13.5),  # x^2 + [2]_q x
    ((1.0, 1.0), 1.0, 3, 2.0, 20.0),  # classical: x^3 + 3 x^2
    ((2.0, 0.0, 1.0), 1.0, 2, 1.0, 4.0),  # 2 x^2 + 2
])
def test_appell_poly_examples(coeffs, q, k, x, expected):
    assert appell_poly(AppellSystem(coeffs, q), k, x) == pytest.approx(expected, rel=1e-14)


def test_generating_relation():
    # sum_k P_k(q; x) u^k / [k]_q! = A(u) e_q^(u x)
    system = AppellSystem((1.0, 0.5), 0.5)
    x, u = 0.4, 0.3
    series = math.fsum(appell_poly(system, k, x) * u ** k / q_factorial(k, 0.5) for k in range(40))
    assert series == pytest.approx(a_value(system, u) * q_exp_lower(u * x, 0.5), rel=1e-12)


def test_appell_poly_overflow():
    with pytest.raises(QOverflow):
        appell_poly(AppellSystem((1.0,)), 400, 1000.0)


def test_appell_poly_negative_index():
    with pytest.raises(InvalidArgument):
        appell_poly(AppellSystem((1.0,)), -1, 0.5)


@settings(max_examples=200, deadline=None)
@given(k=st.integers(0, 50), x=st.floats(min_value=-3.0, max_value=3.0),
       q=st.floats(min_value=0.05, max_value=1.0))
def test_trivial_symbol_gives_monomials(k, x, q):
    assert appell_poly(AppellSystem((1.0,), q), k, x) == pytest.approx(x ** k, rel=1e-12, abs=0.0)


@pytest.mark.parametrize("k", range(11))
@pytest.mark.parametrize("x", [0.0, 0.5, 2.0])
def test_exponential_symbol_at_q_one(k, x):
    # A(t) = 1 + t: P_k(x) = x^k + k x^(k-1)
    expected = x ** k + (k * x ** (k - 1) if k else 0.0)
    assert appell_poly(AppellSystem((1.0, 1.0), 1.0), k, x) == pytest.approx(expected, rel=1e-14)


# ============================================================================
# SYMBOL & DERIVATIVES
# ============================================================================

def test_a_value_and_q_derivatives():
    system = AppellSystem((1.0, 2.0, 3.0), 0.5)
    assert a_value(system, 1.0) == 6.0
    # D_q A(u) = 2 + 3 [2]_q u, D_q^2 A = 3 [2]_q [1]_q
    assert a_qderiv(system, 1.0) == pytest.approx(6.5, rel=1e-15)
    assert a_qderiv(system, 1.0, order=2) == pytest.approx(4.5, rel=1e-15)
    assert a_qderiv(AppellSystem((1.0,), 0.5), 1.0) == 0.0


def test_a_qderiv_matches_definition():
    system = AppellSystem((1.0, 2.0, 3.0), 0.5)
    numeric = q_derivative_numeric(lambda u: a_value(system, u), 0.7, 0.5)
    assert a_qderiv(system, 0.7) == pytest.approx(numeric, rel=1e-12)


def test_a_qderiv_order_checked():
    with pytest.raises(InvalidArgument):
        a_qderiv(AppellSystem((1.0, 1.0)), 1.0, order=3)


@settings(max_examples=100, deadline=None)
@given(coeffs=coefficient_lists, q=st.floats(min_value=0.05, max_value=0.99))
def test_q_derivative_at_one_links_a1_and_aq(coeffs, q):
    # (1 - q) D_q A(1) = A(1) - A(q)
    c = lemma_constants(AppellSystem(tuple(coeffs), q))
    assert (1.0 - q) * c.dA1 == pytest.approx(c.a1 - c.aq, rel=1e-11, abs=1e-13)


def test_lemma_constants():
    c = lemma_constants(AppellSystem((1.0, 1.0), 0.5))
    assert c == pytest.approx((2.0, 1.5, 1.0, 1.0, 0.0))


def test_positivity_report():
    assert positivity_report(AppellSystem((1.0, 0.5))).positive
    mixed = positivity_report(AppellSystem((1.0, -0.5)))
    assert not mixed.all_nonneg and mixed.a1_positive and not mixed.positive
    negative = positivity_report(AppellSystem((-1.0, -1.0)))
    assert not negative.a1_positive


def test_appell_weight_coeffs_match_polynomials():
    sys = AppellSystem((2.0, 1.0, 0.5), 0.6)
    x = 1.5
    terms = [x ** m / q_factorial(m, 0.6) for m in range(12)]
    coeffs = appell_weight_coeffs(sys, terms)
    assert coeffs.size == 14
    for k in range(12):
        assert coeffs[k] == pytest.approx(appell_poly(sys, k, x) / q_factorial(k, 0.6), rel=1e-12)
