from __future__ import annotations

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate as sp_integrate

from tripartite import quadrature
from tripartite.errors import ContractError, QuadratureError


def test_polynomial_is_exact():
    assert quadrature.integrate(lambda x: x ** 3, 0.0, 1.0).value == pytest.approx(0.25, abs=1e-14)


def test_sine_over_half_period():
    res = quadrature.integrate(math.sin, 0.0, math.pi, tol=1e-10)
    assert res.value == pytest.approx(2.0, rel=1e-12)
    assert res.error_estimate >= 0 and res.evaluations > 0


def test_rational_against_antiderivative():
    # x^3/3 - x^2/2 + x - ln(x+1) between 0 and 2
    exact = 8.0 / 3.0 - 2.0 + 2.0 - math.log(3.0)
    assert quadrature.integrate(lambda x: x ** 3 / (x + 1), 0.0, 2.0).value == pytest.approx(exact, rel=1e-12)
    assert exact == pytest.approx(1.568055, abs=1e-6)


def test_pv_odd_symmetry_vanishes():
    assert quadrature.pv_integrate(lambda x: 1.0, 0.0, -1.0, 1.0).value == pytest.approx(0.0, abs=1e-14)
    assert quadrature.pv_integrate(lambda x: 1.0, 1.0, 0.0, 2.0).value == pytest.approx(0.0, abs=1e-14)


def test_pv_against_antiderivative():
    # x + ln|x - 1| between 0 and 2
    assert quadrature.pv_integrate(lambda x: x, 1.0, 0.0, 2.0).value == pytest.approx(2.0, rel=1e-12)


def test_pv_matches_cauchy_weight_quadrature():
    g = lambda x: math.exp(-x) * (1 + x * x)
    ref, _ = sp_integrate.quad(g, 0.0, 3.0, weight="cauchy", wvar=1.3, epsabs=1e-13)
    assert quadrature.pv_integrate(g, 1.3, 0.0, 3.0).value == pytest.approx(ref, rel=1e-10)


def test_pv_rejects_singularity_outside():
    with pytest.raises(ContractError):
        quadrature.pv_integrate(lambda x: 1.0, 2.0, 0.0, 1.0)
    with pytest.raises(ContractError):
        quadrature.integrate(lambda x: 1.0, 1.0, 0.0)


def test_pv_rejects_non_finite_numerator():
    with pytest.raises(QuadratureError):
        quadrature.pv_integrate(lambda x: math.inf, 0.5, 0.0, 1.0)


def test_non_convergence_raises_with_partial_result():
    with pytest.raises(QuadratureError) as info:
        quadrature.integrate(lambda x: 1.0 / x, 0.0, 1.0)
    assert info.value.partial is not None


def test_determinism():
    g = lambda x: x ** 2 / (x + 2)
    a = quadrature.pv_integrate(g, 0.7, 0.0, 2.0)
    b = quadrature.pv_integrate(g, 0.7, 0.0, 2.0)
    assert a == b


def test_result_arithmetic():
    r = quadrature.QuadratureResult(1.0, 0.1, 3) + quadrature.QuadratureResult(2.0, 0.2, 4)
    assert (r.value, r.evaluations) == (3.0, 7)
    assert r.scaled(-2.0).error_estimate == pytest.approx(0.6)


coef = st.floats(-3, 3, allow_nan=False)


@given(a=coef, b=coef, s=st.floats(0.2, 1.8))
def test_pv_linearity(a, b, s):
    f = lambda x: math.cos(x)
    g = lambda x: x ** 3 + 1
    tol = 1e-10
    lhs = quadrature.pv_integrate(lambda x: a * f(x) + b * g(x), s, 0.0, 2.0, tol=tol).value
    rhs = a * quadrature.pv_integrate(f, s, 0.0, 2.0, tol=tol).value \
        + b * quadrature.pv_integrate(g, s, 0.0, 2.0, tol=tol).value
    assert lhs == pytest.approx(rhs, abs=10 * tol * (1 + abs(lhs)))


@given(s=st.floats(0.3, 1.7), frac=st.floats(0.05, 0.95))
def test_pv_splitting_consistency(s, frac):
    g = lambda x: math.exp(x) / (1 + x)
    tol = 1e-10
    delta = frac * min(s, 2.0 - s)
    whole = quadrature.pv_integrate(g, s, 0.0, 2.0, tol=tol).value
    left = quadrature.integrate(lambda x: g(x) / (x - s), 0.0, s - delta, tol=tol).value
    middle = quadrature.pv_integrate(g, s, s - delta, s + delta, tol=tol).value
    right = quadrature.integrate(lambda x: g(x) / (x - s), s + delta, 2.0, tol=tol).value
    assert whole == pytest.approx(left + middle + right, abs=10 * tol * (1 + abs(whole)))
