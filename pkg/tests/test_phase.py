"""Phase increments, Clenshaw-Curtis quadrature, reduced exponentials."""

import cmath
import math

import numpy as np
import pytest
import scipy.integrate as si
from hypothesis import given, settings, strategies as st

from wkbmarch import (PhaseProvider, WaveState, WKBInadmissibleError,
                      clenshaw_curtis, make_airy_problem, make_pcf_problem,
                      make_polynomial_problem, phase_increment,
                      reduced_exponential)

# Closed-form pieces for the linear benchmark, written out independently of
# the package internals.
AIRY_S_01_TO_1 = (2.0 / 3.0) * (1.0 - 0.1 ** 1.5) - (5.0 / 48.0) * (1.0 - 0.1 ** -1.5)


def airy_integrand(y, eps=1.0):
    return math.sqrt(y) - eps * eps * (-(5.0 / 32.0) * y ** -2.5)


# ---------------------------------------------------------------------------
# Clenshaw-Curtis
# ---------------------------------------------------------------------------

def test_cc_linear_exact():
    assert clenshaw_curtis(lambda x: x, 0.0, 1.0, 15) == pytest.approx(0.5, abs=1e-15)


def test_cc_sine():
    val = clenshaw_curtis(math.sin, 0.0, math.pi, 15)
    assert val == pytest.approx(2.0, abs=1e-13)


def test_cc_airy_phase_integrand():
    exact = (2.0 / 3.0) * (2.0 ** 1.5 - 1.0) - (5.0 / 48.0) * (2.0 ** -1.5 - 1.0)
    val = clenshaw_curtis(airy_integrand, 1.0, 2.0, 15)
    assert val == pytest.approx(exact, rel=1e-12)


@settings(deadline=None, derandomize=True, max_examples=40)
@given(st.integers(min_value=0, max_value=13),
       st.floats(min_value=-2.0, max_value=2.0),
       st.floats(min_value=0.1, max_value=3.0))
def test_cc_polynomial_exactness(degree, a, width):
    # Exact for degree <= nodes - 1 (14 here).
    rng = np.random.default_rng(degree + 17)
    coeffs = rng.uniform(-1.0, 1.0, degree + 1)
    poly = np.polynomial.Polynomial(coeffs)
    anti = poly.integ()
    b = a + width
    val = clenshaw_curtis(poly, a, b, 15)
    scale = max(1.0, abs(anti(b) - anti(a)))
    assert abs(val - (anti(b) - anti(a))) < 1e-12 * scale


def test_cc_rejects_bad_input():
    with pytest.raises(ValueError):
        clenshaw_curtis(lambda x: x, 0.0, 1.0, 1)
    with pytest.raises(ValueError):
        clenshaw_curtis(lambda x: math.inf, 0.0, 1.0, 5)


# ---------------------------------------------------------------------------
# increments
# ---------------------------------------------------------------------------

def test_increment_empty_interval(airy1):
    prov = PhaseProvider(airy1, "exact")
    assert phase_increment(prov, airy1, 0.7, 0.7) == 0.0


def test_airy_increment_closed_form(airy1):
    prov = PhaseProvider(airy1, "exact")
    s = phase_increment(prov, airy1, 0.1, 1.0)
    # Independent oracle: adaptive quadrature of the integrand.
    oracle, _ = si.quad(airy_integrand, 0.1, 1.0, epsabs=1e-13, epsrel=1e-13)
    assert s == pytest.approx(oracle, rel=1e-12)
    assert s == pytest.approx(AIRY_S_01_TO_1, rel=1e-14)
    assert s == pytest.approx(3.835457378274285, rel=1e-12)


def test_constant_coefficient_increment():
    p = make_polynomial_problem([4.0], 0.37, (0.0, 1.0))
    prov = PhaseProvider(p, "cc")
    assert prov.increment(0.0, 1.0) == pytest.approx(2.0, rel=1e-14)


def test_quadrature_mode_matches_exact(airy1):
    pe = PhaseProvider(airy1, "exact")
    pc = PhaseProvider(airy1, "cc", nodes=15)
    for x0, x1 in ((1.0, 2.0), (3.0, 4.5), (10.0, 15.0)):
        assert pc.increment(x0, x1) == pytest.approx(pe.increment(x0, x1), rel=1e-12)


def test_quadrature_converges_geometrically(airy1):
    pe = PhaseProvider(airy1, "exact")
    exact = pe.increment(0.5, 2.0)
    errs = []
    for n in (5, 7, 9, 11):
        pc = PhaseProvider(airy1, "cc", nodes=n)
        errs.append(abs(pc.increment(0.5, 2.0) - exact) / abs(exact))
    for coarse, fine in zip(errs, errs[1:]):
        assert fine <= 0.5 * coarse or fine < 1e-14


def test_guard_violation_signals_inadmissible():
    # a(x) = x dips below the tau guard at quadrature nodes left of zero.
    p = make_polynomial_problem([0.0, 1.0], 1.0, (-1.0, 1.0),
                                initial=WaveState(-1.0, 1.0 + 0.0j, 0.0j))
    prov = PhaseProvider(p, "cc")
    with pytest.raises(WKBInadmissibleError):
        prov.increment(-0.5, 0.5)


def test_exact_mode_requires_antiderivative():
    p = make_polynomial_problem([1.0], 1.0, (0.0, 1.0))
    with pytest.raises(ValueError):
        PhaseProvider(p, "exact")


# ---------------------------------------------------------------------------
# accumulation and reduced exponentials
# ---------------------------------------------------------------------------

def test_additivity_exact_mode(airy1):
    prov = PhaseProvider(airy1, "exact")
    xs = np.linspace(0.1, 50.0, 231)
    for x in xs[1:]:
        prov.advance(float(x))
    direct = prov.increment(0.1, 50.0)
    # Compensated accumulation: error bounded by ~10 ulp per step.
    assert abs(prov.accumulated - direct) <= 230 * 10 * 2.3e-16 * abs(direct)


def test_additivity_quadrature_polynomial():
    # Constant a makes the integrand a degree-zero polynomial, so the rule
    # is exact and additivity holds to rounding.
    p = make_polynomial_problem([9.0], 1.0, (0.0, 4.0))
    prov = PhaseProvider(p, "cc", nodes=9)
    total = prov.increment(0.0, 4.0)
    assert total == pytest.approx(12.0, rel=1e-14)
    parts = prov.increment(0.0, 1.5) + prov.increment(1.5, 4.0)
    assert parts == pytest.approx(total, rel=1e-14)


def test_reduced_exponential_reference_point(airy1):
    prov = PhaseProvider(airy1, "exact")
    assert reduced_exponential(prov, 0.1) == pytest.approx(1.0 + 0.0j, abs=1e-15)


def test_reduced_exponential_unit_modulus(airy1):
    prov = PhaseProvider(airy1, "exact")
    for x in (0.5, 5.0, 49.0):
        assert abs(abs(reduced_exponential(prov, x)) - 1.0) < 1e-15


def test_reduced_exponential_argument(airy1):
    prov = PhaseProvider(airy1, "exact")
    arg = cmath.phase(reduced_exponential(prov, 1.0))
    expect = AIRY_S_01_TO_1
    expect -= 2.0 * math.pi * round(expect / (2.0 * math.pi))
    assert arg == pytest.approx(expect, abs=1e-12)


def test_rebase_resets_gauge(airy1):
    prov = PhaseProvider(airy1, "exact")
    prov.advance(5.0)
    prov.rebase(5.0)
    assert prov.accumulated == 0.0
    assert reduced_exponential(prov, 5.0) == 1.0 + 0.0j


def test_pcf_provider_modes_agree():
    p = make_pcf_problem(2.0 ** -6)
    pe = PhaseProvider(p, "exact")
    pc = PhaseProvider(p, "cc", nodes=15)
    for x0, x1 in ((0.3, 0.5), (0.9, 1.2), (1.5, 1.8)):
        assert pc.increment(x0, x1) == pytest.approx(pe.increment(x0, x1),
                                                     rel=1e-11)
