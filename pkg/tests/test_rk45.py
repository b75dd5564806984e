"""Embedded Fehlberg 4(5) pair on the untransformed equation."""

import cmath
import math

import pytest
from hypothesis import given, settings, strategies as st

from wkbmarch import (SolverError, WaveState, make_polynomial_problem,
                      rkf45_step)


def plane_wave_problem():
    # a = 1, eps = 1: phi = e^{ix} from (1, i).
    return make_polynomial_problem([1.0], 1.0, (0.0, 10.0),
                                   initial=WaveState(0.0, 1.0 + 0.0j, 1.0j))


def march(problem, state, h, n):
    for _ in range(n):
        state = rkf45_step(problem, state, h).y5
    return state


def march4(problem, state, h, n):
    for _ in range(n):
        state = rkf45_step(problem, state, h).y4
    return state


def test_free_particle_exact():
    # a = 0 makes the solution linear in x; every RK stage is exact.
    p = make_polynomial_problem([0.0], 1.0, (0.0, 10.0),
                                initial=WaveState(0.0, 1.0 + 0.0j, 2.0 + 1.0j))
    pair = rkf45_step(p, p.initial, 0.7)
    expect = 1.0 + 0.7 * (2.0 + 1.0j)
    assert pair.y4.phi == pytest.approx(expect, abs=1e-15)
    assert pair.y5.phi == pytest.approx(expect, abs=1e-15)
    assert pair.y4.x == pair.y5.x == 0.7


def test_plane_wave_single_step():
    p = plane_wave_problem()
    pair = rkf45_step(p, p.initial, 0.1)
    exact = cmath.exp(0.1j)
    assert abs(pair.y5.phi - exact) <= 1e-9
    assert abs(pair.y5.dphi - 1j * exact) <= 1e-9
    # The pair difference sits at the h^5 local-error scale.
    assert 1e-9 < abs(pair.y4.phi - pair.y5.phi) < 1e-7


def test_plane_wave_halving():
    # Global error of the propagated 5th-order result drops ~2^5 per halving.
    p = plane_wave_problem()
    errs = []
    for n in (10, 20, 40):
        end = march(p, p.initial, 1.0 / n, n)
        errs.append(abs(end.phi - cmath.exp(1.0j)))
    assert errs[0] / errs[1] == pytest.approx(32.0, rel=0.35)
    assert errs[1] / errs[2] == pytest.approx(32.0, rel=0.35)


def test_observed_global_orders():
    p = plane_wave_problem()
    errs5, errs4 = [], []
    for n in (16, 32, 64):
        e5 = march(p, p.initial, 1.0 / n, n)
        e4 = march4(p, p.initial, 1.0 / n, n)
        errs5.append(abs(e5.phi - cmath.exp(1.0j)))
        errs4.append(abs(e4.phi - cmath.exp(1.0j)))
    order5 = math.log2(errs5[0] / errs5[1])
    order4 = math.log2(errs4[0] / errs4[1])
    assert 4.7 <= order5 <= 5.3
    assert 3.7 <= order4 <= 4.3
    assert 4.7 <= math.log2(errs5[1] / errs5[2]) <= 5.3


@settings(deadline=None, derandomize=True, max_examples=30)
@given(st.complex_numbers(min_magnitude=1e-2, max_magnitude=1e2,
                          allow_nan=False, allow_infinity=False))
def test_linearity(alpha):
    p = plane_wave_problem()
    base = rkf45_step(p, p.initial, 0.2)
    scaled_state = WaveState(0.0, alpha * p.initial.phi, alpha * p.initial.dphi)
    scaled = rkf45_step(p, scaled_state, 0.2)
    assert abs(scaled.y5.phi - alpha * base.y5.phi) <= 1e-14 * abs(alpha)
    assert abs(scaled.y4.dphi - alpha * base.y4.dphi) <= 1e-14 * abs(alpha)


def test_nonfinite_rhs_raises():
    from wkbmarch.problem import CoefficientField, Problem

    bad_field = CoefficientField(lambda x: (math.nan,) * 6, "nan field")
    p = Problem(epsilon=1.0, field=bad_field, x_start=0.0, x_end=1.0,
                initial=WaveState(0.0, 1.0 + 0.0j, 0.0j))
    with pytest.raises(SolverError):
        rkf45_step(p, p.initial, 0.1)


def test_step_size_guard():
    p = plane_wave_problem()
    with pytest.raises(ValueError):
        rkf45_step(p, p.initial, -0.1)
