"""Controller arithmetic, switching, and the adaptive driver."""

import math

import numpy as np
import pytest

from wkbmarch import (SolverConfig, SolverError, WaveState,
                      estimate_error, estimator_h_sweep, estimator_study,
                      global_error, integrate, make_airy_problem,
                      make_polynomial_problem, march_fixed_grid,
                      proposal_factor, select_method)
from wkbmarch.control import Candidate
from wkbmarch.problem import CoefficientField, Problem


def cfg(**kw):
    base = dict(tol=1e-6, h0=0.5, method="wkb+rkf45")
    base.update(kw)
    return SolverConfig(**base)


# ---------------------------------------------------------------------------
# estimate_error / proposal_factor / select_method
# ---------------------------------------------------------------------------

def test_estimate_identical_states():
    a = WaveState(1.0, 0.3 + 0.4j, -1.0j)
    assert estimate_error(a, a) == 0.0


def test_estimate_complex_modulus():
    a = WaveState(1.0, 3.0 + 4.0j, 0.0j)
    b = WaveState(1.0, 0.0j, 0.0j)
    assert estimate_error(a, b) == 5.0


def test_estimate_requires_same_point():
    with pytest.raises(ValueError):
        estimate_error(WaveState(1.0, 0j, 0j), WaveState(2.0, 0j, 0j))


def test_proposal_factor_unit_ratio():
    c = cfg(tol=1e-6)
    # est equal to the blended tolerance leaves only the safety factor.
    ynorm = 2.0
    est = c.atol + c.rtol * ynorm
    assert proposal_factor(est, ynorm, c, 1) == pytest.approx(0.9)


def test_proposal_factor_clamps():
    c = cfg(tol=1e-6)
    assert proposal_factor(0.0, 1.0, c, 1) == 2.0
    big = 1e6 * (c.atol + c.rtol * 1.0)
    assert proposal_factor(big, 1.0, c, 1) == 0.5


def test_select_method_case_table():
    mk = lambda acc, th: Candidate("M", acc, th, 1.0, WaveState(0, 0j, 0j))
    theta, idx = select_method([mk(True, 1.2), mk(True, 0.8)])
    assert (theta, idx) == (1.2, 0)
    theta, idx = select_method([mk(False, 0.7), mk(True, 0.9)])
    assert (theta, idx) == (0.9, 1)
    theta, idx = select_method([mk(False, 0.5), mk(False, 0.6)])
    assert theta == 0.6 and idx is None


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(tol=-1.0, h0=0.5)
    with pytest.raises(ValueError):
        SolverConfig(tol=1e-6, h0=0.5, method="euler")
    with pytest.raises(ValueError):
        SolverConfig(tol=1e-6, h0=0.5, theta_min=1.5)
    with pytest.raises(ValueError):
        SolverConfig(tol=1e-6, h0=0.5, phase="spectral")


# ---------------------------------------------------------------------------
# driver behavior
# ---------------------------------------------------------------------------

def test_trajectory_monotone_and_clamped(airy_runs):
    traj = airy_runs[1e-6]
    xs = [r.x for r in traj.records]
    assert all(b > a for a, b in zip(xs, xs[1:]))
    assert xs[-1] == 50.0


def test_eps_acceptance_inequality(airy_runs):
    c = cfg(tol=1e-6)
    for rec in airy_runs[1e-6].records:
        blend = c.atol + c.rtol * rec.state.sup_norm()
        assert rec.est <= blend * (1.0 + 1e-12)


def test_consecutive_ratio_clamps(airy_runs):
    # The final step is clamped to land on x_end and is excluded.
    records = airy_runs[1e-5].records
    hs = [r.h for r in records[:-1]]
    for a, b in zip(hs, hs[1:]):
        assert 0.5 - 1e-12 <= b / a <= 2.0 + 1e-12


def test_method_tags_monotone_on_airy(airy_runs):
    # Runge-Kutta prefix near the turning point, transform steps after.
    tags = [r.method for r in airy_runs[1e-6].records]
    switch = tags.index("WKB")
    assert all(t == "RKF45" for t in tags[:switch])
    assert all(t == "WKB" for t in tags[switch:])


def test_constant_coefficient_exactness():
    p = make_polynomial_problem([1.0], 0.01, (0.0, 20.0))
    traj = integrate(p, cfg(tol=1e-8, h0=0.1))
    wkb_est = [r.est for r in traj.records if r.method == "WKB"]
    assert wkb_est and max(wkb_est) <= 1e-13
    # Doubling limit: step sizes grow by exactly the clamp factor.
    hs = [r.h for r in traj.records[1:-1]]
    assert all(b == pytest.approx(2.0 * a) for a, b in zip(hs, hs[1:]))


def test_deterministic_repetition(airy1):
    a = integrate(airy1, cfg(tol=1e-6))
    b = integrate(airy1, cfg(tol=1e-6))
    assert [r.x for r in a.records] == [r.x for r in b.records]
    assert [r.state.phi for r in a.records] == [r.state.phi for r in b.records]


def test_max_rejections_raises():
    nan_field = CoefficientField(lambda x: (math.nan,) * 6, "nan")
    p = Problem(epsilon=1.0, field=nan_field, x_start=0.0, x_end=1.0,
                initial=WaveState(0.0, 1.0 + 0.0j, 0.0j))
    with pytest.raises(SolverError, match="rejections"):
        integrate(p, cfg(tol=1e-6, h0=0.1, method="rkf45"))


def test_run_starting_at_turning_point():
    # x_start = 0 makes the closed-form phase singular at the reference
    # point; the provider re-gauges after the first accepted steps and the
    # run still finishes on oscillatory steps.
    p = make_airy_problem(1.0, 0.0, 20.0)
    traj = integrate(p, cfg(tol=1e-5))
    assert traj.final_state.x == 20.0
    counts = traj.method_counts()
    assert counts.get("RKF45", 0) > 0 and counts.get("WKB", 0) > 0
    assert global_error(traj, p, "sup") < 1e-3


def test_airy_global_error_band(airy_runs):
    # At Tol = 1e-6 the whole run stays below 1e-5 in sup relative error.
    assert global_error(airy_runs[1e-6],
                        make_airy_problem(1.0), "sup") <= 1e-5


def test_long_interval_rival_step_count(airy_long):
    traj = integrate(airy_long, cfg(tol=1e-5, method="rkwkbmod"))
    assert abs(traj.accepted - 91) <= 0.5 * 91


def test_wronskian_drift_bounded(airy_runs):
    # Im(conj(phi) eps phi') is conserved by the exact flow.
    traj = airy_runs[1e-5]
    w0 = (traj.initial.phi.conjugate() * traj.initial.dphi).imag
    drift = max(abs((s.phi.conjugate() * s.dphi).imag - w0) / abs(w0)
                for s in traj.states)
    assert drift <= 100.0 * 1e-5


def test_global_error_tracks_tolerance(airy1):
    # EPS control: log-log slope of global error vs Tol in [0.4, 1.1].
    tols = np.geomspace(1e-3, 1e-9, 7)
    errs = []
    for t in tols:
        traj = integrate(airy1, cfg(tol=float(t)))
        errs.append(global_error(traj, airy1, "l2rel"))
    slope = np.polyfit(np.log10(tols), np.log10(errs), 1)[0]
    assert 0.4 <= slope <= 1.1


def test_rkwkb_original_mode_runs(airy1):
    traj = integrate(airy1, cfg(tol=1e-6, method="rkwkb"))
    assert traj.final_state.x == 50.0
    assert global_error(traj, airy1, "sup") < 1e-4
    # Unclamped controller: ratios outside [0.5, 2] do occur.
    hs = [r.h for r in traj.records[:-1]]
    ratios = [b / a for a, b in zip(hs, hs[1:])]
    assert max(ratios) > 2.0 or min(ratios) < 0.5


def test_phase_mode_resolution(airy1):
    p_poly = make_polynomial_problem([1.0], 1.0, (0.0, 1.0))
    c = cfg()
    assert c.phase_mode(airy1) == "exact"
    assert c.phase_mode(p_poly) == "cc"


def test_march_fixed_grid_orders():
    # Controller disabled: h-orders of the two schemes on a fixed grid.
    p = make_airy_problem(0.5, 1.0, 2.0)
    orders = {}
    for order in (1, 2):
        errs = []
        for n in (8, 16, 32, 64):
            out = march_fixed_grid(p, np.linspace(1.0, 2.0, n + 1), order=order)
            errs.append(max(abs(s.phi - p.exact(s.x).phi) for s in out))
        orders[order] = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert all(0.8 <= r <= 1.3 for r in orders[1])
    assert all(1.8 <= r <= 2.4 for r in orders[2])


# ---------------------------------------------------------------------------
# estimator studies
# ---------------------------------------------------------------------------

def test_estimator_study_rows(airy1):
    rows = estimator_study(airy1, cfg(tol=1e-5))
    assert rows, "expected oscillatory steps in the run"
    for x0, h, method, est, lte, dev in rows:
        assert method == "WKB" and h > 0.0 and est > 0.0
        assert dev < 0.5


def test_estimator_h_sweep_converges(airy1):
    hs = np.geomspace(1.0, 1e-3, 13)
    rows = estimator_h_sweep(airy1, 10.0, hs, "WKB")
    devs = [r[3] for r in rows]
    assert devs[0] < 0.5
    assert min(devs[-4:]) < 1e-2


def test_estimator_study_needs_exact():
    p = make_polynomial_problem([1.0], 1.0, (0.0, 1.0))
    with pytest.raises(ValueError):
        estimator_study(p, cfg())
