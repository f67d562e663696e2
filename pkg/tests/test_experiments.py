import math

import numpy as np
import pytest

from circleflow.experiments import (
    derivative_flow,
    expected_charpoly,
    kolmogorov,
    laguerre_convergence,
    log_deriv_identity_gap,
    log_growth_check,
    minimal_angle,
    pooled_angles,
    poisson_limit_finite_n,
    reflections_mc,
    worker_count,
)
from circleflow.polycore import EmpiricalAngles, laguerre
from circleflow.unitary_poisson import moment, sample
from circleflow.zetasolver import x_t


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("CIRCLEFLOW_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("CIRCLEFLOW_THREADS", "0")
    assert worker_count() == 1
    monkeypatch.delenv("CIRCLEFLOW_THREADS")
    assert 1 <= worker_count() <= 4


def test_kolmogorov_bounds_and_large_sample():
    emp = sample(1.5, 50_000, seed=11)
    d = kolmogorov(emp, 1.5)
    assert 0 <= d <= 0.01
    assert kolmogorov(EmpiricalAngles([2.0], [1]), 1.5) > 0.5


def test_kolmogorov_atom_matched():
    # exactly the atom mass at 0 and the rest spread out: the atom jump cancels
    t = 0.5
    emp = sample(t, 20_000, seed=5)
    assert kolmogorov(emp, t) <= 0.02


def test_laguerre_convergence_pilot():
    r = laguerre_convergence(400, 0.5, 4)
    assert r.kolmogorov <= 0.05
    assert np.max(r.moment_errors) <= 0.03
    assert r.k == 200
    assert 0 <= r.kolmogorov <= 1 and np.all(r.moment_errors <= 2)
    d = r.as_dict()
    assert d["moment_error_4"] == pytest.approx(r.moment_errors[3])


@pytest.mark.parametrize("t", [0.3, 0.5, 1.5])
def test_kolmogorov_trend(t):
    ks = [laguerre_convergence(n, t, 2).kolmogorov for n in (100, 200, 400)]
    assert ks[0] >= ks[1] >= ks[2]


def test_laguerre_convergence_passthrough():
    r = laguerre_convergence(50, 0.001)
    assert r.passthrough and r.k == 0 and r.kolmogorov == 0.0


def test_derivative_flow_atom_reduces_to_laguerre():
    d = derivative_flow(EmpiricalAngles([0.0], [64]), 0.5, 3)
    lc = laguerre_convergence(64, 0.5, 3)
    np.testing.assert_allclose(d.moment_errors, lc.moment_errors, atol=1e-12)
    assert d.kolmogorov == pytest.approx(lc.kolmogorov, abs=1e-12)


def test_derivative_flow_rotated_atom():
    a = 0.7
    r = derivative_flow(EmpiricalAngles([a], [64]), 0.5, 3)
    assert np.max(r.moment_errors) <= 0.1
    want = np.exp(1j * a * np.arange(1, 4)) * [moment(0.5, l) for l in (1, 2, 3)]
    np.testing.assert_allclose(r.predicted_moments, want, atol=1e-12)


def test_derivative_flow_spread_input():
    rng = np.random.default_rng(1)
    ang = EmpiricalAngles.from_samples(rng.uniform(-math.pi, math.pi, 64))
    r = derivative_flow(ang, 0.4, 3)
    assert not r.degraded
    assert np.max(r.moment_errors) <= 0.15


def test_derivative_flow_degraded():
    ang = EmpiricalAngles([-math.pi, 0.0], [32, 32])
    r = derivative_flow(ang, 0.5, 3)
    assert r.degraded
    assert np.all(np.isnan(r.moment_errors))
    assert 0 <= r.kolmogorov <= 1


def test_derivative_flow_k0():
    r = derivative_flow(EmpiricalAngles([0.3], [8]), 0.01)
    assert r.passthrough and np.max(r.moment_errors) == 0


def test_log_growth_pilot_and_trend():
    th = 0.3 + 1.0j
    errs = {}
    for n in (400, 800, 1600):
        lhs_log, lhs_ld, rhs_log, rhs_ld = log_growth_check(n, n // 2, th)
        errs[n] = abs(lhs_ld / n - rhs_ld)
    assert errs[800] <= 0.01
    assert errs[1600] < errs[400]
    # the log-magnitude converges too
    lhs_log, _, rhs_log, _ = log_growth_check(1600, 800, th)
    assert abs(lhs_log - rhs_log) <= 0.01


def test_log_growth_rejects_low_theta():
    with pytest.raises(ValueError):
        log_growth_check(100, 50, 0.3 + 0.1j)


@pytest.mark.parametrize("t", [0.3, 1.0, 2.0])
def test_log_deriv_identity(t):
    for th in (0.3 + 1j, -1.2 + 0.4j, 2.0 + 3j):
        assert log_deriv_identity_gap(t, th) <= 1e-10


def test_minimal_angle():
    a = minimal_angle(400, 0.5)
    assert abs(a - 2 * x_t(0.5)) <= 0.1
    assert abs(minimal_angle(200, 0.5) - 2 * x_t(0.5)) > abs(a - 2 * x_t(0.5))
    assert minimal_angle(200, 0.98) < minimal_angle(200, 0.5)
    with pytest.raises(ValueError):
        minimal_angle(10, 1.0)


def test_poisson_limit_finite_n():
    r30 = poisson_limit_finite_n(30, 0.5)
    assert r30["closed_form_error"] <= 1e-9
    r120 = poisson_limit_finite_n(120, 0.5)
    assert np.max(r120["moment_errors"]) < np.max(r30["moment_errors"])
    r0 = poisson_limit_finite_n(10, 0.01)
    assert r0["k"] == 0 and r0["closed_form_error"] == 0


def test_expected_charpoly_target():
    np.testing.assert_allclose(expected_charpoly(4, 2), [1, -1, 0, -1, 1], atol=1e-14)
    # cross-check with the Laguerre closed form, normalized to monic
    c = laguerre(6, 3).coeffs
    np.testing.assert_allclose(expected_charpoly(6, 3), (c / c[-1]).real, atol=1e-12)


def test_reflections_k1_exact_angles():
    r = reflections_mc(5, 1, 300, seed=1)
    pairs = dict(pooled_angles(r.eigen_angles).pairs())
    assert pairs == {-math.pi: 300, 0.0: 1200}


def test_reflections_invariants_and_determinism():
    a = reflections_mc(6, 3, 2000, seed=9)
    b = reflections_mc(6, 3, 2000, seed=9)
    np.testing.assert_array_equal(a.estimated_charpoly, b.estimated_charpoly)
    np.testing.assert_array_equal(a.eigen_angles, b.eigen_angles)
    assert a.max_unit_dev <= 1e-8 and a.max_det_dev <= 1e-8
    assert a.estimated_charpoly[-1] == 1.0
    assert a.skipped == 0


def test_reflections_thread_independent(monkeypatch):
    monkeypatch.setenv("CIRCLEFLOW_THREADS", "1")
    a = reflections_mc(4, 2, 9000, seed=3)
    monkeypatch.setenv("CIRCLEFLOW_THREADS", "4")
    b = reflections_mc(4, 2, 9000, seed=3)
    np.testing.assert_array_equal(a.estimated_charpoly, b.estimated_charpoly)


def test_reflections_pooled_kolmogorov():
    r = reflections_mc(40, 20, 200, seed=42)
    assert kolmogorov(EmpiricalAngles.from_samples(r.eigen_angles), 0.5) <= 0.08


def test_reflections_validation():
    with pytest.raises(ValueError):
        reflections_mc(65, 1, 10)
    with pytest.raises(ValueError):
        reflections_mc(4, 1, 0)
