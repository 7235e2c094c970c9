import math

import numpy as np
import pytest

import saturate as st
from saturate.potential import check_jacobian

from scalar_oracle import (
    LAM_36,
    RHO_36,
    bp_threshold as oracle_bp,
    nontrivial_fixed_points,
    potential_threshold as oracle_pot,
)


def test_potential_vanishes_at_zero(all_systems):
    for sys in all_systems:
        for eps in (0.1, 0.6, 1.0):
            assert float(st.potential(sys, sys.zeros(), eps)) == 0.0


def test_potential_strictly_decreasing_in_eps(all_systems):
    rng = np.random.default_rng(0)
    for sys in all_systems:
        X = rng.random((30, sys.d)) * 0.9 + 0.05
        diff = st.potential(sys, X, 0.3) - st.potential(sys, X, 0.7)
        assert np.min(diff) > 0.0


def test_potential_near_zero_at_potential_threshold(sys36, thresholds36):
    eps_star = thresholds36["potential"]
    fp = st.iterate_limit(sys36, sys36.ones(), eps_star).limit
    assert abs(float(st.potential(sys36, fp, eps_star))) < 1e-4


def test_gradient_vanishes_at_fixed_points(sys36):
    for rec in st.fixed_points(sys36, 0.47):
        assert rec.gradient_norm <= 1e-6


def test_gradient_zero_state(all_systems):
    for sys in all_systems:
        g = st.potential_gradient(sys, sys.zeros(), 0.5)
        assert np.max(np.abs(g)) == 0.0


def test_gradient_matches_finite_differences(emac36):
    rng = np.random.default_rng(1)
    X = rng.random((50, 2)) * 0.9 + 0.05
    h = 1e-6
    eye = np.eye(2) * h
    fd = (st.potential(emac36, X[:, None, :] + eye, 0.55)
          - st.potential(emac36, X[:, None, :] - eye, 0.55)) / (2 * h)
    an = st.potential_gradient(emac36, X, 0.55)
    assert np.max(np.abs(fd - an) / np.maximum(np.abs(an), 1e-2)) < 1e-5


def test_check_jacobian_entries(sys36):
    x = np.array([0.3, 0.6])
    J = check_jacobian(sys36, x)
    # g1 = 1 - (1-x1)^2 (1-x2)^3
    assert J[0, 0] == pytest.approx(2 * 0.7 * 0.4**3, rel=1e-6)
    assert J[0, 1] == pytest.approx(3 * 0.7**2 * 0.4**2, rel=1e-6)


def test_bp_threshold_matches_oracle(sys36):
    ref = oracle_bp(LAM_36, RHO_36)
    assert st.bp_threshold(sys36) == pytest.approx(ref, abs=1e-3)


def test_bp_threshold_converges_in_one_step_at_zero(sys36):
    res = st.iterate_limit(sys36, sys36.ones(), 0.0)
    assert np.max(res.limit) == 0.0
    assert res.iterations <= 2


def test_bp_threshold_decoupled_slepian_wolf(sw_free):
    assert st.bp_threshold(sw_free) == pytest.approx(0.42944, abs=1e-3)


def test_fixed_points_empty_below_threshold(sys36, thresholds36):
    assert st.fixed_points(sys36, 0.9 * thresholds36["bp"]) == []


def test_fixed_points_two_roots_on_diagonal(sys36):
    recs = st.fixed_points(sys36, 0.46)
    assert len(recs) == 2
    roots = sorted(nontrivial_fixed_points(0.46, LAM_36, RHO_36))
    for rec, ref in zip(recs, roots):
        assert rec.x[0] == pytest.approx(rec.x[1], abs=1e-10)  # diagonal
        assert rec.x[0] == pytest.approx(ref, abs=1e-7)
        assert rec.residual <= 1e-9
        assert rec.q_value == rec.potential_value


def test_fixed_points_contains_ones_limit_at_full_erasure(emac36):
    x_star = st.iterate_limit(emac36, emac36.ones(), 1.0).limit
    recs = st.fixed_points(emac36, 1.0)
    assert any(np.max(np.abs(r.x - x_star)) < 1e-8 for r in recs)
    assert all(r.residual < 1e-9 for r in recs)


def test_energy_gap_signs(sys36, thresholds36):
    bp, pot = thresholds36["bp"], thresholds36["potential"]
    assert st.energy_gap(sys36, bp + 0.01) > 0.0
    assert abs(st.energy_gap(sys36, pot)) < 1e-4
    assert math.isinf(st.energy_gap(sys36, 0.5 * bp))


def test_energy_gap_negative_at_full_erasure(all_systems):
    for sys in all_systems:
        assert st.energy_gap(sys, 1.0) < 0.0


def test_potential_threshold_matches_oracle(sys36):
    ref = oracle_pot(LAM_36, RHO_36)
    assert st.potential_threshold(sys36) == pytest.approx(ref, abs=1e-3)


def test_potential_threshold_decoupled_slepian_wolf(sw_free):
    assert st.potential_threshold(sw_free) == pytest.approx(0.48815, abs=1e-3)


def test_potential_threshold_at_least_bp(all_systems):
    for sys in all_systems:
        assert st.potential_threshold(sys) >= st.bp_threshold(sys) - 1e-6


def test_maxwell_equals_potential_threshold(all_systems):
    for sys in all_systems:
        pot = st.potential_threshold(sys)
        mx = st.maxwell_threshold(sys)
        assert abs(pot - mx) <= 2e-6


def test_epsilon_of_x_round_trip(sys36):
    fp = st.iterate_limit(sys36, sys36.ones(), 0.45).limit
    assert st.epsilon_of_x(sys36, fp) == pytest.approx(0.45, abs=1e-6)


def test_epsilon_of_x_full_erasure_endpoint(emac36):
    # all-ones is a fixed point of the full-erasure channel
    assert st.epsilon_of_x(emac36, np.ones(2)) == pytest.approx(1.0, abs=1e-9)


def test_epsilon_of_x_zero_entry_pattern(sys36):
    # protograph rows couple the components: a state with one dead entry
    # cannot be a fixed point at any eps
    assert st.epsilon_of_x(sys36, np.array([0.0, 0.5])) is None


def test_epsilon_of_x_rejects_zero(sys36):
    with pytest.raises(ValueError):
        st.epsilon_of_x(sys36, np.zeros(2))


def test_fixed_point_potential(sys36, thresholds36):
    eps_star = thresholds36["potential"]
    fp = st.iterate_limit(sys36, sys36.ones(), eps_star).limit
    assert abs(st.fixed_point_potential(sys36, fp)) < 1e-4
    with pytest.raises(ValueError, match="not a fixed point"):
        st.fixed_point_potential(sys36, np.array([0.9, 0.1]))


def test_compare_mins_strictly_decreasing(sys36, thresholds36):
    grid = np.linspace(thresholds36["bp"] + 2e-3, 1.0, 20)
    gaps = [st.energy_gap(sys36, float(e)) for e in grid]
    finite = [g for g in gaps if math.isfinite(g)]
    assert len(finite) == len(gaps)
    assert all(a > b for a, b in zip(finite[:-1], finite[1:]))


def test_trace_curve_fold_is_bp_threshold(sys36, thresholds36):
    curve = st.trace_fixed_point_curve(sys36, n_points=150)
    assert len(curve) > 50
    assert min(r.eps_root for r in curve) == pytest.approx(thresholds36["bp"], abs=1e-3)
    # endpoint: the all-ones limit at eps=1
    x_star = st.iterate_limit(sys36, sys36.ones(), 1.0).limit
    assert np.max(np.abs(curve[0].x - x_star)) < 1e-9
    assert curve[0].eps_root == 1.0


def test_trace_curve_symmetric_emac(emac36):
    curve = st.trace_fixed_point_curve(emac36, n_points=80)
    assert len(curve) > 20
    for rec in curve:
        assert rec.x[0] == pytest.approx(rec.x[1], abs=1e-9)


def test_trace_curve_q_decreasing_on_stable_branch(sw_half):
    # the stable branch runs from the eps=1 endpoint down to the fold; along
    # it the fixed-point potential strictly decreases as eps increases, which
    # is the Q = -(1-gamma)P consistency the curve exposes
    curve = st.trace_fixed_point_curve(sw_half, n_points=60)
    assert len(curve) > 20
    eps = np.array([r.eps_root for r in curve])
    fold = int(np.argmin(eps))
    stable = curve[: fold + 1]  # traced from eps=1 toward the fold
    assert eps[0] == 1.0 and fold > 5
    qs = [r.q_value for r in stable]
    assert all(a < b for a, b in zip(qs[:-1], qs[1:]))  # Q grows as eps drops


def test_quadrature_cross_checks(all_systems):
    rng = np.random.default_rng(7)
    for sys in all_systems:
        for x in rng.random((4, sys.d)):
            u = float(st.potential(sys, x, 0.55))
            qs = st.potential_quadrature(sys, x, 0.55, path="straight")
            qc = st.potential_quadrature(sys, x, 0.55, path="staircase")
            assert abs(u - qs) < 1e-8
            assert abs(qs - qc) < 1e-7


def test_descent_along_trajectories(sys36):
    # potential never increases along a monotone trajectory
    res = st.iterate_limit(sys36, sys36.ones(), 0.47, keep_path=True)
    us = np.asarray(st.potential(sys36, res.path, 0.47))
    assert np.all(np.diff(us) <= 1e-10)
    assert us[0] >= us[-1] - 1e-10


def test_threshold_report_validates(sys36):
    rep = st.threshold_report(sys36, gap_grid=[0.44, 0.47, 0.5], tol=1e-6)
    assert rep.bp_threshold <= rep.potential_threshold
    assert rep.enumeration == "heuristic"
    assert len(rep.energy_gap_curve) == 3
    rep.validate()
