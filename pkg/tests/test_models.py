import numpy as np
import pytest

import saturate as st
from saturate.system import _step_raw

from scalar_oracle import LAM_36, RHO_36, de_trajectory, scalar_potential


def test_protograph_hand_expansion(sys36):
    # H = [3 3]: two edges in one row, different columns
    rng = np.random.default_rng(0)
    for x in rng.random((20, 2)):
        g = sys36.check_update(x)
        assert g[0] == pytest.approx(1 - (1 - x[0]) ** 2 * (1 - x[1]) ** 3, abs=1e-14)
        assert g[1] == pytest.approx(1 - (1 - x[0]) ** 3 * (1 - x[1]) ** 2, abs=1e-14)
        f = sys36.bit_update(x, 0.37)
        assert f[0] == pytest.approx(0.37 * x[0] ** 2, abs=1e-14)
        assert f[1] == pytest.approx(0.37 * x[1] ** 2, abs=1e-14)


def test_protograph_all_ones_check(sys36):
    assert np.allclose(sys36.check_update(np.ones(2)), 1.0, atol=1e-15)


def test_protograph_weights_and_dimension(sys36):
    assert sys36.d == 2
    assert np.allclose(sys36.weights, [3.0, 3.0])


def test_protograph_diagonal_matches_scalar_potential(sys36):
    # restricted to the diagonal the potential is the scalar one, scaled by
    # the weight (3) times the two components
    for x, eps in [(0.3, 0.45), (0.5, 0.6), (0.8, 0.9)]:
        u = float(st.potential(sys36, np.array([x, x]), eps))
        assert u == pytest.approx(6.0 * scalar_potential(x, eps, LAM_36, RHO_36), abs=1e-8)


def test_protograph_rejects_bad_matrices():
    with pytest.raises(ValueError):
        st.ProtographSpec(H=np.array([[3, 0], [0, 0]]))  # empty row
    with pytest.raises(ValueError):
        st.ProtographSpec(H=np.array([[0, 3], [0, 2]]))  # empty column
    with pytest.raises(ValueError):
        st.ProtographSpec(H=np.array([[-1, 3]]))


def test_protograph_punctured_column_flag():
    spec = st.ProtographSpec(H=np.array([[3, 3]]), punctured_columns=frozenset({1}))
    sys = st.make_protograph(spec)
    assert not sys.zero_param_exact
    # the punctured column sees a fully erased channel at every eps
    f = sys.bit_update(np.array([0.5, 0.5]), 0.0)
    assert f[1] == pytest.approx(0.25, abs=1e-14)
    assert f[0] == 0.0


def test_protograph_node_scale():
    spec = st.ProtographSpec(H=np.array([[3, 3]]), node_scale=[1.0, 0.5])
    sys = st.make_protograph(spec)
    f = sys.bit_update(np.array([0.6, 0.6]), 0.8)
    assert f[0] == pytest.approx(0.8 * 0.36, abs=1e-14)
    assert f[1] == pytest.approx(0.4 * 0.36, abs=1e-14)


def test_multi_row_protograph_admissible():
    spec = st.ProtographSpec(H=np.array([[2, 1, 1], [1, 2, 1]]))
    sys = st.make_protograph(spec)
    assert sys.d == 6
    rep = st.verify_admissible(sys, n_samples=300, seed=4)
    assert rep.ok, rep.summary()


def test_slepian_wolf_gamma0_reduces_to_plain_bec(sw_free):
    # psi collapses to the bare channel parameter
    rng = np.random.default_rng(2)
    for y in rng.random((10, 2)):
        f = sw_free.bit_update(y, 0.44)
        assert f[0] == pytest.approx(0.44 * y[0] ** 2, abs=1e-15)
        assert f[1] == pytest.approx(0.44 * y[1] ** 2, abs=1e-15)


def test_slepian_wolf_gamma0_trajectory_lockstep(sw_free):
    # component trajectories reproduce the scalar recursion exactly; once the
    # loop lands on the exact fixed point the iterate is constant
    res = st.iterate_limit(sw_free, sw_free.ones(), 0.43, max_iter=1000, tol=0.0,
                           keep_path=True)
    ref = de_trajectory(0.43, LAM_36, RHO_36, n_iter=1000)
    path = res.path[1:]  # drop the initial state
    n = path.shape[0]
    for comp in (0, 1):
        assert np.max(np.abs(path[:, comp] - ref[:n])) < 1e-12
        if n < 1000:
            assert np.max(np.abs(ref[n:] - path[-1, comp])) < 1e-12


def test_slepian_wolf_p0_cross_term_vanishes(lam36, rho36):
    # p=0, gamma>0: the channel factor is constant in the state, so the
    # bit-side energy separates across users
    sys = st.make_slepian_wolf(
        st.SlepianWolfParams(lam36, rho36, lam36, rho36, gamma=0.4, p=0.0)
    )
    rng = np.random.default_rng(3)
    for x in rng.random((10, 2)):
        joint = float(sys.bit_energy(x, 0.6))
        sep = float(
            sys.bit_energy(np.array([x[0], 0.0]), 0.6)
            + sys.bit_energy(np.array([0.0, x[1]]), 0.6)
        )
        assert joint == pytest.approx(sep, abs=1e-14)


def test_slepian_wolf_rejects_mismatched_rates(lam36, rho36):
    rho9 = st.EdgePolynomial.regular(9)
    with pytest.raises(ValueError, match="design rate"):
        st.SlepianWolfParams(lam36, rho36, lam36, rho9, gamma=0.3, p=0.5)


def test_slepian_wolf_rejects_bad_paths():
    with pytest.raises(ValueError):
        st.ScaledPath(theta=1.5)
    with pytest.raises(ValueError, match="start"):
        st.TablePath(knots=[0, 1], eps1=[0.1, 1], eps2=[0, 1])
    with pytest.raises(ValueError, match="non-decreasing"):
        st.TablePath(knots=[0, 0.5, 1], eps1=[0, 0.6, 0.4], eps2=[0, 0.5, 1])


def test_slepian_wolf_table_path_runs_generic_lane(lam36, rho36):
    path = st.TablePath(knots=[0.0, 0.5, 1.0], eps1=[0.0, 0.4, 1.0], eps2=[0.0, 0.6, 1.0])
    sys = st.make_slepian_wolf(
        st.SlepianWolfParams(lam36, rho36, lam36, rho36, gamma=0.2, p=0.5, path=path)
    )
    assert sys.kernel is None  # table paths are not kernel-expressible
    res = st.iterate_limit(sys, sys.ones(), 0.3)
    assert res.converged


def test_emac_full_erasure_decouples(emac36):
    # eps=1: the channel factor is 1, each user runs a plain full-erasure recursion
    rng = np.random.default_rng(4)
    for y in rng.random((10, 2)):
        f = emac36.bit_update(y, 1.0)
        assert f[0] == pytest.approx(y[0] ** 2, abs=1e-15)
        assert f[1] == pytest.approx(y[1] ** 2, abs=1e-15)


def test_emac_zero_component_stays_zero(emac36):
    f = emac36.bit_update(np.array([0.0, 0.7]), 0.5)
    assert f[0] == 0.0


def test_emac_swap_symmetry(emac36):
    rng = np.random.default_rng(5)
    for x in rng.random((25, 2)):
        for eps in (0.2, 0.7):
            a = _step_raw(emac36, x, eps)
            b = _step_raw(emac36, x[::-1].copy(), eps)
            assert np.max(np.abs(a - b[::-1])) < 1e-14


def test_sw_gamma_zero_bp_matches_scalar(sw_free, thresholds36):
    assert st.bp_threshold(sw_free) == pytest.approx(thresholds36["bp"], abs=1e-6)


def test_trial_entropy_scales(sw_half, emac36, sys36):
    assert sw_half.trial_entropy_scale == pytest.approx(2.0)
    assert emac36.trial_entropy_scale == 1.0
    assert sys36.trial_entropy_scale is None
