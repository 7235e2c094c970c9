"""The compiled kernels and the generic numpy lane must agree."""

import os
import subprocess
import sys as _sys

import numpy as np
import pytest

import saturate as st
from saturate import kernels
from saturate.system import _iterate_batch_numpy

pytestmark = pytest.mark.skipif(
    not kernels.enabled(), reason="numba disabled; nothing to cross-check"
)


def _numpy_coupled(sys, spec, eps, tol=1e-10, max_iter=200000):
    from saturate.coupled import _coupled_step_rows, _tie

    rows = np.ones((spec.n_rows, sys.d))
    for it in range(max_iter):
        new = _coupled_step_rows(sys, rows, spec.w, eps)
        if spec.one_sided:
            _tie(new, spec.i0_row)
        delta = float(np.max(np.abs(new - rows)))
        rows = new
        if delta <= tol:
            return rows, it + 1
    return rows, max_iter


@pytest.mark.parametrize("eps", [0.3, 0.45, 0.47])
def test_batch_limit_lanes_agree_protograph(sys36, eps):
    rng = np.random.default_rng(0)
    X0 = rng.random((40, 2))
    Xk = X0.copy()
    it_k, conv_k, dirs_k, mono_k = kernels.batch_limit(sys36.kernel, Xk, eps, 1e-10, 100000)
    Xn, it_n, conv_n, dirs_n, mono_n, _ = _iterate_batch_numpy(sys36, X0, eps, 1e-10, 100000)
    assert conv_k == conv_n
    assert np.array_equal(dirs_k, dirs_n)
    assert np.array_equal(mono_k, mono_n)
    assert np.max(np.abs(Xk - Xn)) < 1e-12


@pytest.mark.parametrize("system_name", ["emac36", "sw_half"])
def test_batch_limit_lanes_agree_two_user(system_name, request):
    sys = request.getfixturevalue(system_name)
    rng = np.random.default_rng(1)
    X0 = rng.random((40, 2))
    Xk = X0.copy()
    kernels.batch_limit(sys.kernel, Xk, 0.3, 1e-10, 100000)
    Xn, *_ = _iterate_batch_numpy(sys, X0, 0.3, 1e-10, 100000)
    assert np.max(np.abs(Xk - Xn)) < 1e-12


@pytest.mark.parametrize("one_sided", [False, True])
def test_coupled_lanes_agree(all_systems, one_sided):
    for sys in all_systems:
        spec = st.CouplingSpec(L=8, w=3, one_sided=one_sided)
        state, rep = st.coupled_limit(sys, spec, 0.45)
        rows_np, it_np = _numpy_coupled(sys, spec, 0.45)
        assert rep.iterations == it_np
        assert np.max(np.abs(state.rows - rows_np)) < 1e-11


def test_coupled_chunking_equivalence(sys36):
    # chunked kernel calls (snapshot recording) land on the same state
    spec = st.CouplingSpec(L=8, w=3)
    a, rep_a = st.coupled_limit(sys36, spec, 0.5)
    b, rep_b = st.coupled_limit(sys36, spec, 0.5, record_every=7)
    assert rep_a.iterations == rep_b.iterations
    assert np.array_equal(a.rows, b.rows)


def test_window_ops_match_dense_matrix():
    rng = np.random.default_rng(2)
    for L, w in [(3, 1), (3, 2), (5, 4)]:
        spec = st.CouplingSpec(L=L, w=w)
        A = spec.matrix()
        Z = rng.random((spec.n_rows, 2))
        Y = rng.random((spec.n_bit_rows, 2))
        assert np.max(np.abs(kernels.window_mean_forward(Z, w) - A @ Z)) < 1e-14
        assert np.max(np.abs(kernels.window_mean_adjoint(Y, w) - A.T @ Y)) < 1e-14


def test_env_flag_disables_numba():
    code = (
        "from saturate import kernels; "
        "print(kernels.enabled())"
    )
    env = dict(os.environ, SATURATE_NO_NUMBA="1")
    out = subprocess.run(
        [_sys.executable, "-c", code], capture_output=True, text=True, env=env
    )
    assert out.stdout.strip() == "False"


def test_table_path_system_has_no_kernel(lam36, rho36):
    path = st.TablePath(knots=[0, 1], eps1=[0, 1], eps2=[0, 1])
    sys = st.make_slepian_wolf(
        st.SlepianWolfParams(lam36, rho36, lam36, rho36, gamma=0.1, p=0.2, path=path)
    )
    assert sys.kernel is None
    # and the generic lane still runs the coupled recursion
    spec = st.CouplingSpec(L=4, w=2)
    state, rep = st.coupled_limit(sys, spec, 0.2, max_iter=20000)
    assert rep.converged
