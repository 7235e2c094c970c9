"""Timing comparison: compiled kernels vs the pure-numpy lane.

Run directly:

    python3 benchmarks/bench_kernels.py

The numpy lane is what SATURATE_NO_NUMBA=1 selects at import time; here both
lanes are driven explicitly so one process can time them side by side.
"""

import time

import numpy as np

import saturate as st
from saturate import kernels
from saturate.coupled import _coupled_step_rows, _tie
from saturate.system import _iterate_batch_numpy


def timed(fn, repeat=3):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def numpy_coupled_limit(sys, spec, eps, tol=1e-10, max_iter=200000):
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


def numba_coupled_limit(sys, spec, eps, tol=1e-10, max_iter=200000):
    rows = np.ones((spec.n_rows, sys.d))
    it, delta, _ = kernels.coupled_chunk(
        sys.kernel, rows, spec.w, eps, max_iter, tol, spec.one_sided, spec.i0_row
    )
    return rows, it


def bench_coupled(sys, L, w, eps):
    spec = st.CouplingSpec(L=L, w=w)
    t_np, (rows_np, it_np) = timed(lambda: numpy_coupled_limit(sys, spec, eps))
    t_nb, (rows_nb, it_nb) = timed(lambda: numba_coupled_limit(sys, spec, eps))
    assert it_np == it_nb and np.max(np.abs(rows_np - rows_nb)) < 1e-11
    per_np = t_np / it_np * 1e6
    per_nb = t_nb / it_nb * 1e6
    print(
        f"  coupled chain L={L:3d} w={w} eps={eps}: {it_np:6d} iters | "
        f"numpy {t_np*1e3:9.2f} ms ({per_np:7.2f} us/iter) | "
        f"numba {t_nb*1e3:9.2f} ms ({per_nb:7.2f} us/iter) | "
        f"speedup {t_np/t_nb:6.1f}x"
    )


def bench_batch(sys, n_seeds, eps):
    rng = np.random.default_rng(0)
    X0 = rng.random((n_seeds, sys.d))

    def run_np():
        return _iterate_batch_numpy(sys, X0, eps, 1e-10, 100000)[:2]

    def run_nb():
        X = X0.copy()
        it, *_ = kernels.batch_limit(sys.kernel, X, eps, 1e-10, 100000)
        return X, it

    t_np, (xa, it_a) = timed(run_np)
    t_nb, (xb, it_b) = timed(run_nb)
    assert it_a == it_b and np.max(np.abs(xa - xb)) < 1e-11
    print(
        f"  batched fixed-point iteration ({n_seeds} seeds, eps={eps}): "
        f"{it_a:5d} iters | numpy {t_np*1e3:8.2f} ms | numba {t_nb*1e3:8.2f} ms | "
        f"speedup {t_np/t_nb:6.1f}x"
    )


def main():
    if not kernels.enabled():
        raise SystemExit(
            "compiled kernels unavailable (numba missing or SATURATE_NO_NUMBA set); "
            "nothing to compare"
        )
    lam = st.EdgePolynomial.regular(3)
    rho = st.EdgePolynomial.regular(6)
    systems = {
        "(3,6) protograph": st.regular_protograph(3, 6),
        "erasure MAC": st.make_emac(lam, rho, lam, rho),
    }
    # force compilation outside the timed region
    for sys in systems.values():
        st.coupled_limit(sys, st.CouplingSpec(L=2, w=2), 0.3, max_iter=50)
        st.iterate_limit(sys, sys.ones(), 0.3, max_iter=50)

    for name, sys in systems.items():
        print(f"{name}:")
        bench_batch(sys, 1024, 0.3)
        bench_coupled(sys, 16, 3, 0.47)
        bench_coupled(sys, 32, 3, 0.487 if name.startswith("(3,6)") else 0.3)
        print()


if __name__ == "__main__":
    main()
