"""Single-system potential, fixed-point machinery, and the three thresholds."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .system import (
    DEFAULT_ITER_TOL,
    DEFAULT_MAX_ITER,
    SystemDefinition,
    _step_raw,
    iterate_batch,
    iterate_limit,
)

log = logging.getLogger("saturate")

FP_RESIDUAL_TOL = 1e-9
FP_GRADIENT_TOL = 1e-6
CLUSTER_RADIUS = 1e-6
ZERO_TOL = 1e-8
BISECT_TOL = 1e-6
BISECT_MAX_HALVINGS = 60
NEWTON_DAMPING = 0.5
NEWTON_MAX_ITER = 50


def potential(sys: SystemDefinition, x, eps: float):
    """U(x; eps) = g(x) . (w * x) - check_energy(x) - bit_energy(g(x); eps)."""
    x = np.asarray(x, dtype=float)
    g = sys.check_update(x)
    term = np.sum(g * (x * sys.weights), axis=-1)
    return term - sys.check_energy(x) - sys.bit_energy(g, eps)


def check_jacobian(sys: SystemDefinition, x, h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of check_update: [..., k, j] = d g_k / d x_j."""
    x = np.asarray(x, dtype=float)
    eye = np.eye(sys.d) * h
    gp = sys.check_update(x[..., None, :] + eye)
    gm = sys.check_update(x[..., None, :] - eye)
    return np.swapaxes((gp - gm) / (2.0 * h), -1, -2)


def potential_gradient(sys: SystemDefinition, x, eps: float) -> np.ndarray:
    """Gradient of the potential: (x - step(x)) D g'(x), with g' by differences."""
    x = np.asarray(x, dtype=float)
    resid = (x - _step_raw(sys, x, eps)) * sys.weights
    return np.einsum("...k,...kj->...j", resid, check_jacobian(sys, x))


def potential_quadrature(sys: SystemDefinition, x, eps: float, n_nodes: int = 64,
                         path: str = "straight") -> float:
    """Line integral of the potential gradient field from 0 to x.

    Cross-checks the closed forms; path independence makes "straight" and the
    axis-aligned "staircase" agree.
    """
    x = np.asarray(x, dtype=float)
    nodes, wts = np.polynomial.legendre.leggauss(n_nodes)
    t = (nodes + 1.0) / 2.0
    wts = wts / 2.0
    if path == "straight":
        z = t[:, None] * x
        fld = potential_gradient(sys, z, eps)
        return float(wts @ (fld @ x))
    if path == "staircase":
        total = 0.0
        base = np.zeros(sys.d)
        for k in range(sys.d):
            if x[k] == 0.0:
                base[k] = x[k]
                continue
            z = np.tile(base, (n_nodes, 1))
            z[:, k] = t * x[k]
            fld = potential_gradient(sys, z, eps)
            total += float(wts @ fld[:, k]) * x[k]
            base[k] = x[k]
        return total
    raise ValueError(f"unknown path {path!r}")


# ---------------------------------------------------------------------------
# threshold bisections
# ---------------------------------------------------------------------------


def _threshold_bisect(true_below, tol: float, name: str,
                      max_halvings: int = BISECT_MAX_HALVINGS) -> float:
    """Bisect [0,1] for the edge of a predicate that holds below a threshold."""
    if true_below(1.0):
        return 1.0
    if not true_below(1e-9):
        log.warning("%s: predicate already fails as eps -> 0+ (degenerate)", name)
        return 0.0
    lo, hi = 1e-9, 1.0
    for _ in range(max_halvings):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if true_below(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bp_threshold(sys: SystemDefinition, tol: float = BISECT_TOL,
                 zero_tol: float = ZERO_TOL, iter_tol: float = DEFAULT_ITER_TOL,
                 max_iter: int = DEFAULT_MAX_ITER) -> float:
    """Largest eps at which the recursion from all-ones collapses to zero."""

    def dies(eps: float) -> bool:
        res = iterate_limit(sys, sys.ones(), eps, tol=iter_tol, max_iter=max_iter)
        return bool(np.max(res.limit) < zero_tol)

    return _threshold_bisect(dies, tol, "bp_threshold")


# ---------------------------------------------------------------------------
# fixed points
# ---------------------------------------------------------------------------


@dataclass
class FixedPointRecord:
    x: np.ndarray
    eps_root: float
    potential_value: float
    q_value: float
    residual: float
    gradient_norm: float


def _residual_sup(sys, X, eps):
    return np.max(np.abs(X - _step_raw(sys, X, eps)), axis=-1)


def _newton_batch(sys, X0, eps, res_tol=1e-12, max_iter=NEWTON_MAX_ITER, fd_h=1e-7):
    """Damped Newton on the fixed-point residual, all seeds in lockstep."""
    X = np.clip(np.asarray(X0, dtype=float), 0.0, 1.0).copy()
    d = sys.d
    eye = np.eye(d)
    for _ in range(max_iter):
        R = X - _step_raw(sys, X, eps)
        res = np.max(np.abs(R), axis=-1)
        active = res > res_tol
        if not active.any():
            break
        Xa = X[active]
        Ra = R[active]
        res_a = res[active]
        Sp = _step_raw(sys, Xa[:, None, :] + fd_h * eye, eps)
        Sm = _step_raw(sys, Xa[:, None, :] - fd_h * eye, eps)
        Jstep = (Sp - Sm) / (2.0 * fd_h)  # [n, j, k] = d step_k / d x_j
        J = eye[None, :, :] - np.swapaxes(Jstep, -1, -2)
        J = J + 1e-13 * eye  # keep fold-point solves finite
        try:
            dx = np.linalg.solve(J, Ra[..., None])[..., 0]
        except np.linalg.LinAlgError:
            break
        t = np.ones(len(Xa))
        cand = np.clip(Xa - dx, 0.0, 1.0)
        rc = _residual_sup(sys, cand, eps)
        for _ in range(8):
            bad = rc > (1.0 - 0.25 * t) * res_a
            if not bad.any():
                break
            t[bad] *= NEWTON_DAMPING
            cand[bad] = np.clip(Xa[bad] - t[bad, None] * dx[bad], 0.0, 1.0)
            rc[bad] = _residual_sup(sys, cand[bad], eps)
        X[active] = cand
    return X, _residual_sup(sys, X, eps)


def _cluster(points: np.ndarray, residuals: np.ndarray, radius: float) -> np.ndarray:
    """Greedy sup-norm clustering, keeping the best-converged representative."""
    order = np.argsort(residuals, kind="stable")
    kept = []
    for i in order:
        p = points[i]
        if all(np.max(np.abs(p - q)) > radius for q in kept):
            kept.append(p)
    return np.array(kept) if kept else np.empty((0, points.shape[-1]))


def _make_record(sys, x, eps, tol=FP_RESIDUAL_TOL) -> Optional[FixedPointRecord]:
    resid = float(_residual_sup(sys, x, eps))
    if resid > tol:
        return None
    grad = float(np.max(np.abs(potential_gradient(sys, x, eps))))
    if grad > FP_GRADIENT_TOL:
        log.debug("fixed point at %s rejected: gradient norm %g", x, grad)
        return None
    u = float(potential(sys, x, eps))
    return FixedPointRecord(
        x=np.asarray(x, dtype=float),
        eps_root=float(eps),
        potential_value=u,
        q_value=u,
        residual=resid,
        gradient_norm=grad,
    )


def _seed_lattice_2d(grid: int) -> np.ndarray:
    ax = np.linspace(0.03, 0.97, grid)
    inner = np.array([(a, b) for a in ax for b in ax])
    faces = np.concatenate(
        [
            np.stack([np.zeros(grid), ax], axis=1),
            np.stack([ax, np.zeros(grid)], axis=1),
            np.stack([ax, ax], axis=1),
        ]
    )
    return np.concatenate([inner, faces], axis=0)


def fixed_points(sys: SystemDefinition, eps: float, tol: float = FP_RESIDUAL_TOL,
                 cluster_radius: float = CLUSTER_RADIUS, grid: int = 7,
                 max_seeds: int = 10000, iter_tol: float = DEFAULT_ITER_TOL,
                 max_iter: int = DEFAULT_MAX_ITER) -> list[FixedPointRecord]:
    """Numerically enumerate the nontrivial fixed points at a given eps.

    d=2 systems get damped-Newton solves from a lattice of seeds (interior,
    boundary faces, and diagonal), which also finds unstable points; other
    dimensions fall back to forward iteration from a lattice, which finds the
    stable ones. The all-ones limit is always included. Enumeration is
    heuristic: nothing proves completeness.
    """
    if not 0.0 < eps <= 1.0:
        raise ValueError("eps must lie in (0, 1]")
    ones_lim = iterate_limit(sys, sys.ones(), eps, tol=iter_tol, max_iter=max_iter).limit
    if sys.d == 2:
        seeds = np.concatenate([_seed_lattice_2d(grid), ones_lim[None, :]], axis=0)
        cands, res = _newton_batch(sys, seeds, eps)
    else:
        per_axis = max(2, int(min(5, math.floor(max_seeds ** (1.0 / sys.d)))))
        axes = [np.linspace(0.0, 1.0, per_axis)] * sys.d
        mesh = np.meshgrid(*axes, indexing="ij")
        seeds = np.stack([m.ravel() for m in mesh], axis=-1)[:max_seeds]
        cands, _, _, _, _ = iterate_batch(sys, seeds, eps, tol=iter_tol, max_iter=max_iter)
        cands = np.concatenate([cands, ones_lim[None, :]], axis=0)
        res = _residual_sup(sys, cands, eps)
    good = (res <= tol) & (np.max(np.abs(cands), axis=-1) > 1e-7)
    pts = _cluster(cands[good], res[good], cluster_radius)
    records = []
    for p in pts:
        rec = _make_record(sys, p, eps, tol)
        if rec is not None:
            records.append(rec)
    records.sort(key=lambda r: tuple(r.x))
    return records


def energy_gap(sys: SystemDefinition, eps: float, **kwargs) -> float:
    """Minimum potential over the nontrivial fixed points; +inf when none exist."""
    fps = fixed_points(sys, eps, **kwargs)
    if not fps:
        return math.inf
    return min(r.potential_value for r in fps)


def potential_threshold(sys: SystemDefinition, tol: float = BISECT_TOL, **kwargs) -> float:
    """Largest eps at which every nontrivial fixed point has nonnegative potential."""

    def nonneg(eps: float) -> bool:
        return energy_gap(sys, eps, **kwargs) >= 0.0

    return _threshold_bisect(nonneg, tol, "potential_threshold")


def epsilon_of_x(sys: SystemDefinition, x, tol: float = FP_RESIDUAL_TOL) -> Optional[float]:
    """The unique channel parameter supporting x as a fixed point, if any.

    Bisection along the most eps-sensitive component, then a full-vector
    residual test; None when x is not a fixed point for any eps.
    """
    x = np.asarray(x, dtype=float)
    if np.max(np.abs(x)) <= 1e-12:
        raise ValueError("the zero state is excluded (fixed point at every eps)")
    s0 = _step_raw(sys, x, 0.0)
    s1 = _step_raw(sys, x, 1.0)
    j = int(np.argmax(s1 - s0))
    if s1[j] - s0[j] <= 1e-14:
        return None

    def h(e):
        return _step_raw(sys, x, e)[j] - x[j]

    if h(0.0) > tol or h(1.0) < -tol:
        return None
    lo, hi = 0.0, 1.0
    for _ in range(BISECT_MAX_HALVINGS):
        mid = 0.5 * (lo + hi)
        if h(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    if float(_residual_sup(sys, x, root)) >= tol:
        return None
    return root


def fixed_point_potential(sys: SystemDefinition, x) -> float:
    """Q(x): the potential of a fixed point at its own supporting eps."""
    root = epsilon_of_x(sys, x)
    if root is None:
        raise ValueError("x is not a fixed point of the recursion for any eps")
    return float(potential(sys, x, root))


def maxwell_threshold(sys: SystemDefinition, tol: float = BISECT_TOL, **kwargs) -> float:
    """Smallest eps at which some fixed point attains negative Q.

    Each candidate's supporting eps is re-derived through epsilon_of_x, so
    this bisection is an independent cross-check of potential_threshold.
    """

    def no_negative_q(eps: float) -> bool:
        fps = fixed_points(sys, eps, **kwargs)
        if not fps:
            return True
        qmin = math.inf
        for r in fps:
            root = epsilon_of_x(sys, r.x)
            q = float(potential(sys, r.x, root)) if root is not None else r.q_value
            qmin = min(qmin, q)
        return qmin >= 0.0

    return _threshold_bisect(no_negative_q, tol, "maxwell_threshold")


# ---------------------------------------------------------------------------
# fixed-point curve tracing
# ---------------------------------------------------------------------------


def _newton_trace(sys, x1, u0, res_tol=1e-12, fd_h=1e-7):
    """Solve the two residual equations for (x2, eps) at pinned x1."""
    u = np.array(u0, dtype=float)
    for _ in range(NEWTON_MAX_ITER):
        xv = np.array([x1, u[0]])
        R = xv - _step_raw(sys, xv, u[1])
        res = np.max(np.abs(R))
        if res <= res_tol:
            return u, res
        J = np.empty((2, 2))
        xp = np.array([x1, u[0] + fd_h])
        xm = np.array([x1, u[0] - fd_h])
        J[:, 0] = ((xp - _step_raw(sys, xp, u[1])) - (xm - _step_raw(sys, xm, u[1]))) / (2 * fd_h)
        ep, em = u[1] + fd_h, u[1] - fd_h
        J[:, 1] = ((xv - _step_raw(sys, xv, ep)) - (xv - _step_raw(sys, xv, em))) / (2 * fd_h)
        try:
            du = np.linalg.solve(J + 1e-13 * np.eye(2), R)
        except np.linalg.LinAlgError:
            return u, res
        t = 1.0
        for _ in range(8):
            cand = u - t * du
            cand[0] = min(max(cand[0], 0.0), 1.0)
            xv = np.array([x1, cand[0]])
            rnew = np.max(np.abs(xv - _step_raw(sys, xv, cand[1])))
            if rnew <= (1.0 - 0.25 * t) * res or t < 1.0 / 64:
                u = cand
                break
            t *= NEWTON_DAMPING
    xv = np.array([x1, u[0]])
    return u, float(np.max(np.abs(xv - _step_raw(sys, xv, u[1]))))


def trace_fixed_point_curve(sys: SystemDefinition, n_points: int = 200,
                            tol: float = FP_RESIDUAL_TOL) -> list[FixedPointRecord]:
    """Trace the fixed-point branch through the all-ones limit at eps=1.

    For d=2 the first component is swept downward from the eps=1 endpoint
    with Newton continuation solving for (x2, eps); the curve leaves through
    eps=1 again on the unstable side. Other dimensions fall back to
    enumerating fixed points on an eps grid. Diverged grid points are skipped
    and logged.
    """
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    records: list[FixedPointRecord] = []
    x_star = iterate_limit(sys, sys.ones(), 1.0).limit
    if np.max(x_star) < 1e-9:
        log.warning("trace_fixed_point_curve: all-ones limit at eps=1 is zero; empty curve")
        return records
    if sys.d != 2:
        for e in np.linspace(0.05, 1.0, n_points):
            records.extend(fixed_points(sys, float(e)))
        if not records:
            log.warning("trace_fixed_point_curve: no fixed points found on the eps grid")
        return records
    rec = _make_record(sys, x_star, 1.0, tol)
    if rec is not None:
        records.append(rec)
    x1_grid = np.linspace(x_star[0], max(x_star[0] / n_points, 1e-3), n_points)[1:]
    last_x1 = x_star[0]
    u = np.array([x_star[1], 1.0])
    slope = np.zeros(2)  # d(x2, eps)/d(x1), for the continuation predictor

    def solve_step(x1_from, u_from, sl, x1_to, depth=0):
        """Predictor-corrector advance; splits the step when the corrector
        diverges or hops off the branch (pitchforks at symmetric folds)."""
        dx = x1_to - x1_from
        seed = u_from + sl * dx
        u_new, res = _newton_trace(sys, x1_to, seed)
        jump_tol = max(0.06, 12.0 * abs(dx))
        if res <= tol and np.max(np.abs(u_new - seed)) <= jump_tol:
            return u_new
        if depth >= 6:
            return None
        mid = 0.5 * (x1_from + x1_to)
        u_mid = solve_step(x1_from, u_from, sl, mid, depth + 1)
        if u_mid is None:
            return None
        sl_mid = (u_mid - u_from) / (mid - x1_from)
        return solve_step(mid, u_mid, sl_mid, x1_to, depth + 1)

    for x1 in x1_grid:
        u_try = solve_step(last_x1, u, slope, x1)
        if u_try is None:
            log.info("curve tracing: Newton diverged at x1=%g; point skipped", x1)
            continue
        if u_try[1] > 1.0 + 1e-6 or u_try[1] <= 0.0:
            break  # branch left the parameter range
        rec = _make_record(sys, np.array([x1, u_try[0]]), min(u_try[1], 1.0), tol)
        if rec is not None:
            records.append(rec)
            slope = (u_try - u) / (x1 - last_x1)
            u = u_try
            last_x1 = x1
    if not records:
        log.warning("trace_fixed_point_curve: empty output")
    return records


# ---------------------------------------------------------------------------
# aggregated report
# ---------------------------------------------------------------------------


@dataclass
class ThresholdReport:
    system: str
    bp_threshold: float
    potential_threshold: float
    maxwell_threshold: float
    energy_gap_curve: list = field(default_factory=list)  # (eps, gap) pairs
    tolerances: dict = field(default_factory=dict)
    enumeration: str = "heuristic"

    def validate(self):
        tol = self.tolerances.get("bisect_tol", BISECT_TOL)
        if self.bp_threshold > self.potential_threshold + 2 * tol:
            raise ValueError(
                f"threshold ordering violated: bp {self.bp_threshold} > "
                f"potential {self.potential_threshold}"
            )
        if abs(self.potential_threshold - self.maxwell_threshold) > 2 * tol:
            raise ValueError(
                f"potential threshold {self.potential_threshold} and maxwell "
                f"threshold {self.maxwell_threshold} disagree beyond 2*tol"
            )


def threshold_report(sys: SystemDefinition, gap_grid=None, tol: float = BISECT_TOL) -> ThresholdReport:
    """Compute all three thresholds and an energy-gap curve."""
    bp = bp_threshold(sys, tol)
    pot = potential_threshold(sys, tol)
    mx = maxwell_threshold(sys, tol)
    if gap_grid is None:
        lo = max(bp - 0.02, 0.02)
        gap_grid = np.linspace(lo, min(1.0, pot + 0.1), 13)
    curve = [(float(e), float(energy_gap(sys, float(e)))) for e in gap_grid]
    rep = ThresholdReport(
        system=sys.name,
        bp_threshold=bp,
        potential_threshold=pot,
        maxwell_threshold=mx,
        energy_gap_curve=curve,
        tolerances={
            "bisect_tol": tol,
            "zero_tol": ZERO_TOL,
            "fp_residual_tol": FP_RESIDUAL_TOL,
            "fp_gradient_tol": FP_GRADIENT_TOL,
        },
    )
    rep.validate()
    return rep
