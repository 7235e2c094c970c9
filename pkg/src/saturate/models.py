"""Constructors for the three worked erasure systems.

Each factory returns a SystemDefinition with closed-form energies whose
gradients reproduce the update maps (checked by verify_admissible), plus a
compiled-kernel parameterization where the structure allows one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as _poly

from .degdist import EdgePolynomial, design_rate, node_from_edge
from .kernels import ProtographKernel, TwoUserKernel
from .system import SystemDefinition

_PATH_TOL = 1e-12


# ---------------------------------------------------------------------------
# channel-parameter paths for the two-user systems
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiagonalPath:
    """eps -> (eps, eps)."""

    def __call__(self, eps: float):
        return eps, eps

    def describe(self) -> str:
        return "diagonal: eps -> (eps, eps)"

    thetas = (1.0, 1.0)


@dataclass(frozen=True)
class ScaledPath:
    """eps -> (eps, theta * eps) with theta in [0, 1]."""

    theta: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")

    def __call__(self, eps: float):
        return eps, self.theta * eps

    def describe(self) -> str:
        return f"scaled: eps -> (eps, {self.theta} * eps)"

    @property
    def thetas(self):
        return (1.0, self.theta)


@dataclass(frozen=True)
class TablePath:
    """Piecewise-linear monotone table eps -> (eps1, eps2), starting at (0, 0)."""

    knots: np.ndarray
    eps1: np.ndarray
    eps2: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.knots, dtype=float)
        e1 = np.asarray(self.eps1, dtype=float)
        e2 = np.asarray(self.eps2, dtype=float)
        if not (k.shape == e1.shape == e2.shape) or k.ndim != 1 or k.size < 2:
            raise ValueError("table path needs matching 1-d knot/value arrays (>= 2 points)")
        if abs(k[0]) > _PATH_TOL or abs(e1[0]) > _PATH_TOL or abs(e2[0]) > _PATH_TOL:
            raise ValueError("path must start at eps=0 with value (0, 0)")
        if np.any(np.diff(k) <= 0):
            raise ValueError("knots must be strictly increasing")
        if np.any(np.diff(e1) < 0) or np.any(np.diff(e2) < 0):
            raise ValueError("path values must be componentwise non-decreasing")
        if k[-1] < 1.0 - _PATH_TOL:
            raise ValueError("knots must reach eps=1")
        if np.any((e1 < 0) | (e1 > 1) | (e2 < 0) | (e2 > 1)):
            raise ValueError("path values must lie in [0, 1]")
        object.__setattr__(self, "knots", k)
        object.__setattr__(self, "eps1", e1)
        object.__setattr__(self, "eps2", e2)

    def __call__(self, eps: float):
        return (
            float(np.interp(eps, self.knots, self.eps1)),
            float(np.interp(eps, self.knots, self.eps2)),
        )

    def describe(self) -> str:
        return f"table with {len(self.knots)} knots"

    thetas = None  # not affine in eps; no compiled kernel


# ---------------------------------------------------------------------------
# Slepian-Wolf with erasures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SlepianWolfParams:
    """Two punctured LDPC codes over correlated erasure sources.

    gamma is the punctured fraction (the paper's model makes it the common
    design rate; it stays a free parameter here, with gamma=0 reducing each
    user to a plain BEC recursion). p is the probability that the two source
    symbols coincide. The two codes must have equal design rates.
    """

    lam1: EdgePolynomial
    rho1: EdgePolynomial
    lam2: EdgePolynomial
    rho2: EdgePolynomial
    gamma: float
    p: float
    path: object = field(default_factory=DiagonalPath)

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        r1 = design_rate(self.lam1, self.rho1)
        r2 = design_rate(self.lam2, self.rho2)
        if abs(r1 - r2) > 1e-9:
            raise ValueError(
                f"users must share a design rate (got {r1} vs {r2}); "
                "the closed-form energies assume a single gamma"
            )
        if not callable(self.path):
            raise ValueError("path must be callable")


def _two_user_pieces(lam1, rho1, lam2, rho2):
    L1, Lp1 = node_from_edge(lam1)
    L2, Lp2 = node_from_edge(lam2)
    R1, Rp1 = node_from_edge(rho1)
    R2, Rp2 = node_from_edge(rho2)

    lam1c, lam2c = lam1.coeffs, lam2.coeffs
    rho1c, rho2c = rho1.coeffs, rho2.coeffs
    L1c, L2c = L1.coeffs, L2.coeffs
    R1c, R2c = R1.coeffs, R2.coeffs

    def check_update(x):
        x = np.asarray(x, dtype=float)
        return np.stack(
            [
                1.0 - _poly.polyval(1.0 - x[..., 0], rho1c),
                1.0 - _poly.polyval(1.0 - x[..., 1], rho2c),
            ],
            axis=-1,
        )

    def check_energy(x):
        x = np.asarray(x, dtype=float)
        t1 = x[..., 0] + (_poly.polyval(1.0 - x[..., 0], R1c) - 1.0) / Rp1
        t2 = x[..., 1] + (_poly.polyval(1.0 - x[..., 1], R2c) - 1.0) / Rp2
        return Lp1 * t1 + Lp2 * t2

    pieces = {
        "lam1c": lam1c,
        "lam2c": lam2c,
        "rho1c": rho1c,
        "rho2c": rho2c,
        "L1c": L1c,
        "L2c": L2c,
        "Lp1": Lp1,
        "Lp2": Lp2,
        "check_update": check_update,
        "check_energy": check_energy,
    }
    return pieces


def make_slepian_wolf(params: SlepianWolfParams) -> SystemDefinition:
    """Joint decoder of two punctured LDPC codes over correlated erasures.

    The per-user channel factor is psi(y; e) = (1-gamma)*e + gamma*(1-p+p*y)
    evaluated at the other user's node polynomial, with the channel pair
    (e1, e2) produced by the configured path.
    """
    gamma, p, path = params.gamma, params.p, params.path
    pieces = _two_user_pieces(params.lam1, params.rho1, params.lam2, params.rho2)
    lam1c, lam2c = pieces["lam1c"], pieces["lam2c"]
    L1c, L2c = pieces["L1c"], pieces["L2c"]

    def psi(y, e):
        return (1.0 - gamma) * e + gamma * (1.0 - p + p * y)

    def bit_update(y, eps):
        y = np.asarray(y, dtype=float)
        e1, e2 = path(eps)
        u1 = psi(_poly.polyval(y[..., 1], L2c), e1) * _poly.polyval(y[..., 0], lam1c)
        u2 = psi(_poly.polyval(y[..., 0], L1c), e2) * _poly.polyval(y[..., 1], lam2c)
        return np.stack([u1, u2], axis=-1)

    def bit_energy(x, eps):
        x = np.asarray(x, dtype=float)
        e1, e2 = path(eps)
        l1 = _poly.polyval(x[..., 0], L1c)
        l2 = _poly.polyval(x[..., 1], L2c)
        return psi(l1, e2) * l2 + psi(l2, e1) * l1 - gamma * p * l1 * l2

    kernel = None
    thetas = getattr(path, "thetas", None)
    if thetas is not None:
        kernel = TwoUserKernel(
            lam1=lam1c,
            rho1=pieces["rho1c"],
            node1=L1c,
            lam2=lam2c,
            rho2=pieces["rho2c"],
            node2=L2c,
            psi1=np.array([gamma * (1.0 - p), (1.0 - gamma) * thetas[0], gamma * p, 0.0]),
            psi2=np.array([gamma * (1.0 - p), (1.0 - gamma) * thetas[1], gamma * p, 0.0]),
        )

    return SystemDefinition(
        d=2,
        weights=np.array([pieces["Lp1"], pieces["Lp2"]]),
        bit_update=bit_update,
        check_update=pieces["check_update"],
        bit_energy=bit_energy,
        check_energy=pieces["check_energy"],
        name=f"slepian_wolf(gamma={gamma}, p={p})",
        path_description=path.describe() if hasattr(path, "describe") else "custom path",
        kernel=kernel,
        zero_param_exact=(gamma == 0.0),
        trial_entropy_scale=1.0 / (1.0 - gamma),
    )


# ---------------------------------------------------------------------------
# two-user erasure multiple-access channel
# ---------------------------------------------------------------------------


def make_emac(
    lam1: EdgePolynomial,
    rho1: EdgePolynomial,
    lam2: EdgePolynomial,
    rho2: EdgePolynomial,
) -> SystemDefinition:
    """Joint decoder of two LDPC codes over the erasure multiple-access channel.

    The channel factor is psi(y; eps) = eps + (1-eps)*y/2: an unresolved
    collision with the other user halves the surviving information even on a
    perfect channel, so the zero-parameter boundary conditions hold only
    approximately (declared informational).
    """
    pieces = _two_user_pieces(lam1, rho1, lam2, rho2)
    lam1c, lam2c = pieces["lam1c"], pieces["lam2c"]
    L1c, L2c = pieces["L1c"], pieces["L2c"]

    def bit_update(y, eps):
        y = np.asarray(y, dtype=float)
        p1 = eps + (1.0 - eps) * _poly.polyval(y[..., 1], L2c) / 2.0
        p2 = eps + (1.0 - eps) * _poly.polyval(y[..., 0], L1c) / 2.0
        return np.stack(
            [p1 * _poly.polyval(y[..., 0], lam1c), p2 * _poly.polyval(y[..., 1], lam2c)],
            axis=-1,
        )

    def bit_energy(x, eps):
        x = np.asarray(x, dtype=float)
        l1 = _poly.polyval(x[..., 0], L1c)
        l2 = _poly.polyval(x[..., 1], L2c)
        return eps * (l1 + l2) + (1.0 - eps) * l1 * l2 / 2.0

    kernel = TwoUserKernel(
        lam1=lam1c,
        rho1=pieces["rho1c"],
        node1=L1c,
        lam2=lam2c,
        rho2=pieces["rho2c"],
        node2=L2c,
        psi1=np.array([0.0, 1.0, 0.5, -0.5]),
        psi2=np.array([0.0, 1.0, 0.5, -0.5]),
    )

    return SystemDefinition(
        d=2,
        weights=np.array([pieces["Lp1"], pieces["Lp2"]]),
        bit_update=bit_update,
        check_update=pieces["check_update"],
        bit_energy=bit_energy,
        check_energy=pieces["check_energy"],
        name="emac",
        path_description="single channel parameter",
        kernel=kernel,
        zero_param_exact=False,
        trial_entropy_scale=1.0,
    )


# ---------------------------------------------------------------------------
# protograph ensembles on the BEC
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProtographSpec:
    """An m x n protograph parity-check matrix with per-edge recursion state.

    The recursion dimension equals the number of nonzero entries; entry k
    keeps its row r(k), column c(k) and value e(k). node_scale optionally
    scales the channel seen by each bit column (eps_j = scale_j * eps);
    punctured_columns pins eps_j = 1, which leaves the strict setting of the
    admissibility conditions (flagged on the resulting system).
    """

    H: np.ndarray
    node_scale: Optional[Sequence[float]] = None
    punctured_columns: frozenset = frozenset()

    def __post_init__(self):
        H = np.asarray(self.H)
        if H.ndim != 2 or H.size == 0:
            raise ValueError("protograph matrix must be 2-d and nonempty")
        if not np.issubdtype(H.dtype, np.integer):
            if not np.all(H == np.round(H)):
                raise ValueError("protograph entries must be nonnegative integers")
            H = H.astype(np.int64)
        if np.any(H < 0):
            raise ValueError("protograph entries must be nonnegative")
        if np.any(H.sum(axis=1) == 0) or np.any(H.sum(axis=0) == 0):
            raise ValueError("every protograph row and column needs a nonzero entry")
        object.__setattr__(self, "H", H)
        m, n = H.shape
        scale = np.ones(n) if self.node_scale is None else np.asarray(self.node_scale, float)
        if scale.shape != (n,):
            raise ValueError(f"node_scale must have one entry per column ({n})")
        if np.any((scale <= 0.0) | (scale > 1.0)):
            raise ValueError("node_scale entries must lie in (0, 1]")
        object.__setattr__(self, "node_scale", scale)
        punct = frozenset(int(j) for j in self.punctured_columns)
        if any(j < 0 or j >= n for j in punct):
            raise ValueError("punctured column index out of range")
        object.__setattr__(self, "punctured_columns", punct)

    @property
    def n_edges(self) -> int:
        return int(np.count_nonzero(self.H))


def make_protograph(spec: ProtographSpec) -> SystemDefinition:
    """Per-edge erasure recursion of a protograph ensemble.

    Bit updates multiply the column-adjacent edge states (channel times
    x_i^(e_i), less one copy of the incident edge); check updates do the same
    with 1-x over row-adjacent edges.
    """
    H = spec.H
    rows, cols = np.nonzero(H)
    expo = H[rows, cols].astype(np.int64)
    d = len(rows)
    row = rows.astype(np.int64)
    col = cols.astype(np.int64)
    n_cols = H.shape[1]
    scale = np.asarray(spec.node_scale, float)
    fixed = np.zeros(n_cols, dtype=bool)
    for j in spec.punctured_columns:
        fixed[j] = True

    def col_eps(eps):
        return np.where(fixed, 1.0, scale * eps)

    def check_update(x):
        x = np.asarray(x, dtype=float)
        om = 1.0 - x
        out = np.empty_like(x)
        for k in range(d):
            acc = np.ones(x.shape[:-1])
            for j in range(d):
                if row[j] == row[k]:
                    ex = expo[j] - (1 if j == k else 0)
                    if ex > 0:
                        acc = acc * om[..., j] ** ex
            out[..., k] = 1.0 - acc
        return out

    def bit_update(y, eps):
        y = np.asarray(y, dtype=float)
        ce = col_eps(eps)
        out = np.empty_like(y)
        for k in range(d):
            acc = np.full(y.shape[:-1], ce[col[k]])
            for j in range(d):
                if col[j] == col[k]:
                    ex = expo[j] - (1 if j == k else 0)
                    if ex > 0:
                        acc = acc * y[..., j] ** ex
            out[..., k] = acc
        return out

    def bit_energy(x, eps):
        x = np.asarray(x, dtype=float)
        ce = col_eps(eps)
        out = np.zeros(x.shape[:-1])
        for j in range(n_cols):
            acc = np.full(x.shape[:-1], ce[j])
            for i in range(d):
                if col[i] == j:
                    acc = acc * x[..., i] ** expo[i]
            out = out + acc
        return out

    def check_energy(x):
        x = np.asarray(x, dtype=float)
        om = 1.0 - x
        out = np.einsum("...k,k->...", x, expo.astype(float))
        for i in range(H.shape[0]):
            acc = np.ones(x.shape[:-1])
            for j in range(d):
                if row[j] == i:
                    acc = acc * om[..., j] ** expo[j]
            out = out - (1.0 - acc)
        return out

    kernel = ProtographKernel(row=row, col=col, expo=expo, col_scale=scale, col_fixed=fixed)
    return SystemDefinition(
        d=d,
        weights=expo.astype(float),
        bit_update=bit_update,
        check_update=check_update,
        bit_energy=bit_energy,
        check_energy=check_energy,
        name=f"protograph{H.tolist()}",
        path_description="uniform channel" if spec.node_scale is None else "scaled per-column channel",
        kernel=kernel,
        zero_param_exact=(len(spec.punctured_columns) == 0),
        trial_entropy_scale=None,
    )


def regular_protograph(dv: int, dc: int) -> SystemDefinition:
    """Single-row protograph [dv dv ... dv] realizing a (dv, dc)-regular ensemble."""
    if dc % dv != 0:
        raise ValueError("dc must be a multiple of dv for a single-row protograph")
    return make_protograph(ProtographSpec(H=np.array([[dv] * (dc // dv)])))
