"""Density-evolution potential analysis for coupled vector recursions."""

from .coupled import (
    CoupledRunReport,
    CoupledState,
    CouplingSpec,
    coupled_bp_threshold,
    coupled_gradient,
    coupled_limit,
    coupled_potential,
    coupled_step,
    hessian_bound,
    min_coupling_width,
    one_sided_step,
    shift,
    verify_shift_lemmas,
)
from .degdist import EdgePolynomial, NodePolynomial, design_rate, node_from_edge
from .models import (
    DiagonalPath,
    ProtographSpec,
    ScaledPath,
    SlepianWolfParams,
    TablePath,
    make_emac,
    make_protograph,
    make_slepian_wolf,
    regular_protograph,
)
from .potential import (
    FixedPointRecord,
    ThresholdReport,
    bp_threshold,
    energy_gap,
    epsilon_of_x,
    fixed_point_potential,
    fixed_points,
    maxwell_threshold,
    potential,
    potential_gradient,
    potential_quadrature,
    potential_threshold,
    threshold_report,
    trace_fixed_point_curve,
)
from .system import (
    AdmissibilityReport,
    IterationResult,
    SystemDefinition,
    iterate_limit,
    step,
    verify_admissible,
)

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityReport",
    "CoupledRunReport",
    "CoupledState",
    "CouplingSpec",
    "DiagonalPath",
    "EdgePolynomial",
    "FixedPointRecord",
    "IterationResult",
    "NodePolynomial",
    "ProtographSpec",
    "ScaledPath",
    "SlepianWolfParams",
    "SystemDefinition",
    "TablePath",
    "ThresholdReport",
    "bp_threshold",
    "coupled_bp_threshold",
    "coupled_gradient",
    "coupled_limit",
    "coupled_potential",
    "coupled_step",
    "design_rate",
    "energy_gap",
    "epsilon_of_x",
    "fixed_point_potential",
    "fixed_points",
    "hessian_bound",
    "iterate_limit",
    "make_emac",
    "make_protograph",
    "make_slepian_wolf",
    "maxwell_threshold",
    "min_coupling_width",
    "node_from_edge",
    "one_sided_step",
    "potential",
    "potential_gradient",
    "potential_quadrature",
    "potential_threshold",
    "regular_protograph",
    "shift",
    "step",
    "threshold_report",
    "trace_fixed_point_curve",
    "verify_admissible",
    "verify_shift_lemmas",
    "__version__",
]
