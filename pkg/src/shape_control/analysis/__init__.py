"""Dynamics, sensitivities, adjoints and control of the semi-discrete equations."""

from shape_control.analysis.adjoint import (
    AdjointTrajectory,
    check_ndd,
    control_map_transpose,
    duality_check,
    layer1_pairing,
    propagate_zeros,
    solve_adjoint_heat,
    solve_adjoint_wave,
    unique_continuation_check,
)
from shape_control.analysis.control import (
    ControlMapMatrix,
    ControlOptions,
    ControlSolution,
    assemble_control_map,
    empirical_basin,
    manufactured_target,
    solve_control,
    surjectivity_report,
    trace_map,
)
from shape_control.analysis.dynamics import (
    ConstantSource,
    ExpressionSource,
    SeparableSource,
    SourceTerm,
    StateTrajectory,
    TabulatedSource,
    reference_state,
    solve_heat,
    solve_wave,
)
from shape_control.analysis.problem import ControlProblem
from shape_control.analysis.sensitivity import (
    LinearizedState,
    derivative_continuity,
    frechet_residual,
    gateaux_heat,
    gateaux_wave,
)

__all__ = [
    "AdjointTrajectory",
    "ConstantSource",
    "ControlMapMatrix",
    "ControlOptions",
    "ControlProblem",
    "ControlSolution",
    "ExpressionSource",
    "LinearizedState",
    "SeparableSource",
    "SourceTerm",
    "StateTrajectory",
    "TabulatedSource",
    "assemble_control_map",
    "check_ndd",
    "control_map_transpose",
    "derivative_continuity",
    "duality_check",
    "empirical_basin",
    "frechet_residual",
    "gateaux_heat",
    "gateaux_wave",
    "layer1_pairing",
    "manufactured_target",
    "propagate_zeros",
    "reference_state",
    "solve_adjoint_heat",
    "solve_adjoint_wave",
    "solve_control",
    "solve_heat",
    "solve_wave",
    "surjectivity_report",
    "trace_map",
    "unique_continuation_check",
]
