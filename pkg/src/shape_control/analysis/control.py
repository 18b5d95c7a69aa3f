"""
The trace map Λ_h, its Jacobian and the local controllability solver.

Λ_h maps a deformation path to the final trace u_φ(T) (heat) or
(u_φ(T), ∂_t u_φ(T)) (wave). Column (j, k) of the control map G = dΛ_h(φ) is
the final linearized response to the unit basis path on boundary row j and
segment k.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from shape_control.analysis.adjoint import check_ndd, unique_continuation_check
from shape_control.analysis.problem import ControlProblem
from shape_control.analysis.sensitivity import gateaux
from shape_control.config import Config
from shape_control.constants import (
    DEFAULT_CONTROL_TOL,
    DEFAULT_DAMPING,
    DEFAULT_MANUFACTURED_RADIUS,
    DEFAULT_MAX_HALVINGS,
    DEFAULT_MAX_ITER,
    DEFAULT_RANK_TOLERANCE,
    DEFAULT_UC_TRIALS,
    PINV_CUTOFF,
)
from shape_control.discretization.base import (
    ContractError,
    NonConvergenceError,
    RankDeficiencyError,
    ShapeControlError,
)
from shape_control.discretization.operators import DeformationPath
from shape_control.models.reports import BasinReport, NDDReport, SurjectivityReport

logger = logging.getLogger(__name__)

__all__ = [
    "ControlMapMatrix",
    "ControlOptions",
    "ControlSolution",
    "assemble_control_map",
    "empirical_basin",
    "manufactured_target",
    "pseudoinverse",
    "solve_control",
    "surjectivity_report",
    "trace_map",
]


def trace_map(path: DeformationPath, problem: ControlProblem) -> np.ndarray:
    """
    Λ_h(φ): final trace of the perturbed solve.

    Raises:
        ContractError: If the path basis differs from the problem's
        AdmissibilityError: If the path is not admissible
    """
    problem.check_path(path)
    path.check_admissible()
    return problem.solve(path).final_state


@dataclass
class ControlMapMatrix:
    """
    Dense control map G with its singular values.

    Attributes:
        matrix: G, shape (state_dim, (N - 1)·K), column index (j - 1)·K + k
        singular_values: σ₁ ≥ ... ≥ σ_r ≥ 0
        kind: "heat" or "wave"
    """

    matrix: np.ndarray
    singular_values: np.ndarray
    kind: str

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def columns(self) -> int:
        return self.matrix.shape[1]

    def rank(self, rank_tolerance: float = DEFAULT_RANK_TOLERANCE) -> int:
        """Number of σ above rank_tolerance·σ₁."""
        if not self.singular_values.size or self.singular_values[0] == 0.0:
            return 0
        return int(np.sum(self.singular_values > rank_tolerance * self.singular_values[0]))

    def surjectivity(
        self, rank_tolerance: float = DEFAULT_RANK_TOLERANCE, **extra: Any
    ) -> SurjectivityReport:
        """SVD certificate; ``extra`` fills the NDD and unique-continuation fields."""
        sigma = self.singular_values
        sigma_max = float(sigma[0]) if sigma.size else 0.0
        # Fewer columns than rows leaves σ_min of the row space at zero.
        sigma_min = float(sigma[-1]) if sigma.size and self.columns >= self.rows else 0.0
        surjective = sigma_min > rank_tolerance * sigma_max and self.columns >= self.rows
        return SurjectivityReport(
            kind=self.kind,
            rows=self.rows,
            columns=self.columns,
            singular_values=sigma.tolist(),
            sigma_max=sigma_max,
            sigma_min=sigma_min,
            condition=sigma_max / sigma_min if sigma_min > 0 else None,
            rank=self.rank(rank_tolerance),
            rank_tolerance=rank_tolerance,
            verdict="surjective" if surjective else "deficient",
            **extra,
        )


def assemble_control_map(
    problem: ControlProblem,
    path: Optional[DeformationPath] = None,
    max_workers: Optional[int] = None,
) -> ControlMapMatrix:
    """
    Assemble G = dΛ_h(φ) column by column.

    Columns are independent linearized solves run on a thread pool; they are
    collected in (j, k) order so the result does not depend on scheduling.

    Args:
        problem: Control problem
        path: Base path (None for φ = 0)
        max_workers: Threads; defaults to Config.get_max_workers()

    Returns:
        ControlMapMatrix with its singular values
    """
    if path is not None:
        problem.check_path(path)
    reference = problem.reference() if path is None else problem.solve(path)
    directions = [
        problem.basis_path(j, k) for j in range(1, problem.grid.n_layer1 + 1) for k in range(problem.K)
    ]
    workers = max_workers if max_workers is not None else Config.get_max_workers()

    def column(direction: DeformationPath) -> np.ndarray:
        return gateaux(path, direction, reference, problem.grid).final_state

    logger.debug(f"Assembling {len(directions)} control-map columns on {workers} threads")
    with ThreadPoolExecutor(max_workers=workers) as executor:
        columns = list(executor.map(column, directions))

    matrix = np.column_stack(columns)
    singular_values = linalg.svdvals(matrix)
    return ControlMapMatrix(matrix=matrix, singular_values=singular_values, kind=problem.kind.value)


def surjectivity_report(
    problem: ControlProblem,
    rank_tolerance: float = DEFAULT_RANK_TOLERANCE,
    uc_trials: int = DEFAULT_UC_TRIALS,
    seed: Optional[int] = None,
    control_map: Optional[ControlMapMatrix] = None,
    ndd: Optional[NDDReport] = None,
) -> SurjectivityReport:
    """
    SVD certificate of dΛ_h(0) combined with the unique-continuation chain.

    Both certificates must agree: G is surjective exactly when no nonzero
    terminal vector annihilates every pairing.
    """
    if control_map is None:
        control_map = assemble_control_map(problem)
    if ndd is None:
        ndd = check_ndd(problem.reference())
    uc = unique_continuation_check(problem, trials=uc_trials, seed=seed, ndd=ndd) if uc_trials else None
    report = control_map.surjectivity(rank_tolerance, ndd=ndd, unique_continuation=uc)
    if uc is not None:
        report.certificates_agree = report.surjective == (uc.verdict == "unique")
        if not report.certificates_agree:
            logger.warning(
                f"Surjectivity certificates disagree: SVD says {report.verdict}, "
                f"unique continuation says {uc.verdict}"
            )
    if not report.surjective:
        logger.warning(
            f"Control map is deficient: σ_min = {report.sigma_min:.3g}, σ₁ = {report.sigma_max:.3g}, "
            f"{report.columns} columns for {report.rows} rows"
        )
    return report


def pseudoinverse(matrix: np.ndarray, cutoff: float = PINV_CUTOFF) -> np.ndarray:
    """SVD pseudoinverse dropping σ < cutoff·σ₁."""
    U, s, Vt = linalg.svd(matrix, full_matrices=False)
    if not s.size or s[0] == 0.0:
        return np.zeros(matrix.T.shape)
    keep = s > cutoff * s[0]
    return (Vt[keep].T / s[keep]) @ U[:, keep].T


@dataclass
class ControlOptions:
    """
    Gauss-Newton settings.

    Attributes:
        max_iter: Iteration cap
        tol: Relative trace residual ‖Λ_h(φ) − target‖/‖target‖ to reach
        damping: Factor applied to a rejected step
        max_halvings: Rejected steps per iteration before the solver stalls
        rank_tolerance: Relative σ threshold of the rank checks
        max_workers: Threads for the control-map columns
    """

    max_iter: int = DEFAULT_MAX_ITER
    tol: float = DEFAULT_CONTROL_TOL
    damping: float = DEFAULT_DAMPING
    max_halvings: int = DEFAULT_MAX_HALVINGS
    rank_tolerance: float = DEFAULT_RANK_TOLERANCE
    max_workers: Optional[int] = None


@dataclass
class ControlSolution:
    """
    Outcome of ``solve_control``.

    Attributes:
        path: Admissible path reaching the target
        residual_history: ‖Λ_h(φ_k) − target‖ for k = 0, 1, ...
        iterations: Gauss-Newton iterations taken
        target_norm: ‖target‖
        report: Surjectivity certificate of the last Jacobian, None at iteration 0
    """

    path: DeformationPath
    residual_history: List[float]
    iterations: int
    target_norm: float
    report: Optional[SurjectivityReport] = None
    step_sizes: List[float] = field(default_factory=list)

    @property
    def relative_residual(self) -> float:
        final = self.residual_history[-1]
        return final / self.target_norm if self.target_norm > 0 else final

    def to_dict(self) -> Dict[str, Any]:
        return {
            "path": self.path.to_dict(),
            "iterations": self.iterations,
            "residual_history": list(self.residual_history),
            "relative_residual": self.relative_residual,
            "step_sizes": list(self.step_sizes),
        }


def solve_control(problem: ControlProblem, options: Optional[ControlOptions] = None) -> ControlSolution:
    """
    Find an admissible path with Λ_h(φ) ≈ target by damped Gauss-Newton.

    Each iteration takes δ = G(φ_k)⁺(target − Λ_h(φ_k)), halves the step
    until the projected trial strictly lowers the residual, and stops once
    the residual is at most tol·‖target‖.

    Raises:
        ContractError: If the problem has no target
        RankDeficiencyError: If G(φ_k) has rank below min(rows, columns)
        NonConvergenceError: If the line search stalls or max_iter is reached
    """
    options = options or ControlOptions()
    if problem.target is None:
        raise ContractError("solve_control needs a target")
    target = problem.target
    target_norm = float(np.linalg.norm(target))
    goal = options.tol * target_norm

    path = problem.zero_path()
    residual = float(np.linalg.norm(target - problem.reference().final_state))
    history = [residual]
    steps_taken: List[float] = []
    logger.info(f"Gauss-Newton start: residual {residual:.6g}, goal {goal:.3g}")
    if residual <= goal:
        return ControlSolution(path, history, 0, target_norm, step_sizes=steps_taken)

    trace = problem.reference().final_state
    report: Optional[SurjectivityReport] = None
    for iteration in range(1, options.max_iter + 1):
        control_map = assemble_control_map(
            problem, None if path.is_zero() else path, max_workers=options.max_workers
        )
        report = control_map.surjectivity(options.rank_tolerance)
        if report.rank < min(control_map.rows, control_map.columns):
            raise RankDeficiencyError(
                f"Control map lost rank at iteration {iteration}: rank {report.rank} "
                f"< {min(control_map.rows, control_map.columns)}",
                report=report,
            )
        if not report.surjective:
            logger.warning(
                f"Iteration {iteration}: control map is not surjective "
                f"({report.rows} rows, {report.columns} columns)"
            )

        delta = pseudoinverse(control_map.matrix) @ (target - trace)
        step = 1.0
        accepted: Optional[Tuple[DeformationPath, np.ndarray, float]] = None
        for _ in range(options.max_halvings + 1):
            trial = path.with_vector(path.to_vector() + step * delta).projected()
            trial_trace = trace_map(trial, problem)
            trial_residual = float(np.linalg.norm(target - trial_trace))
            if trial_residual < residual:
                accepted = (trial, trial_trace, trial_residual)
                break
            step *= options.damping
        if accepted is None:
            logger.warning(f"Line search stalled at iteration {iteration} (residual {residual:.6g})")
            raise NonConvergenceError(
                f"Line search stalled after {options.max_halvings} halvings at iteration {iteration}",
                residual_history=history,
            )

        path, trace, residual = accepted
        history.append(residual)
        steps_taken.append(step)
        logger.info(f"Iteration {iteration}: residual {residual:.6g} (step {step:g})")
        if residual <= goal:
            return ControlSolution(path, history, iteration, target_norm, report, steps_taken)

    raise NonConvergenceError(
        f"Gauss-Newton did not reach {options.tol:g} relative residual in {options.max_iter} iterations",
        residual_history=history,
    )


def manufactured_target(
    problem: ControlProblem,
    radius: float = DEFAULT_MANUFACTURED_RADIUS,
    seed: Optional[int] = None,
) -> Tuple[DeformationPath, np.ndarray]:
    """
    Draw λ* uniformly in [−radius, radius] and return (λ*, Λ_h(λ*)).

    Wave draws are projected so that every slope stays admissible.
    """
    rng = np.random.default_rng(seed)
    coeffs = rng.uniform(-radius, radius, problem.n_params)
    path = problem.path_from_vector(coeffs).projected()
    return path, trace_map(path, problem)


def empirical_basin(
    problem: ControlProblem,
    radii: Sequence[float],
    seed: Optional[int] = None,
    options: Optional[ControlOptions] = None,
) -> BasinReport:
    """Recover manufactured targets of increasing ‖λ*‖∞ and report the largest recovered."""
    recovered: List[bool] = []
    residuals: List[Optional[float]] = []
    iterations: List[Optional[int]] = []
    for radius in radii:
        _, target = manufactured_target(problem, radius, seed)
        try:
            solution = solve_control(problem.with_target(target), options)
        except ShapeControlError as e:
            logger.info(f"Radius {radius}: not recovered ({e})")
            recovered.append(False)
            history = getattr(e, "residual_history", None)
            norm = float(np.linalg.norm(target))
            residuals.append(history[-1] / norm if history and norm > 0 else None)
            iterations.append(None)
        else:
            recovered.append(True)
            residuals.append(solution.relative_residual)
            iterations.append(solution.iterations)
    largest = max((r for r, ok in zip(radii, recovered) if ok), default=None)
    return BasinReport(
        kind=problem.kind.value,
        radii=[float(r) for r in radii],
        recovered=recovered,
        final_residuals=residuals,
        iterations=iterations,
        largest_recovered=largest,
    )
