"""Experiment runner: builds problems from run-configs and executes each CLI command."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd
from scipy import linalg

from shape_control import __version__
from shape_control.analysis.adjoint import check_ndd, duality_check, unique_continuation_check
from shape_control.analysis.control import (
    ControlOptions,
    ControlSolution,
    assemble_control_map,
    empirical_basin,
    manufactured_target,
    solve_control,
    surjectivity_report,
)
from shape_control.analysis.dynamics import (
    ConstantSource,
    ExpressionSource,
    SeparableSource,
    SourceTerm,
    TabulatedSource,
)
from shape_control.analysis.problem import ControlProblem
from shape_control.analysis.sensitivity import derivative_continuity, frechet_residual
from shape_control.config import Config
from shape_control.constants import DEFAULT_SEED
from shape_control.discretization.base import ConfigurationError, DomainError, EquationKind
from shape_control.discretization.domain_map import JacobianSample, transport_matrix
from shape_control.discretization.expressions import Expression
from shape_control.discretization.grid import GridSpec, sine_mode
from shape_control.discretization.operators import DeformationPath, operator_norm_bound_check
from shape_control.experiments.exporters import read_tabulated_source, read_vector_csv, residuals_frame
from shape_control.models.reports import NDDReport
from shape_control.models.run_config import InitialConfig, RunConfig, SourceConfig

logger = logging.getLogger(__name__)


# ============================================================================
# Building blocks
# ============================================================================


def build_grid(config: RunConfig) -> GridSpec:
    grid = config.grid
    return GridSpec(a=grid.a, b=grid.b, M=grid.M, N=grid.N)


def build_source(source: SourceConfig, grid: GridSpec, base_dir: Optional[Path] = None) -> SourceTerm:
    """
    Turn a source block into a SourceTerm.

    Tabulated files are resolved relative to ``base_dir`` (the config's directory).
    """
    if source.type == "constant":
        return ConstantSource(source.value)
    if source.type == "separable":
        time_factor: Any = (
            Expression(source.time, variables=("t",)) if isinstance(source.time, str) else source.time
        )
        space_factor: Any = (
            Expression(source.space, variables=("x", "y"))
            if isinstance(source.space, str)
            else source.space
        )
        return SeparableSource(time_factor, space_factor)
    if source.type == "expression":
        return ExpressionSource(source.expr)

    file_path = Path(source.file)
    if not file_path.is_absolute() and base_dir is not None:
        file_path = base_dir / file_path
    times, values = read_tabulated_source(file_path, grid.n_interior)
    return TabulatedSource(times, values)


def build_initial(initial: InitialConfig, grid: GridSpec) -> np.ndarray:
    """
    Interior vector of an initial-data block; ``amplitude`` scales every type.

    Raises:
        ConfigurationError: If a mode or a value table does not fit the grid
    """
    n = grid.n_interior
    if initial.type == "zero":
        return np.zeros(n)
    if initial.type == "eigenmode":
        try:
            values = sine_mode(grid, initial.p, initial.q)
        except DomainError as e:
            raise ConfigurationError(str(e)) from e
    elif initial.type == "expression":
        x, y = grid.interior_coordinates()
        values = np.broadcast_to(
            Expression(initial.expr, variables=("x", "y")).evaluate(x=x, y=y), (n,)
        ).copy()
    else:
        values = np.asarray(initial.values, dtype=float)
        if values.shape != (n,):
            raise ConfigurationError(f"Initial values hold {values.size} entries, expected {n}")
    return initial.amplitude * values


def build_problem(
    config: RunConfig,
    base_dir: Optional[Path] = None,
    target: Optional[np.ndarray] = None,
) -> ControlProblem:
    """ControlProblem of a resolved run-config."""
    grid = build_grid(config)
    kind = EquationKind(config.kind)
    return ControlProblem(
        kind=kind,
        grid=grid,
        F=build_source(config.source, grid, base_dir),
        u0=build_initial(config.initial.u0, grid),
        T=float(config.T),
        steps=config.steps,
        K=int(config.K),
        u1=build_initial(config.initial.u1, grid) if kind is EquationKind.WAVE else None,
        target=target,
    )


def resolve_seed(config: RunConfig, seed: Optional[int] = None) -> int:
    """--seed, then the config, then SHAPE_CONTROL_DEFAULT_SEED, then 0."""
    for candidate in (seed, config.seed, Config.get_default_seed()):
        if candidate is not None:
            return int(candidate)
    return DEFAULT_SEED


@dataclass
class ControlRun:
    """Files produced by the control command."""

    solution: Dict[str, Any]
    residuals: pd.DataFrame
    surjectivity: Dict[str, Any]


# ============================================================================
# Runner
# ============================================================================


class ExperimentRunner:
    """
    Executes the CLI commands for one run-config.

    Every JSON payload carries the command name, the package version and the
    resolved config with its seed.
    """

    def __init__(
        self,
        config: RunConfig,
        seed: Optional[int] = None,
        base_dir: Optional[Union[str, Path]] = None,
        logger: Optional[logging.Logger] = None,
    ):
        self.seed = resolve_seed(config, seed)
        self.config = config.model_copy(update={"seed": self.seed})
        self.base_dir = Path(base_dir) if base_dir is not None else None
        self.logger = logger or logging.getLogger(__name__)
        self.problem = build_problem(self.config, self.base_dir)

    # ------------------------------------------------------------------
    # Helpers
    # ------------------------------------------------------------------

    def envelope(self, command: str, payload: Dict[str, Any]) -> Dict[str, Any]:
        result = {"command": command, "version": __version__, "config": self.config.to_json_dict()}
        result.update(payload)
        return result

    def configured_path(self) -> Optional[DeformationPath]:
        """The config's deformation path, checked against the problem and admissibility."""
        if self.config.path is None:
            return None
        path = DeformationPath.from_dict(self.config.path.to_dict(), self.problem.grid)
        self.problem.check_path(path)
        path.check_admissible()
        return path

    def ndd(self) -> NDDReport:
        """Non-degeneracy scan with the config's window, threshold and scope."""
        settings = self.config.ndd
        T = self.problem.T
        return check_ndd(
            self.problem.reference(),
            threshold=settings.threshold,
            t_window=(settings.t_lo_fraction * T, T),
            scope=settings.scope,
        )

    def directions(self) -> List[DeformationPath]:
        """Unit basis directions spread over boundary rows and segments."""
        grid = self.problem.grid
        count = self.config.sensitivity.directions
        return [
            self.problem.basis_path(1 + i % grid.n_layer1, i % self.problem.K) for i in range(count)
        ]

    def control_options(self) -> ControlOptions:
        settings = self.config.control
        return ControlOptions(
            max_iter=settings.max_iter,
            tol=settings.tol,
            damping=settings.damping,
            max_halvings=settings.max_halvings,
            rank_tolerance=settings.rank_tolerance,
            max_workers=Config.get_max_workers(),
        )

    def random_path(self) -> DeformationPath:
        """Admissible path drawn with the manufactured radius, for the norm-bound check."""
        rng = np.random.default_rng(self.seed)
        radius = self.config.control.manufactured_radius
        coeffs = rng.uniform(-radius, radius, self.problem.n_params)
        return self.problem.path_from_vector(coeffs).projected()

    # ------------------------------------------------------------------
    # Commands
    # ------------------------------------------------------------------

    def simulate(self) -> tuple:
        """
        Forward solve along the configured path (or φ ≡ 0).

        Returns:
            (trajectory DataFrame, JSON payload)
        """
        path = self.configured_path()
        self.logger.info(f"Simulating {self.problem.kind.value} on {self.problem.grid}")
        trajectory = self.problem.solve(path)
        payload = {
            "trajectory": trajectory.summary(),
            "path": path.to_dict() if path is not None else None,
        }
        return trajectory.to_dataframe(), self.envelope("simulate", payload)

    def sensitivity(self) -> Dict[str, Any]:
        """Fréchet remainders and derivative continuity at φ = 0."""
        settings = self.config.sensitivity
        directions = self.directions()
        frechet = frechet_residual(self.problem, directions, settings.eps)
        base = self.problem.path_from_vector(np.ones(self.problem.n_params))
        continuity = derivative_continuity(self.problem, base, directions[0], settings.continuity_eps)
        return self.envelope("sensitivity", {"frechet": frechet, "continuity": continuity})

    def adjoint(self) -> Dict[str, Any]:
        """Duality identity between the linearized and adjoint solves."""
        report = duality_check(self.problem, pairs=self.config.diagnostics.duality_pairs, seed=self.seed)
        return self.envelope("adjoint", {"duality": report})

    def uc_check(self) -> Dict[str, Any]:
        """NDD scan followed by the unique-continuation chain."""
        ndd = self.ndd()
        uc = unique_continuation_check(
            self.problem, trials=self.config.diagnostics.uc_trials, seed=self.seed, ndd=ndd
        )
        return self.envelope(
            "uc-check", {"ndd": ndd, "unique_continuation": uc, "verdict": uc.verdict}
        )

    def control(self, target_file: Optional[Union[str, Path]] = None) -> ControlRun:
        """
        Gauss-Newton on a target from ``target_file`` or a manufactured one.

        Raises:
            NonConvergenceError: If the residual does not reach control.tol
            RankDeficiencyError: If a Jacobian loses rank
        """
        manufactured: Optional[DeformationPath] = None
        if target_file is not None:
            target = read_vector_csv(target_file, self.problem.state_dim)
        else:
            manufactured, target = manufactured_target(
                self.problem, self.config.control.manufactured_radius, self.seed
            )
            self.logger.info(f"Manufactured target with ‖λ*‖∞ = {manufactured.max_abs():.3g}")

        problem = self.problem.with_target(target)
        options = self.control_options()
        solution: ControlSolution = solve_control(problem, options)

        report = solution.report
        if report is None:
            report = assemble_control_map(problem, max_workers=options.max_workers).surjectivity(
                options.rank_tolerance
            )
        payload = solution.to_dict()
        payload["admissible"] = solution.path.is_admissible()
        payload["target_source"] = str(target_file) if target_file is not None else "manufactured"
        if manufactured is not None:
            payload["manufactured_path"] = manufactured.to_dict()
        return ControlRun(
            solution=self.envelope("control", payload),
            residuals=residuals_frame(solution.residual_history, solution.target_norm),
            surjectivity=self.envelope("control", {"surjectivity": report}),
        )

    def report(self) -> Dict[str, Any]:
        """Every diagnostic in one document."""
        diagnostics = self.config.diagnostics
        path = self.configured_path() or self.random_path()
        _, simulation = self.simulate()
        ndd = self.ndd()
        payload: Dict[str, Any] = {
            "simulation": simulation["trajectory"],
            "norm_bound": operator_norm_bound_check(
                path, self.problem.grid, trials=diagnostics.norm_trials, seed=self.seed
            ),
            "sensitivity": {
                key: value
                for key, value in self.sensitivity().items()
                if key in ("frechet", "continuity")
            },
            "duality": self.adjoint()["duality"],
            "ndd": ndd,
            "surjectivity": surjectivity_report(
                self.problem,
                rank_tolerance=self.config.control.rank_tolerance,
                uc_trials=diagnostics.uc_trials,
                seed=self.seed,
                ndd=ndd,
            ),
        }
        radii = self.config.control.basin_radii
        if radii:
            payload["basin"] = empirical_basin(self.problem, radii, self.seed, self.control_options())
        return self.envelope("report", payload)


def bmatrix(j11: float, j12: float, j21: float, j22: float) -> Dict[str, Any]:
    """B = |det J|·J⁻¹J⁻ᵀ for one Jacobian sample."""
    sample = JacobianSample.from_entries(j11, j12, j21, j22)
    B = transport_matrix(sample)
    return {
        "command": "bmatrix",
        "version": __version__,
        "config": {"jacobian": sample.J.tolist()},
        "B": B.tolist(),
        "det_B": float(linalg.det(B)),
        "abs_det_J": float(abs(linalg.det(sample.J))),
    }
