"""Pydantic models for run-configs, and loading them from JSON or YAML."""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from shape_control.constants import (
    DEFAULT_CONTROL_TOL,
    DEFAULT_DAMPING,
    DEFAULT_DUALITY_PAIRS,
    DEFAULT_HEAT_HORIZON,
    DEFAULT_MANUFACTURED_RADIUS,
    DEFAULT_MAX_HALVINGS,
    DEFAULT_MAX_ITER,
    DEFAULT_NORM_TRIALS,
    DEFAULT_RANK_TOLERANCE,
    DEFAULT_STEPS,
    DEFAULT_UC_TRIALS,
    MIN_SUBDIVISIONS,
    NDD_WINDOW_FRACTION,
    UNIFORM_STEP_RTOL,
)
from shape_control.discretization.base import ConfigurationError

logger = logging.getLogger(__name__)


class StrictModel(BaseModel):
    """Base model rejecting unknown keys."""

    model_config = ConfigDict(extra="forbid")


class GridConfig(StrictModel):
    """Rectangle [0, a] x [0, b] with M x N uniform subdivisions."""

    a: float = Field(..., gt=0)
    b: float = Field(..., gt=0)
    M: int = Field(..., ge=MIN_SUBDIVISIONS)
    N: int = Field(..., ge=MIN_SUBDIVISIONS)

    @model_validator(mode="after")
    def check_uniform(self) -> "GridConfig":
        """Require b/N = a/M."""
        if not math.isclose(self.a / self.M, self.b / self.N, rel_tol=UNIFORM_STEP_RTOL, abs_tol=0.0):
            raise ValueError(f"grid must be uniform: a/M = {self.a / self.M} but b/N = {self.b / self.N}")
        return self


class SourceConfig(StrictModel):
    """Source term F."""

    type: Literal["constant", "separable", "expression", "tabulated"] = "constant"
    value: float = Field(default=0.0, description="Constant value (type=constant)")
    time: Union[float, str, None] = Field(default=None, description="g(t) (type=separable)")
    space: Union[float, str, None] = Field(default=None, description="s(x, y) (type=separable)")
    expr: Optional[str] = Field(default=None, description="f(x, y, t) (type=expression)")
    file: Optional[str] = Field(
        default=None, description="CSV with columns t, u_i_j ... (type=tabulated)"
    )

    @model_validator(mode="after")
    def check_fields(self) -> "SourceConfig":
        """Each type carries its own fields."""
        if self.type == "separable" and (self.time is None or self.space is None):
            raise ValueError("separable sources need 'time' and 'space'")
        if self.type == "expression" and not self.expr:
            raise ValueError("expression sources need 'expr'")
        if self.type == "tabulated" and not self.file:
            raise ValueError("tabulated sources need 'file'")
        return self


class InitialConfig(StrictModel):
    """Initial position or velocity."""

    type: Literal["zero", "eigenmode", "expression", "values"] = "zero"
    p: int = Field(default=1, ge=1, description="x mode number (type=eigenmode)")
    q: int = Field(default=1, ge=1, description="y mode number (type=eigenmode)")
    amplitude: float = 1.0
    expr: Optional[str] = None
    values: Optional[List[float]] = None

    @model_validator(mode="after")
    def check_fields(self) -> "InitialConfig":
        if self.type == "expression" and not self.expr:
            raise ValueError("expression initial data need 'expr'")
        if self.type == "values" and self.values is None:
            raise ValueError("tabulated initial data need 'values'")
        return self


class InitialBlock(StrictModel):
    """Initial data u0 and, for wave runs, u1."""

    u0: InitialConfig = Field(default_factory=InitialConfig)
    u1: InitialConfig = Field(default_factory=InitialConfig)


class PathConfig(StrictModel):
    """Deformation path in its JSON form."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    kind: Literal["heat", "wave"] = "heat"
    T: float = Field(..., gt=0)
    K: int = Field(..., ge=1)
    lambda_: List[List[float]] = Field(..., alias="lambda")

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(by_alias=True)


class NDDConfig(StrictModel):
    """Non-degeneracy scan settings."""

    threshold: Optional[float] = Field(default=None, ge=0)
    t_lo_fraction: float = Field(default=NDD_WINDOW_FRACTION, ge=0, le=1)
    scope: Literal["moving_edge", "full_boundary"] = "moving_edge"


class SensitivityConfig(StrictModel):
    """Fréchet and continuity diagnostics."""

    eps: List[float] = Field(default_factory=lambda: [1e-1, 1e-2, 1e-3])
    directions: int = Field(default=3, ge=1, description="Number of basis directions tested")
    continuity_eps: List[float] = Field(default_factory=lambda: [1e-1, 5e-2, 2.5e-2])

    @field_validator("eps", "continuity_eps")
    @classmethod
    def check_positive(cls, v: List[float]) -> List[float]:
        if not v or any(e <= 0 for e in v):
            raise ValueError("scales must be a nonempty list of positive numbers")
        return v


class ControlConfig(StrictModel):
    """Gauss-Newton settings."""

    max_iter: int = Field(default=DEFAULT_MAX_ITER, ge=1)
    tol: float = Field(default=DEFAULT_CONTROL_TOL, gt=0)
    damping: float = Field(default=DEFAULT_DAMPING, gt=0, lt=1)
    max_halvings: int = Field(default=DEFAULT_MAX_HALVINGS, ge=0)
    rank_tolerance: float = Field(default=DEFAULT_RANK_TOLERANCE, gt=0)
    manufactured_radius: float = Field(default=DEFAULT_MANUFACTURED_RADIUS, gt=0, lt=0.5)
    basin_radii: Optional[List[float]] = None


class DiagnosticsConfig(StrictModel):
    """Sizes of the randomized diagnostics."""

    norm_trials: int = Field(default=DEFAULT_NORM_TRIALS, ge=0)
    uc_trials: int = Field(default=DEFAULT_UC_TRIALS, ge=0)
    duality_pairs: int = Field(default=DEFAULT_DUALITY_PAIRS, ge=1)


class RunConfig(StrictModel):
    """
    Complete description of a run.

    T defaults to 0.1 for heat and to twice the rectangle diagonal for wave;
    K defaults to M - 1 for heat and 2(M - 1) for wave.
    """

    grid: GridConfig
    kind: Literal["heat", "wave"] = "heat"
    source: SourceConfig = Field(default_factory=SourceConfig)
    initial: InitialBlock = Field(default_factory=InitialBlock)
    T: Optional[float] = Field(default=None, gt=0)
    steps: int = Field(default=DEFAULT_STEPS, ge=1)
    K: Optional[int] = Field(default=None, ge=1)
    seed: Optional[int] = None
    path: Optional[PathConfig] = None
    ndd: NDDConfig = Field(default_factory=NDDConfig)
    sensitivity: SensitivityConfig = Field(default_factory=SensitivityConfig)
    control: ControlConfig = Field(default_factory=ControlConfig)
    diagnostics: DiagnosticsConfig = Field(default_factory=DiagnosticsConfig)

    @model_validator(mode="after")
    def check_path(self) -> "RunConfig":
        """A supplied path must match the run's kind, horizon and K."""
        if self.path is not None:
            if self.path.kind != self.kind:
                raise ValueError(f"path kind {self.path.kind!r} differs from run kind {self.kind!r}")
            if self.T is not None and not math.isclose(self.path.T, self.T, rel_tol=1e-12):
                raise ValueError(f"path horizon {self.path.T} differs from T={self.T}")
            if self.K is not None and self.path.K != self.K:
                raise ValueError(f"path has K={self.path.K} but run has K={self.K}")
            if len(self.path.lambda_) != self.grid.N - 1 or any(
                len(row) != self.path.K for row in self.path.lambda_
            ):
                raise ValueError(
                    f"path lambda table must be {self.grid.N - 1} rows of {self.path.K} values"
                )
        return self

    def resolved(self) -> "RunConfig":
        """Copy with T and K filled in."""
        T = self.T
        K = self.K
        if self.path is not None:
            T = T if T is not None else self.path.T
            K = K if K is not None else self.path.K
        if T is None:
            T = (
                DEFAULT_HEAT_HORIZON
                if self.kind == "heat"
                else 2.0 * math.hypot(self.grid.a, self.grid.b)
            )
        if K is None:
            K = self.grid.M - 1 if self.kind == "heat" else 2 * (self.grid.M - 1)
        return self.model_copy(update={"T": T, "K": K})

    def to_json_dict(self) -> Dict[str, Any]:
        """JSON form with aliases, as embedded in every output."""
        return self.model_dump(mode="json", by_alias=True)


def load_run_config(config_path: Union[str, Path], overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Load and validate a run-config from a JSON or YAML file.

    Args:
        config_path: Path to a .json, .yaml or .yml file
        overrides: Top-level keys replacing those of the file (e.g. seed)

    Returns:
        Validated, resolved RunConfig

    Raises:
        ConfigurationError: If the file is missing, unparsable or invalid
    """
    import yaml

    config_path = Path(config_path)
    if not config_path.exists():
        raise ConfigurationError(f"Config file not found: {config_path}")

    try:
        if config_path.suffix in [".yaml", ".yml"]:
            with open(config_path, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f)
        elif config_path.suffix == ".json":
            with open(config_path, "r", encoding="utf-8") as f:
                data = json.load(f)
        else:
            raise ConfigurationError(
                f"Unsupported config file format: {config_path.suffix}. Use .json, .yaml, or .yml"
            )
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigurationError(f"Cannot parse {config_path}: {e}") from e

    if not isinstance(data, dict):
        raise ConfigurationError(f"{config_path} must contain a mapping at top level")
    if overrides:
        data.update({k: v for k, v in overrides.items() if v is not None})
    return parse_run_config(data)


def parse_run_config(data: Dict[str, Any]) -> RunConfig:
    """
    Validate a run-config mapping.

    Raises:
        ConfigurationError: With every validation problem in the message
    """
    try:
        config = RunConfig.model_validate(data)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(part) for part in err['loc']) or '<root>'}: {err['msg']}"
            for err in e.errors()
        )
        raise ConfigurationError(f"Invalid run-config: {problems}") from e
    logger.debug(f"Loaded run-config for a {config.kind} run on {config.grid}")
    return config.resolved()
