"""Pydantic models for diagnostic reports."""

from typing import List, Literal, Optional

from pydantic import BaseModel, Field, model_validator


class NormBoundReport(BaseModel):
    """Result of the operator norm-bound diagnostic."""

    max_ratio: float = Field(..., ge=0.0, description="Largest ‖A(φ)f‖∞/‖f‖∞ observed")
    bound: float = Field(..., gt=0.0, description="Theoretical bound 28/(3h²)")
    unperturbed_bound: float = Field(..., gt=0.0, description="Bound 8/h² of the unperturbed operator")
    trials: int = Field(..., ge=0)
    argmax_time: Optional[float] = None
    satisfied: bool

    @model_validator(mode="after")
    def check_verdict(self) -> "NormBoundReport":
        """Keep the verdict consistent with the measured ratio."""
        if self.satisfied != (self.max_ratio <= self.bound):
            raise ValueError("satisfied must equal max_ratio <= bound")
        return self


class NDDReport(BaseModel):
    """Non-degeneracy scan of a reference trajectory."""

    min_abs: float = Field(..., ge=0.0)
    argmin_t: Optional[float] = None
    argmin_j: Optional[int] = None
    argmin_side: Optional[Literal["west", "east", "south", "north"]] = None
    threshold: float = Field(..., ge=0.0)
    t_lo: float
    t_hi: float
    scope: Literal["moving_edge", "full_boundary"] = "moving_edge"
    samples: int = Field(..., ge=0)
    verdict: Literal["satisfied", "violated"]

    @model_validator(mode="after")
    def check_verdict(self) -> "NDDReport":
        """Verdict is "satisfied" exactly when min_abs exceeds the threshold."""
        expected = "satisfied" if self.min_abs > self.threshold else "violated"
        if self.verdict != expected:
            raise ValueError(f"verdict must be {expected!r} for min_abs={self.min_abs}")
        return self

    @property
    def satisfied(self) -> bool:
        return self.verdict == "satisfied"


class FrechetDirection(BaseModel):
    """Remainders of the first-order expansion along one direction."""

    label: str
    remainders: List[float]
    slope: Optional[float] = None


class FrechetReport(BaseModel):
    """Remainder decay of Λ_h(εψ) − Λ_h(0) − ε·dΛ_h(0)ψ."""

    kind: Literal["heat", "wave"]
    eps: List[float]
    directions: List[FrechetDirection]
    sup_remainders: List[float] = Field(..., description="Sup over directions of remainder/ε")
    min_slope: Optional[float] = Field(None, description="Smallest fitted log-log slope of the remainder")


class ContinuityReport(BaseModel):
    """Distance ‖dΛ_h(εφ₁)ψ − dΛ_h(0)ψ‖ against ε."""

    kind: Literal["heat", "wave"]
    eps: List[float]
    distances: List[float]
    slope: Optional[float] = None


class DualityPair(BaseModel):
    """Both sides of one duality identity evaluation."""

    lhs: float = Field(..., description="⟨v(T), c⟩")
    rhs: float = Field(..., description="Time-integrated pairing of the forcing with the adjoint")
    relative_error: float = Field(..., ge=0.0)


class DualityReport(BaseModel):
    """Duality identity over random (c, ψ) pairs."""

    kind: Literal["heat", "wave"]
    pairs: List[DualityPair]
    max_relative_error: float = Field(..., ge=0.0)
    tolerance: float = Field(..., gt=0.0)
    passed: bool


class UniqueContinuationReport(BaseModel):
    """Outcome of the layer-1 pairing and zero-propagation chain."""

    trials: int = Field(..., ge=0)
    max_residual_c: Optional[float] = Field(
        None,
        ge=0.0,
        description="Largest ‖X_rebuilt(T) − c‖/‖c‖ from recovered layer-1 values; None without NDD",
    )
    min_converse_ratio: float = Field(..., ge=0.0, description="Smallest ‖Gᵀc‖/‖c‖ over random c")
    max_layer1_recovery_error: Optional[float] = Field(
        None, description="Largest relative error recovering X on layer 1 by dividing the pairing"
    )
    max_propagation_error: Optional[float] = Field(
        None, description="Largest relative error of the column reconstruction against the solve"
    )
    annihilating_c: Optional[List[float]] = Field(
        None, description="A nonzero terminal vector with vanishing pairings, when one exists"
    )
    annihilating_c_norm: Optional[float] = Field(None, ge=0.0, description="‖c‖ of that vector")
    annihilating_pairing_norm: Optional[float] = Field(
        None, ge=0.0, description="‖Gᵀc‖ of that vector"
    )
    tolerance: float = Field(..., description="Relative converse-ratio threshold")
    reconstruction_tolerance: float = Field(..., gt=0.0)
    verdict: Literal["unique", "non_unique"]


class SurjectivityReport(BaseModel):
    """Numerical certificate for the surjectivity of dΛ_h at a path."""

    kind: Literal["heat", "wave"]
    rows: int = Field(..., ge=1)
    columns: int = Field(..., ge=1)
    singular_values: List[float]
    sigma_max: float = Field(..., ge=0.0)
    sigma_min: float = Field(..., ge=0.0)
    condition: Optional[float] = Field(None, description="σ₁/σ_min, None when σ_min = 0")
    rank: int = Field(..., ge=0)
    rank_tolerance: float = Field(..., gt=0.0)
    ndd: Optional[NDDReport] = None
    unique_continuation: Optional[UniqueContinuationReport] = None
    verdict: Literal["surjective", "deficient"]
    certificates_agree: Optional[bool] = None

    @model_validator(mode="after")
    def check_verdict(self) -> "SurjectivityReport":
        """Verdict follows σ_min > tol·σ₁ together with columns ≥ rows."""
        surjective = (
            self.sigma_min > self.rank_tolerance * self.sigma_max and self.columns >= self.rows
        )
        if self.verdict != ("surjective" if surjective else "deficient"):
            raise ValueError("verdict inconsistent with singular values and shape")
        return self

    @property
    def surjective(self) -> bool:
        return self.verdict == "surjective"


class BasinReport(BaseModel):
    """Manufactured-target recoveries at increasing radii."""

    kind: Literal["heat", "wave"]
    radii: List[float]
    recovered: List[bool]
    final_residuals: List[Optional[float]]
    iterations: List[Optional[int]]
    largest_recovered: Optional[float] = None
