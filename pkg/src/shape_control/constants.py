"""Numerical constants for Shape Control.

This module contains the admissibility bounds, tolerances and solver defaults
used across the package. Keeping them in one place makes the numerical
contract of every diagnostic visible and easy to adjust.
"""

# ============================================================================
# ADMISSIBILITY CONSTANTS
# ============================================================================

LAMBDA_BOUND: float = 0.5
"""Strict bound on |λ_j(t)| for every admissible deformation path."""

WAVE_SLOPE_BOUND: float = 1.0
"""Strict bound on |∂_t λ_j| for wave paths (boundary slower than the waves)."""

LAMBDA_CLAMP: float = 0.499
"""Box used when projecting Gauss-Newton iterates back onto admissible paths."""

SLOPE_CLAMP: float = 0.999
"""Slope used when projecting wave iterates back onto admissible paths."""

# ============================================================================
# GRID CONSTANTS
# ============================================================================

MIN_SUBDIVISIONS: int = 3
"""Smallest M and N accepted by GridSpec (keeps column i=2 interior)."""

UNIFORM_STEP_RTOL: float = 1e-12
"""Relative tolerance on a/M == b/N for a grid to count as uniform."""

# ============================================================================
# OPERATOR CONSTANTS
# ============================================================================

NORM_BOUND_NUMERATOR: float = 28.0 / 3.0
"""‖A(φ)f‖∞ ≤ (28/3)·‖f‖∞/h² for every admissible φ."""

UNPERTURBED_NORM_NUMERATOR: float = 8.0
"""‖Af‖∞ ≤ 8·‖f‖∞/h² for the unperturbed Laplacian."""

DEFAULT_NORM_TRIALS: int = 1000
"""Default number of random fields drawn by the norm-bound diagnostic."""

# ============================================================================
# INTEGRATION CONSTANTS
# ============================================================================

DEFAULT_HEAT_HORIZON: float = 0.1
"""Default horizon T for heat runs."""

DEFAULT_STEPS: int = 600
"""Default number of time steps when a run-config does not give one."""

POWER_ITERATIONS: int = 300
"""Iterations of the power method estimating λ_max for the CFL check."""

CFL_SAFETY: float = 1.01
"""Inflation applied to the power-method estimate of λ_max."""

# ============================================================================
# ADJOINT / UNIQUE CONTINUATION CONSTANTS
# ============================================================================

NDD_RELATIVE_THRESHOLD: float = 1e-8
"""NDD threshold relative to max|u| over the checked window."""

NDD_WINDOW_FRACTION: float = 0.05
"""Default start of the NDD window as a fraction of T."""

RESOLUTION_MAX_CHANGE: float = 0.1
"""Largest relative change of the time derivative under grid halving."""

UC_RESIDUAL_TOLERANCE: float = 1e-8
"""Smallest converse ratio ‖Gᵀc‖/‖c‖, relative to the largest, still counted as nonzero."""

UC_RECONSTRUCTION_TOLERANCE: float = 0.05
"""Largest ‖X_rebuilt(T) − c‖/‖c‖ accepted from the layer-1 → propagate_zeros chain."""

DEFAULT_UC_TRIALS: int = 20
"""Default number of random terminal vectors in the unique-continuation check."""

DEFAULT_DUALITY_PAIRS: int = 10
"""Default number of random (c, ψ) pairs in the duality check."""

# ============================================================================
# CONTROL CONSTANTS
# ============================================================================

PINV_CUTOFF: float = 1e-10
"""Singular values below PINV_CUTOFF·σ₁ are dropped by the pseudoinverse."""

DEFAULT_RANK_TOLERANCE: float = 1e-6
"""σ_min must exceed DEFAULT_RANK_TOLERANCE·σ₁ for a surjective verdict."""

DEFAULT_MAX_ITER: int = 20
"""Default Gauss-Newton iteration cap."""

DEFAULT_CONTROL_TOL: float = 1e-6
"""Default relative trace residual at which Gauss-Newton stops."""

DEFAULT_DAMPING: float = 0.5
"""Backtracking factor applied to rejected Gauss-Newton steps."""

DEFAULT_MAX_HALVINGS: int = 20
"""Rejected steps allowed per iteration before the solver declares a stall."""

DEFAULT_MANUFACTURED_RADIUS: float = 0.1
"""Default ‖λ*‖∞ of manufactured targets."""

# ============================================================================
# OUTPUT CONSTANTS
# ============================================================================

CSV_FLOAT_FORMAT: str = "%.17g"
"""Float format for every CSV written by the CLI (round-trip exact)."""

DEFAULT_MAX_WORKERS: int = 4
"""Default number of threads assembling control-map columns."""

DEFAULT_SEED: int = 0
"""Seed of the randomized diagnostics when neither config, flag nor environment sets one."""
