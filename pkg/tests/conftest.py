"""
Pytest configuration and shared fixtures.

Reference trajectories and control problems are session-scoped: they are
deterministic and several suites read them.
"""

import math

import numpy as np
import pytest

from shape_control.analysis.dynamics import ConstantSource
from shape_control.analysis.problem import ControlProblem
from shape_control.discretization.base import EquationKind
from shape_control.discretization.grid import GridSpec

# Desk-scale settings shared by the heat and wave suites
HEAT_T = 0.1
HEAT_STEPS = 300
HEAT_K = 3
WAVE_T = 2.0 * math.sqrt(2.0)
WAVE_STEPS = 2000
WAVE_K = 4


@pytest.fixture(scope="session")
def grid5() -> GridSpec:
    """
    The 5 x 5 node grid on the unit square (h = 0.25).

    Returns:
        GridSpec with M = N = 4
    """
    return GridSpec(a=1.0, b=1.0, M=4, N=4)


@pytest.fixture(scope="session")
def heat_problem(grid5) -> ControlProblem:
    """Heat problem with F ≡ 1, u0 = 0, T = 0.1, K = 3."""
    return ControlProblem(
        kind=EquationKind.HEAT,
        grid=grid5,
        F=ConstantSource(1.0),
        u0=np.zeros(grid5.n_interior),
        T=HEAT_T,
        steps=HEAT_STEPS,
        K=HEAT_K,
    )


@pytest.fixture(scope="session")
def zero_heat_problem(grid5) -> ControlProblem:
    """Heat problem whose reference state vanishes (F ≡ 0, u0 = 0)."""
    return ControlProblem(
        kind=EquationKind.HEAT,
        grid=grid5,
        F=ConstantSource(0.0),
        u0=np.zeros(grid5.n_interior),
        T=HEAT_T,
        steps=HEAT_STEPS,
        K=HEAT_K,
    )


@pytest.fixture(scope="session")
def wave_problem(grid5) -> ControlProblem:
    """Wave problem with F ≡ 1 at rest, T = 2√2 (twice the diagonal), K = 4."""
    return ControlProblem(
        kind=EquationKind.WAVE,
        grid=grid5,
        F=ConstantSource(1.0),
        u0=np.zeros(grid5.n_interior),
        u1=np.zeros(grid5.n_interior),
        T=WAVE_T,
        steps=WAVE_STEPS,
        K=WAVE_K,
    )


@pytest.fixture(scope="session")
def heat_reference(heat_problem):
    """Cached reference trajectory of ``heat_problem``."""
    return heat_problem.reference()


@pytest.fixture(scope="session")
def wave_reference(wave_problem):
    """Cached reference trajectory of ``wave_problem``."""
    return wave_problem.reference()


@pytest.fixture
def rng():
    """Fresh seeded generator per test."""
    return np.random.default_rng(12345)
