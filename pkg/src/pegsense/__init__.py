"""Sensitivity-based analysis of a blockchain-pegged selfish mining policy."""

from .dynamics import Dynamics, build, build_generator, level_block_view
from .model import (
    ModelParams,
    Policy,
    Region,
    State,
    StateSpace,
    ValidationError,
    classify,
    derive_rates,
    enumerate_states,
)
from .sensitivity import (
    Recommendation,
    SensitivityReport,
    linear_coefficients,
    optimal_policy,
    performance_difference,
    policy_derivative,
    sensitivity_report,
    sweep,
    threshold_and_recommend,
)
from .sim import SimConfig, SimEstimate, simulate
from .solve import (
    SolveResult,
    SolverError,
    average_profit,
    decompose_potential,
    solve,
    solve_potential,
    stationary_direct,
    stationary_level_recursive,
)

__version__ = "0.1.0"
