"""Interim envy-free lotteries over matchings.

Checkers for fairness properties of lotteries, LP solvers for welfare-
optimal interim envy-free lotteries (via edge-pair matching pricing), and
payment extensions (subsidies, rent division) with A/B/C payment schemes.
"""

from .fairness import (
    FairnessReport,
    is_eef,
    is_envy_free,
    is_ex_ante_ef,
    is_ex_post_ef,
    is_ief,
    is_proportional,
    max_envy,
    mms_shares,
)
from .lpengine import InfeasibleError, phase1_feasibility
from .model import (
    Allocation,
    Instance,
    Lottery,
    Matching,
    Rat,
    WelfareObjective,
    conditional_bundle_value,
    expected_welfare,
    welfare,
)
from .payments import (
    InterimEnvyGraph,
    PaymentScheme,
    build_envy_graph,
    check_ief_with_payments,
    compute_A_payments,
    is_ief_able_A,
    solve_subsidy_min,
    solve_utility_max,
)
from .twoebm import EdgePairWeights, brute_force_2ebm, max_weight_assignment, solve_2ebm
from .welfare_opt import LogNashUnsupportableError, SolveResult, solve_ief_welfare

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "EdgePairWeights",
    "FairnessReport",
    "InfeasibleError",
    "Instance",
    "InterimEnvyGraph",
    "LogNashUnsupportableError",
    "Lottery",
    "Matching",
    "PaymentScheme",
    "Rat",
    "SolveResult",
    "WelfareObjective",
    "brute_force_2ebm",
    "build_envy_graph",
    "check_ief_with_payments",
    "compute_A_payments",
    "conditional_bundle_value",
    "expected_welfare",
    "is_eef",
    "is_envy_free",
    "is_ex_ante_ef",
    "is_ex_post_ef",
    "is_ief",
    "is_ief_able_A",
    "is_proportional",
    "max_envy",
    "max_weight_assignment",
    "mms_shares",
    "phase1_feasibility",
    "solve_2ebm",
    "solve_ief_welfare",
    "solve_subsidy_min",
    "solve_utility_max",
    "welfare",
]
