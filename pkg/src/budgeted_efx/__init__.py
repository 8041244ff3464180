"""Exact solvers and certified verifiers for EFx allocation of indivisible
goods among budget-constrained agents."""

from .model import (
    Allocation,
    Bundle,
    DegenerateOptimumError,
    FairDivisionError,
    Instance,
    InvariantViolationError,
    KnapsackAnswer,
    Rational,
    StructuralError,
    bundle_cost,
    bundle_value,
    efx_envies,
    envies,
    is_ef1,
    is_efx,
    is_envy_free,
    knapsack_vmax,
    make_allocation,
    monopoly_value,
    normalize,
    nsw_product,
)
from .oracles import (
    ExistenceViolationError,
    SearchBudget,
    SearchCapExceededError,
    SplitPair,
    best_allocation_under_predicate,
    complete_efx_allocation,
    is_pareto_efficient,
    leximin_pp_split,
    max_nsw_allocation,
)
from .three_agents import AlphaParams, SetAside, SolveResult, efx_3a
from .two_agents import FeasibilityGraph, TwoAgentResult, efx_2a

__all__ = [
    "Allocation",
    "AlphaParams",
    "Bundle",
    "DegenerateOptimumError",
    "ExistenceViolationError",
    "FairDivisionError",
    "FeasibilityGraph",
    "Instance",
    "InvariantViolationError",
    "KnapsackAnswer",
    "Rational",
    "SearchBudget",
    "SearchCapExceededError",
    "SetAside",
    "SolveResult",
    "SplitPair",
    "StructuralError",
    "TwoAgentResult",
    "best_allocation_under_predicate",
    "bundle_cost",
    "bundle_value",
    "complete_efx_allocation",
    "efx_2a",
    "efx_3a",
    "efx_envies",
    "envies",
    "is_ef1",
    "is_efx",
    "is_envy_free",
    "is_pareto_efficient",
    "knapsack_vmax",
    "leximin_pp_split",
    "make_allocation",
    "max_nsw_allocation",
    "monopoly_value",
    "normalize",
    "nsw_product",
]
