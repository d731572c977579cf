"""Approximation algorithms for capacitated Nash social welfare.

One-sided allocation (local search), two-sided matching (min-cost flow and
an enumeration PTAS), weighted two-sided matching (configuration LP with
dependent rounding), plus brute-force oracles for checking all of them.
"""

from .conflp import (
    Column,
    DualPoint,
    FractionalAssignment,
    separation_oracle,
    solve_conf_lp,
    solve_unweighted_best,
    solve_weighted,
)
from .errors import InfeasibleError, InstanceError, NSWError, ResourceError
from .io import load_instance, save_instance
from .model import (
    Additive,
    Allocation,
    CappedAdditive,
    ExplicitTable,
    Matching,
    OneSidedInstance,
    TwoSidedInstance,
    WeightedCoverage,
    WeightedInstance,
    nsw_one_sided,
    nsw_two_sided,
    nsw_weighted,
)
from .onesided import solve_one_sided
from .oracle import exact_one_sided, exact_two_sided, exact_weighted
from .rounding import dependent_rounding
from .twosided import solve_two_sided, solve_two_sided_ptas

__all__ = [
    "Additive", "Allocation", "CappedAdditive", "Column", "DualPoint", "ExplicitTable",
    "FractionalAssignment", "InfeasibleError", "InstanceError", "Matching", "NSWError",
    "OneSidedInstance", "ResourceError", "TwoSidedInstance", "WeightedCoverage",
    "WeightedInstance", "dependent_rounding", "exact_one_sided", "exact_two_sided",
    "exact_weighted", "load_instance", "nsw_one_sided", "nsw_two_sided", "nsw_weighted",
    "save_instance", "separation_oracle", "solve_conf_lp", "solve_one_sided",
    "solve_two_sided", "solve_two_sided_ptas", "solve_unweighted_best", "solve_weighted",
]
