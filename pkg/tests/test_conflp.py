import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brute import table_mismatches

from nswopt import generate as gen
from nswopt.conflp import (
    Column,
    DualPoint,
    FractionalAssignment,
    column_coefficient,
    combined_bound,
    exact_violation,
    knapsack_table,
    separation_oracle,
    solve_conf_lp,
    solve_unweighted_best,
    solve_weighted,
)
from nswopt.errors import InstanceError, ResourceError
from nswopt.model import (
    Additive,
    CappedAdditive,
    TwoSidedInstance,
    WeightedInstance,
    nsw_two_sided,
    weighted_nsw,
)
from nswopt.oracle import exact_one_sided, exact_two_sided, exact_weighted, verify_dual_feasible


def _all_columns(winst):
    inst = winst.instance
    for i in range(inst.n):
        for r in range(inst.capacities[i] + 1):
            for S in itertools.combinations(range(inst.m), r):
                yield i, frozenset(S)


def _max_exact_violation(winst, dual):
    return max(exact_violation(winst, dual, i, S) for i, S in _all_columns(winst))


def test_top_set_found_when_beta_very_negative():
    inst = TwoSidedInstance((Additive((5, 1, 3, 2)),), ((1,),) * 4, (4,))
    winst = WeightedInstance(inst, (1,), (0, 0, 0, 0))
    dual = DualPoint((0.0,) * 4, (-100.0,))
    hit = separation_oracle(winst, dual, 0.1)
    assert hit is not None and hit.firm == 0
    best = max(_all_columns(winst), key=lambda c: exact_violation(winst, dual, *c))
    assert hit.workers == best[1] == frozenset(range(4))


def test_optimal_dual_of_full_lp_is_nearly_feasible():
    winst = gen.weighted(2, 3, seed=8)
    lp = solve_conf_lp(winst, 0.1)
    assert verify_dual_feasible(winst, lp.dual, 0.1)
    hit = separation_oracle(winst, lp.dual, 0.1)
    assert hit is None or hit.exact <= 1e-7
    if hit is None:
        assert _max_exact_violation(winst, lp.dual) <= 1e-7


@pytest.mark.parametrize("beta,violated", [(-0.5, True), (0.0, False), (0.5, False)])
def test_zero_weight_firm_prefers_empty_set(beta, violated):
    inst = TwoSidedInstance((Additive((1, 2)), Additive((3, 4))), ((1, 1), (1, 1)), (2, 2))
    winst = WeightedInstance(inst, (0, 1), (0, 0))
    dual = DualPoint((0.3, 0.2), (beta, 1e9))
    hit = separation_oracle(winst, dual, 0.1)
    assert (hit is not None) is violated
    if violated:
        assert hit.firm == 0 and hit.workers == frozenset()


def test_separation_rejects_bad_eps():
    winst = gen.weighted(1, 2, seed=0)
    with pytest.raises(InstanceError):
        separation_oracle(winst, DualPoint((0, 0), (0,)), 0)


def test_single_column_lp():
    inst = TwoSidedInstance((Additive((3,)),), ((2,),), (1,))
    winst = WeightedInstance(inst, (Fraction(1, 4),), (Fraction(3, 4),))
    lp = solve_conf_lp(winst, 0.1)
    assert len(lp.columns) == 1
    col = lp.columns[0]
    assert col.workers == {0} and col.weight == pytest.approx(1)
    assert lp.objective == pytest.approx(0.25 * math.log(3) + 0.75 * math.log(2))


def test_single_firm_takes_everything():
    inst = TwoSidedInstance((Additive((2, 1, 4)),), ((1,),) * 3, (3,))
    winst = WeightedInstance(inst, (1,), (0, 0, 0))
    lp = solve_conf_lp(winst, 0.1)
    best = max(_all_columns(winst), key=lambda c: column_coefficient(winst, *c))
    assert best[1] == frozenset(range(3))
    heavy = max(lp.columns, key=lambda c: c.weight)
    assert heavy.workers == best[1] and heavy.weight == pytest.approx(1)


@pytest.mark.parametrize("seed", range(5))
def test_lp_dominates_brute_force(seed):
    winst = gen.weighted(2, 3, seed=seed)
    lp = solve_conf_lp(winst, 0.1)
    opt = exact_weighted(winst).nsw
    if opt > 0:
        assert lp.objective + math.log(1.1) >= math.log(opt) - 1e-9


def test_lp_certificate_gap():
    winst = gen.weighted(2, 4, seed=3)
    lp = solve_conf_lp(winst, 0.2)
    assert lp.upper_bound - lp.objective <= math.log1p(0.1) + 1e-7


def test_lp_needs_additive_firms():
    inst = TwoSidedInstance((CappedAdditive((1, 2), 1),), ((1,), (1,)), (2,))
    with pytest.raises(InstanceError):
        solve_conf_lp(WeightedInstance.uniform(inst), 0.1)


def test_lp_column_cap():
    winst = gen.weighted(3, 6, seed=1)
    with pytest.raises(ResourceError) as info:
        solve_conf_lp(winst, 0.1, max_columns=1)
    assert info.value.partial is not None


def test_infeasible_lp_means_zero_optimum():
    # both firms value only worker 0, so one of them always ends up with nothing
    inst = TwoSidedInstance((Additive((1, 0)), Additive((1, 0))), ((1, 1), (1, 1)), (2, 2))
    winst = WeightedInstance(inst, (Fraction(1, 2), Fraction(1, 2)), (0, 0))
    lp = solve_conf_lp(winst, 0.1)
    assert not lp.feasible and lp.objective == -math.inf
    assert exact_weighted(winst).nsw == 0


def test_lp_marginals_respect_invariants():
    winst = gen.weighted(3, 5, seed=12)
    lp = solve_conf_lp(winst, 0.1)
    x = lp.x
    assert np.all(x.worker_totals() <= 1 + 1e-9)
    assert np.all(x.firm_totals() <= np.array(winst.instance.capacities) + 1e-9)
    for c in lp.columns:
        assert len(c.workers) <= winst.instance.capacities[c.firm]
        assert math.isfinite(c.coef)


def test_fractional_assignment_from_columns():
    cols = [Column(0, frozenset({0, 1}), 0.0, 0.5), Column(0, frozenset({1}), 0.0, 0.5),
            Column(1, frozenset({0}), 0.0, 0.5)]
    x = FractionalAssignment.from_columns(cols, 2, 2).x
    assert x.tolist() == [[0.5, 1.0], [0.5, 0.0]]


def test_fractional_assignment_rescales_overfull_worker():
    cols = [Column(0, frozenset({0}), 0.0, 0.5), Column(1, frozenset({0}), 0.0, 1.0)]
    x = FractionalAssignment.from_columns(cols, 2, 1).x
    assert x[:, 0] == pytest.approx([1 / 3, 2 / 3])


def test_weighted_uniform_tiny(tiny_two_sided):
    res = solve_weighted(WeightedInstance.uniform(tiny_two_sided), 0.1, trials=4, seed=0)
    assert res.nsw == pytest.approx(4 ** (1 / 3))


def test_integral_lp_gives_its_support():
    inst = TwoSidedInstance((Additive((5, 1)), Additive((1, 5))), ((5, 1), (1, 5)), (1, 1))
    winst = WeightedInstance.uniform(inst)
    res = solve_weighted(winst, 0.1, trials=5, seed=3)
    assert res.lp.x.is_integral()
    assert res.matching.assignment == (0, 1)
    assert len({t["ln_nsw"] for t in res.diagnostics["trials"]}) == 1


def test_one_sided_weights_give_feasible_allocation():
    winst = gen.weighted(2, 4, seed=2)
    inst = winst.instance
    eta = (Fraction(1, 2), Fraction(1, 2))
    one = WeightedInstance(inst, eta, (0,) * inst.m)
    res = solve_weighted(one, 0.1, trials=8, seed=1)
    assert res.matching.is_feasible(inst.capacities)
    best = exact_one_sided(inst.as_one_sided()).nsw
    assert weighted_nsw(one, res.matching) <= best * (1 + 1e-9)


def test_weighted_diagnostics_and_reproducibility():
    winst = gen.weighted(2, 4, seed=6)
    a = solve_weighted(winst, 0.1, trials=6, seed=7)
    b = solve_weighted(winst, 0.1, trials=6, seed=7)
    assert a.matching == b.matching
    d = a.to_json()
    for key in ("lp_objective", "columns", "x_marginals", "trials", "best_matching", "floor"):
        assert key in d
    assert [t["seed"] for t in d["trials"]] == [[7, t] for t in range(6)]
    assert a.matching.is_feasible(winst.instance.capacities)


def test_weighted_needs_trials():
    with pytest.raises(InstanceError):
        solve_weighted(gen.weighted(1, 1, seed=0), 0.1, trials=0)


def test_combined_bound_values():
    assert combined_bound(3, 3) == pytest.approx(1.0)
    x = math.exp(1 / math.e)
    assert combined_bound(x, 1) == pytest.approx(math.exp(1 / (math.e * (x + 1))), rel=1e-12)
    assert combined_bound(x, 1) == pytest.approx(1.163, abs=1e-3)


def test_combined_picks_better_branch():
    inst = gen.two_sided(2, 4, seed=9)
    res = solve_unweighted_best(inst, 0.1, trials=8, seed=0)
    assert res.nsw == pytest.approx(max(res.diagnostics["flow_nsw"], res.diagnostics["rounding_nsw"]))
    assert res.nsw == pytest.approx(nsw_two_sided(inst, res.matching))


def test_combined_on_balanced_instance_is_exact():
    inst = TwoSidedInstance((Additive((4, 1)), Additive((1, 4))), ((2, 1), (1, 2)), (1, 1))
    res = solve_unweighted_best(inst, 0.1, trials=4)
    assert res.diagnostics["bound"] == pytest.approx(1.0)
    assert res.nsw == pytest.approx(exact_two_sided(inst).nsw)


# ---------------------------------------------------------------------------
# knapsack DP and the oracle against brute force


@st.composite
def dp_cases(draw):
    m = draw(st.integers(1, 7))
    cap = draw(st.integers(1, 4))
    seed = draw(st.integers(0, 10**6))
    rng = np.random.default_rng(seed)
    values = [gen.random_rational(rng, zero_prob=0.2) for _ in range(m)]
    alpha = [float(a) for a in rng.normal(0, 1, m)]
    if rng.random() < 0.2:
        alpha[int(rng.integers(m))] = math.inf
    eps = draw(st.sampled_from([0.1, 0.5, 1.0]))
    return values, alpha, cap, eps


@settings(max_examples=80, deadline=None)
@given(dp_cases())
def test_dp_cells_match_brute_force(case):
    values, alpha, cap, eps = case
    for star in range(len(values)):
        if values[star] == 0 or alpha[star] == math.inf:
            continue
        table = knapsack_table(alpha, values, star, cap, eps)
        assert table_mismatches(table, alpha, cap) == []
