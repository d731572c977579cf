import dataclasses
import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nswopt import generate as gen
from nswopt.conflp import DualPoint, column_coefficient, solve_conf_lp
from nswopt.errors import ResourceError
from nswopt.flow import FlowNetwork, min_cost_flow
from nswopt.model import (
    Additive,
    Matching,
    OneSidedInstance,
    TwoSidedInstance,
    WeightedInstance,
    nsw_one_sided,
    nsw_two_sided,
    weighted_nsw,
)
from nswopt.onesided import solve_one_sided
from nswopt.oracle import (
    EnumerationBudget,
    exact_one_sided,
    exact_two_sided,
    exact_weighted,
    feasible_allocations,
    verify_dual_feasible,
    verify_flow_optimal,
    verify_no_improving_swap,
)
from nswopt.twosided import build_network, solve_two_sided_ptas


@pytest.mark.parametrize("n,k,c", [(2, 2, 3), (3, 1, 7), (2, 3, Fraction(5, 2))])
def test_footnote_capacity_one(n, k, c):
    res = exact_one_sided(gen.footnote(n, k, c, capacity=1))
    assert res.product == Fraction(c) ** n
    assert res.nsw == pytest.approx(float(c))


def test_footnote_unbounded_capacity_splits_evenly():
    res = exact_one_sided(gen.footnote(2, 2, 3))
    assert res.product == 36
    assert sorted(len(b) for b in res.solution.bundles) == [2, 2]


def test_single_agent_takes_best_feasible_set():
    v = Additive((4, 1, 3, 2))
    res = exact_one_sided(OneSidedInstance((v,), (2,), 4))
    assert res.solution.bundles[0] == {0, 2}
    assert res.product == 7


def test_example1_optimum_under_capacity():
    res = exact_one_sided(gen.example1(2))
    assert res.product == 4 and res.solution.bundles[0] == {1, 3}


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("kind", ["additive", "coverage", "xos"])
def test_vectorized_and_recursive_agree(seed, kind):
    inst = gen.one_sided(3, 5, seed=seed, kind=kind)
    fast = exact_one_sided(inst, method="vectorized")
    slow = exact_one_sided(inst, method="recursive")
    assert fast.product == slow.product
    assert fast.solution == slow.solution
    assert nsw_one_sided(inst, fast.solution) == pytest.approx(fast.nsw)


@pytest.mark.parametrize("seed", range(6))
def test_enumeration_order_does_not_change_value(seed):
    inst = gen.two_sided(2, 4, seed=seed)
    assert exact_two_sided(inst).product == exact_two_sided(inst, reverse=True).product
    winst = gen.weighted(2, 4, seed=seed)
    assert exact_weighted(winst).nsw == pytest.approx(exact_weighted(winst, reverse=True).nsw)


@pytest.mark.parametrize("seed", range(6))
def test_weighted_reductions(seed):
    inst = gen.two_sided(2, 4, seed=seed)
    uniform = exact_weighted(WeightedInstance.uniform(inst))
    assert uniform.nsw == pytest.approx(exact_two_sided(inst).nsw)
    eta = (Fraction(1, 2), Fraction(1, 2))
    firms_only = exact_weighted(WeightedInstance(inst, eta, (0,) * inst.m))
    assert firms_only.nsw == pytest.approx(exact_one_sided(inst.as_one_sided()).nsw)


@pytest.mark.parametrize("seed", range(6))
def test_ptas_enumeration_branch_is_exact(seed):
    inst = gen.two_sided(2, 4, seed=seed)
    res = solve_two_sided_ptas(inst, 0.1)
    assert res.nsw == pytest.approx(exact_two_sided(inst).nsw)


def test_exact_two_sided_value_matches_model():
    inst = gen.two_sided(3, 4, seed=4)
    res = exact_two_sided(inst)
    assert nsw_two_sided(inst, res.solution) == pytest.approx(res.nsw)
    assert res.to_json()["exact"] is True


def test_feasible_allocation_count():
    # each item goes to one of two agents or nobody; capacity 1 each
    brute = sum(
        1
        for a in itertools.product(range(3), repeat=3)
        if a.count(0) <= 1 and a.count(1) <= 1
    )
    assert feasible_allocations(3, (1, 1)) == brute


def test_budget_exceeded():
    inst = gen.one_sided(3, 6, seed=0)
    with pytest.raises(ResourceError):
        exact_one_sided(inst, EnumerationBudget(10))
    with pytest.raises(ResourceError):
        exact_two_sided(gen.two_sided(3, 6, seed=0), EnumerationBudget(10))


def test_budget_environment_override(monkeypatch):
    monkeypatch.setenv("NSWOPT_BUDGET", "5")
    assert EnumerationBudget().max_states == 5
    with pytest.raises(ResourceError):
        exact_one_sided(gen.one_sided(2, 4, seed=1))


# ---------------------------------------------------------------------------
# verifiers


def test_swap_verifier_accepts_solver_output():
    for seed in range(5):
        res = solve_one_sided(gen.one_sided(3, 7, seed=seed), 0.1)
        assert verify_no_improving_swap(res.state)


def test_swap_verifier_catches_doctored_state():
    inst = OneSidedInstance((Additive((10, 1, 5)),), (2,), 3)
    state = solve_one_sided(inst, 0.1).state
    assert state.bundles[0] == {2}
    bad = dataclasses.replace(state, bundles=[{1}], pool={2}, _cache={})
    verdict = verify_no_improving_swap(bad)
    assert not verdict
    assert verdict.witness[:4] == ("partial", 0, 1, 2)


def _two_routes():
    net = FlowNetwork(4, 0, 1, 1)
    net.add_edge(0, 2, 0, 1, 0)
    net.add_edge(2, 1, 0, 1, 5)
    net.add_edge(0, 3, 0, 1, 0)
    net.add_edge(3, 1, 0, 1, 1)
    return net


def test_flow_verifier_finds_negative_cycle():
    net = _two_routes()
    verdict = verify_flow_optimal(net, [1, 1, 0, 0])
    assert not verdict
    kind, cycle = verdict.witness
    assert kind == "cycle"
    cost = sum(d * net.edges[e].cost for e, d in cycle)
    assert cost < 0
    assert verify_flow_optimal(net, [0, 0, 1, 1])


def test_flow_verifier_rejects_infeasible_flow():
    net = _two_routes()
    assert verify_flow_optimal(net, [1, 0, 0, 0]).witness[0] == "infeasible"
    assert verify_flow_optimal(net, [1, 1]).witness[0] == "infeasible"


@pytest.mark.parametrize("seed", range(5))
def test_flow_verifier_accepts_min_cost_flow(seed):
    net = build_network(gen.two_sided(3, 6, seed=seed))
    assert verify_flow_optimal(net, min_cost_flow(net))


def test_dual_verifier_rejects_double_slack():
    eps = 0.1
    inst = TwoSidedInstance((Additive((3,)),), ((2,),), (1,))
    winst = WeightedInstance.uniform(inst)
    coef = column_coefficient(winst, 0, frozenset({0}))
    slack = math.log1p(eps / 2)
    bad = DualPoint((0.0,), (coef - 2 * slack,))
    verdict = verify_dual_feasible(winst, bad, eps)
    assert not verdict
    i, S, gap = verdict.witness
    assert (i, tuple(S)) == (0, (0,)) and gap == pytest.approx(2 * slack)
    ok = DualPoint((0.0,), (coef - 0.5 * slack,))
    assert verify_dual_feasible(winst, ok, eps)


def test_dual_verifier_rejects_negative_alpha():
    inst = TwoSidedInstance((Additive((3,)),), ((2,),), (1,))
    winst = WeightedInstance.uniform(inst)
    verdict = verify_dual_feasible(winst, DualPoint((-1.0,), (100.0,)), 0.1)
    assert not verdict and verdict.witness[0] == "negative alpha"


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_lp_dual_passes_verifier(seed):
    winst = gen.weighted(2, 3, seed=seed)
    lp = solve_conf_lp(winst, 0.2)
    if lp.feasible:
        assert verify_dual_feasible(winst, lp.dual, 0.2)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_exact_weighted_dominates_every_matching(seed):
    winst = gen.weighted(2, 3, seed=seed, cap_range=(1, 2))
    best = exact_weighted(winst)
    inst = winst.instance
    for a in itertools.product(list(range(inst.n)) + [None], repeat=inst.m):
        mu = Matching(a, inst.n)
        if mu.is_feasible(inst.capacities):
            assert weighted_nsw(winst, mu) <= best.nsw * (1 + 1e-9)
