import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nswopt import generate as gen
from nswopt.errors import InstanceError
from nswopt.model import Additive, CappedAdditive, OneSidedInstance, nsw_one_sided
from nswopt.onesided import (
    FullSwap,
    PartialSwap,
    apply_swap,
    compute_prices,
    local_search,
    max_product_matching,
    rematch,
    solve_one_sided,
    swap_gain_test,
    to_exact_capacitated,
)
from nswopt.oracle import exact_one_sided, verify_no_improving_swap


def test_padding_adds_dummies():
    inst = OneSidedInstance((Additive((1,)), Additive((2,))), (2, 1), 1)
    padded, m_real = to_exact_capacitated(inst)
    assert (padded.m, m_real) == (3, 1)


def test_padding_noop_when_exact():
    inst = OneSidedInstance((Additive((1, 2)),), (2,), 2)
    padded, _ = to_exact_capacitated(inst)
    assert padded is inst


def test_dummies_are_worthless():
    inst = OneSidedInstance((Additive((1,)), Additive((2,))), (2, 1), 1)
    padded, _ = to_exact_capacitated(inst)
    v = padded.valuations[0]
    assert v.value({0}) == v.value({0, 1, 2})


def test_matching_picks_max_product():
    tau, positive = max_product_matching([[2, 1], [1, 2]])
    assert list(tau) == [0, 1] and positive


def test_matching_avoids_zeros():
    tau, positive = max_product_matching([[5, 0, 0], [0, 1, 0], [0, 0, 7]])
    assert list(tau) == [0, 1, 2] and positive


def test_matching_all_zero():
    _, positive = max_product_matching([[0, 0], [0, 0]])
    assert not positive


def test_matching_needs_enough_items():
    with pytest.raises(InstanceError):
        max_product_matching([[1], [1]])


def _single_agent():
    return OneSidedInstance((Additive((2, 1)),), (2,), 2)


def test_partial_swap_example():
    state = local_search(_single_agent(), {0, 1}, 0.1, initial=[{1}])
    assert state.bundles[0] == {0}
    assert state.swaps == 1


def test_partial_swap_gain_test():
    inst = _single_agent()
    state = local_search(inst, {0, 1}, 0.1, initial=[{0}])
    state.bundles[0] = {1}
    state.pool = {0}
    assert swap_gain_test(state, PartialSwap(0, 1, 0))
    assert not swap_gain_test(state, PartialSwap(0, 1, 1))


@pytest.mark.parametrize("eps,expected", [(0.44, False), (0.43, True)])
def test_threshold_is_strict(eps, expected):
    # endowed values 3 + 2 -> 3 + 3: ratio 6/5, and (1 + 0.44)^(1/2) = 6/5
    inst = OneSidedInstance((Additive((3, 2)),), (2,), 2)
    state = local_search(inst, {0, 1}, 10.0, initial=[{1}])
    state.eps = eps
    assert swap_gain_test(state, PartialSwap(0, 1, 0)) is expected


def test_full_swap_uncrosses():
    v0 = Additive((1, 0, 0, 0))
    v1 = Additive((0, 1, 0, 0))
    inst = OneSidedInstance((v0, v1), (2, 2), 4)
    state = local_search(inst, {0, 1, 2, 3}, 0.1, initial=[{1}, {0}])
    assert state.bundles[0] == {0} and state.bundles[1] == {1}


def test_full_swap_identical_items():
    inst = OneSidedInstance((Additive((1, 1, 1, 1)), Additive((1, 1, 1, 1))), (2, 2), 4)
    state = local_search(inst, {0, 1, 2, 3}, 0.1)
    j = next(iter(state.bundles[0]))
    assert not swap_gain_test(state, FullSwap(0, j, 1, j))


def test_unit_capacities_need_no_search():
    inst = gen.footnote(3, 2, 5, capacity=1)
    state = local_search(inst, {0, 1, 2}, 0.1)
    assert all(not b for b in state.bundles) and state.swaps == 0


def test_rematch_single_agent():
    inst = OneSidedInstance((Additive((1, 2, 3)),), (3,), 3)
    A = rematch(inst, [{0, 1}], {2})
    assert A.bundles[0] == {0, 1, 2}


def test_rematch_from_empty_bundles_is_matching():
    inst = OneSidedInstance((Additive((3, 1)), Additive((1, 3))), (1, 1), 2)
    A = rematch(inst, [set(), set()], {0, 1})
    assert A.bundles == (frozenset({0}), frozenset({1}))


def test_rematch_follows_marginals():
    # agent 0 already holds item 2, which caps out its use for either new item
    v0 = CappedAdditive((4, 1, 4), 1)
    v1 = Additive((3, 1, 0))
    inst = OneSidedInstance((v0, v1), (2, 1), 3)
    A = rematch(inst, [{2}, set()], {0, 1})
    best = max(
        itertools.permutations([0, 1]),
        key=lambda p: v0.value({2, p[0]}) * v1.value({p[1]}),
    )
    assert best == (1, 0)
    assert A.bundles[0] == {2, 1} and A.bundles[1] == {0}


def test_rematch_needs_n_items():
    inst = OneSidedInstance((Additive((1, 2)),), (2,), 2)
    with pytest.raises(InstanceError):
        rematch(inst, [set()], {0, 1})


@pytest.mark.parametrize("n,k,c", [(2, 2, 5), (3, 2, 5), (4, 3, 2)])
def test_footnote_capacity_one(n, k, c):
    res = solve_one_sided(gen.footnote(n, k, c, capacity=1), 0.1)
    assert res.nsw == pytest.approx(c)


def test_single_agent_takes_top_two():
    inst = OneSidedInstance((Additive((3, 2, 1)),), (2,), 3)
    res = solve_one_sided(inst, 0.1)
    assert res.allocation.bundles[0] == {0, 1}
    assert res.nsw == pytest.approx(5)


def test_all_zero_instance():
    inst = OneSidedInstance((Additive((0, 0)), Additive((0, 0))), (1, 2), 2)
    res = solve_one_sided(inst, 0.1)
    assert res.nsw == 0
    assert res.allocation.is_feasible(inst.capacities)


def test_diagnostics_fields():
    res = solve_one_sided(gen.one_sided(3, 6, seed=5), 0.1)
    d = res.to_json()
    for key in ("swaps", "iterations_bound", "queries", "phase_ms", "nsw", "allocation"):
        assert key in d
    assert d["queries"] > 0


def test_eps_must_be_positive():
    with pytest.raises(InstanceError):
        solve_one_sided(gen.one_sided(2, 3, seed=0), 0)


def test_price_zero_for_unowned_and_improving():
    inst = OneSidedInstance((Additive((2, 1, 0, 0)), Additive((0, 0, 1, 1))), (2, 2), 4)
    state = local_search(inst, {0, 1, 2, 3}, 0.1)
    p = compute_prices(state)
    owned = {j for i in state.active for j in state.bundles[i]}
    for j in set(range(4)) - owned:
        for k in range(4):
            assert p(j, k) == 0


def test_price_matches_formula():
    inst = OneSidedInstance((Additive((4, 1, 2)),), (3,), 3)
    state = local_search(inst, {0, 1, 2}, 0.1, initial=[{0, 2}])
    p = compute_prices(state)
    # favourite item 0 (value 4): vbar({0,2}) = 10, vbar({1,2}) = 7
    assert p(0, 1) == Fraction(10 - 7, 7)
    assert p(2, 1) == Fraction(10 - 9, 9)
    assert p(1, 0) == 0


# ---------------------------------------------------------------------------
# properties


@st.composite
def small_instances(draw):
    n = draw(st.integers(1, 4))
    m = draw(st.integers(1, 8))
    kind = draw(st.sampled_from(gen.SUBMODULAR_KINDS))
    seed = draw(st.integers(0, 10**6))
    return gen.one_sided(n, m, seed=seed, kind=kind)


@settings(max_examples=60, deadline=None)
@given(small_instances())
def test_output_feasible_and_locally_optimal(inst):
    res = solve_one_sided(inst, 0.1)
    assert res.allocation.is_feasible(inst.capacities)
    assert all(j < inst.m for b in res.allocation.bundles for j in b)
    state = res.state
    for i, b in enumerate(state.bundles):
        assert len(b) == state.inst.capacities[i] - 1
    assert verify_no_improving_swap(state)


@settings(max_examples=40, deadline=None)
@given(small_instances())
def test_swaps_within_bound(inst):
    res = solve_one_sided(inst, 0.1)
    assert res.state.swaps <= res.diagnostics["iterations_bound"]


@settings(max_examples=40, deadline=None)
@given(small_instances())
def test_guarantee_against_oracle(inst):
    res = solve_one_sided(inst, 0.1)
    opt = exact_one_sided(inst).nsw
    assert res.nsw * (6 + 0.1) >= opt * (1 - 1e-9)


@settings(max_examples=30, deadline=None)
@given(small_instances())
def test_swaps_preserve_cardinality(inst):
    padded, _ = to_exact_capacitated(inst)
    J = set(range(padded.m)) - set(range(padded.n))
    if sum(c - 1 for c in padded.capacities) > len(J):
        return
    state = local_search(padded, J, 0.1)
    sizes = [len(b) for b in state.bundles]
    for i in state.active:
        for j in list(state.bundles[i]):
            for k in sorted(state.pool):
                s = PartialSwap(i, j, k)
                apply_swap(state, s)
                apply_swap(state, PartialSwap(i, k, j))
    assert [len(b) for b in state.bundles] == sizes


def test_nsw_matches_reported():
    inst = gen.one_sided(3, 7, seed=11, kind="coverage")
    res = solve_one_sided(inst, 0.1)
    assert res.nsw == nsw_one_sided(inst, res.allocation)
