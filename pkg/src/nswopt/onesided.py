"""Local-search approximation for capacitated one-sided Nash welfare.

Pipeline (on the exact-capacitated instance, see :func:`to_exact_capacitated`):

1. a max-product one-to-one matching of agents to items fixes the item set
   ``H``; the rest ``J`` goes to local search;
2. local search hands every agent ``c_i - 1`` items of ``J`` and applies
   two-way swaps (agent-agent or agent-pool) while one raises the product of
   *endowed* values by more than the threshold factor;
3. the items of ``H`` are rematched on top of the local-search bundles.

The guarantee is ``NSW(ALG) >= NSW(OPT) / (6 + eps)`` for monotone
submodular valuations.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InfeasibleError, InstanceError
from .model import (
    Allocation,
    OneSidedInstance,
    WithDummies,
    ln,
    nsw_one_sided,
)

SWAP_SLACK = 1e-9


# --------------------------------------------------------------------------
# reductions and matchings


def to_exact_capacitated(inst: OneSidedInstance):
    """Pad with worthless dummy items until ``m == sum(c_i)``.

    Returns ``(padded_instance, m_real)``; items ``>= m_real`` are dummies.
    When ``m >= sum(c_i)`` the instance is returned unchanged.
    """
    total = sum(inst.capacities)
    if inst.m >= total:
        return inst, inst.m
    vals = tuple(WithDummies(v, total) for v in inst.valuations)
    return OneSidedInstance(vals, inst.capacities, total), inst.m


def strip_dummies(A: Allocation, m_real: int) -> Allocation:
    return Allocation(tuple(frozenset(j for j in b if j < m_real) for b in A.bundles))


def max_product_matching(weights: Sequence[Sequence[Fraction]]):
    """Agent-perfect matching maximizing the product of matched weights.

    ``weights[i][j]`` is agent ``i``'s weight for item ``j``.  Returns
    ``(tau, positive)`` with ``tau[i]`` the item of agent ``i``.  When every
    agent-perfect matching contains a zero weight, ``positive`` is False and
    ``tau`` is some agent-perfect matching using as many positive edges as
    possible.
    """
    n = len(weights)
    m = len(weights[0]) if n else 0
    if m < n:
        raise InstanceError(f"need at least as many items ({m}) as agents ({n})")
    if n == 0:
        return [], True
    cost = np.full((n, m), np.inf)
    positive = np.zeros((n, m), dtype=bool)
    for i, row in enumerate(weights):
        for j, w in enumerate(row):
            if w > 0:
                cost[i, j] = -ln(w)
                positive[i, j] = True
    try:
        rows, cols = linear_sum_assignment(cost)
    except ValueError:
        # no perfect matching on the positive support
        rows, cols = linear_sum_assignment(np.where(positive, 0.0, 1.0))
        tau = [0] * n
        for i, j in zip(rows, cols):
            tau[i] = int(j)
        return tau, False
    tau = [0] * n
    for i, j in zip(rows, cols):
        tau[i] = int(j)
    return tau, True


# --------------------------------------------------------------------------
# local search


@dataclass(frozen=True)
class PartialSwap:
    """Agent ``i`` gives up ``j`` for the unallocated item ``k``."""

    i: int
    j: int
    k: int


@dataclass(frozen=True)
class FullSwap:
    """Agent ``i`` trades ``j`` for agent ``i2``'s item ``k``."""

    i: int
    j: int
    i2: int
    k: int


@dataclass
class LocalSearchState:
    inst: OneSidedInstance
    J: frozenset
    eps: float
    active: tuple
    favorite: dict
    offset: dict  # v_i(favorite(i)) per active agent
    bundles: list  # one set per agent
    pool: set  # items of J not held by an active agent
    swaps: int = 0
    extended: bool = False
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def eps_bar(self) -> float:
        return (1 + self.eps) ** (1 / self.inst.m) - 1

    @property
    def eps_hat(self) -> float:
        return (1 + self.eps) ** (self.inst.n / self.inst.m) - 1

    @property
    def log_threshold(self) -> float:
        """``ln(1 + eps_hat)``: a swap must raise the log-product by more."""
        return self.inst.n / self.inst.m * math.log1p(self.eps)

    @property
    def iterations_bound(self) -> int:
        m = self.inst.m
        if m <= 1:
            return 0
        return math.ceil(math.log(m) / math.log1p(self.eps_bar))

    def endowed(self, i: int, items) -> Fraction:
        S = frozenset(items)
        key = (i, S)
        val = self._cache.get(key)
        if val is None:
            val = self.inst.valuations[i].value(S) + self.offset[i]
            self._cache[key] = val
        return val

    def owner(self) -> dict:
        return {j: i for i, b in enumerate(self.bundles) for j in b}


def _initial_bundles(inst, J, active, need):
    """Round-robin over active agents, each taking its best remaining item."""
    remaining = set(J)
    bundles = [set() for _ in range(inst.n)]
    singles = {
        i: {j: inst.valuations[i].value((j,)) for j in J} for i in active
    }
    while any(len(bundles[i]) < need[i] for i in active):
        for i in active:
            if len(bundles[i]) >= need[i]:
                continue
            best = max(sorted(remaining), key=lambda j: singles[i][j])
            bundles[i].add(best)
            remaining.discard(best)
    return bundles


def local_search(
    inst: OneSidedInstance,
    J,
    eps: float,
    initial: Optional[Sequence] = None,
) -> LocalSearchState:
    """Swap-based local search over the items ``J``.

    ``inst`` must be exact-capacitated-sized (``m >= sum(c_i)``).  Every
    agent ends with exactly ``c_i - 1`` items of ``J``.  ``initial``
    optionally fixes the starting bundles of the active agents.
    """
    if eps <= 0:
        raise InstanceError("eps must be positive")
    J = frozenset(J)
    need = [c - 1 for c in inst.capacities]
    if sum(need) > len(J):
        raise InfeasibleError(
            f"local search needs {sum(need)} items but only {len(J)} are available"
        )
    order = sorted(J)
    active, favorite, offset = [], {}, {}
    for i, v in enumerate(inst.valuations):
        if not order or v.value(J) <= 0:
            continue
        fav = max(order, key=lambda j: v.value((j,)))
        val = v.value((fav,))
        if val <= 0:
            continue
        active.append(i)
        favorite[i] = fav
        offset[i] = val
    active = tuple(active)

    if initial is not None:
        bundles = [set(b) for b in initial]
        if len(bundles) != inst.n:
            raise InstanceError("initial allocation needs one bundle per agent")
        for i in range(inst.n):
            if i not in active:
                bundles[i] = set()
            elif len(bundles[i]) != need[i] or not bundles[i] <= J:
                raise InstanceError(f"initial bundle of agent {i} must be {need[i]} items of J")
        held = [j for b in bundles for j in b]
        if len(held) != len(set(held)):
            raise InstanceError("initial bundles overlap")
    else:
        bundles = _initial_bundles(inst, order, active, need)
    pool = set(J) - {j for b in bundles for j in b}

    state = LocalSearchState(inst, J, eps, active, favorite, offset, bundles, pool)
    while True:
        swap = find_improving_swap(state)
        if swap is None:
            break
        apply_swap(state, swap)

    # hand the leftover items to agents that value J at zero, in index order
    leftovers = sorted(pool)
    for i in range(inst.n):
        if i in active:
            continue
        while len(bundles[i]) < need[i]:
            j = leftovers.pop(0)
            bundles[i].add(j)
            pool.discard(j)
    state.extended = True
    return state


def swap_log_gain(state: LocalSearchState, swap) -> float:
    """Log of the endowed-product ratio after/before the swap."""
    R = state.bundles
    if isinstance(swap, PartialSwap):
        i, j, k = swap.i, swap.j, swap.k
        return ln(state.endowed(i, R[i] - {j} | {k})) - ln(state.endowed(i, R[i]))
    i, j, i2, k = swap.i, swap.j, swap.i2, swap.k
    return (
        ln(state.endowed(i, R[i] - {j} | {k}))
        + ln(state.endowed(i2, R[i2] - {k} | {j}))
        - ln(state.endowed(i, R[i]))
        - ln(state.endowed(i2, R[i2]))
    )


def swap_gain_test(state: LocalSearchState, swap) -> bool:
    """True iff the swap beats the ``1 + eps_hat`` factor (strictly, with slack)."""
    if isinstance(swap, PartialSwap):
        if swap.i not in state.offset or swap.j not in state.bundles[swap.i]:
            raise InstanceError("partial swap must take an item from an active agent")
        if swap.j == swap.k:
            return False
    else:
        if swap.i not in state.offset or swap.i2 not in state.offset:
            raise InstanceError("full swap needs two active agents")
        if swap.j == swap.k or swap.i == swap.i2:
            return False
    return swap_log_gain(state, swap) > state.log_threshold + SWAP_SLACK


def find_improving_swap(state: LocalSearchState):
    """First improving swap: partial swaps first, then full, lexicographic."""
    R = state.bundles
    pool = sorted(state.pool)
    for i in state.active:
        for j in sorted(R[i]):
            for k in pool:
                s = PartialSwap(i, j, k)
                if swap_gain_test(state, s):
                    return s
    for a, i in enumerate(state.active):
        for i2 in state.active[a + 1:]:
            for j in sorted(R[i]):
                for k in sorted(R[i2]):
                    s = FullSwap(i, j, i2, k)
                    if swap_gain_test(state, s):
                        return s
    return None


def apply_swap(state: LocalSearchState, swap) -> None:
    R = state.bundles
    if isinstance(swap, PartialSwap):
        R[swap.i].remove(swap.j)
        R[swap.i].add(swap.k)
        state.pool.remove(swap.k)
        state.pool.add(swap.j)
    else:
        R[swap.i].remove(swap.j)
        R[swap.i2].remove(swap.k)
        R[swap.i].add(swap.k)
        R[swap.i2].add(swap.j)
    state.swaps += 1


# --------------------------------------------------------------------------
# prices (analysis diagnostics)


@dataclass(frozen=True)
class PriceTable:
    """Sparse ``(j, k) -> p_jk``; absent pairs have price zero."""

    prices: dict

    def __call__(self, j: int, k: int) -> Fraction:
        return self.prices.get((j, k), Fraction(0))


def compute_prices(state: LocalSearchState) -> PriceTable:
    """``p_jk = max(0, v̄(R) - v̄(R - j + k)) / v̄(R - j + k)`` for ``j`` held
    by an active agent with bundle ``R``; zero otherwise."""
    prices = {}
    for i in state.active:
        R = frozenset(state.bundles[i])
        base = state.endowed(i, R)
        for j in R:
            for k in state.J:
                if k == j:
                    continue
                alt = state.endowed(i, R - {j} | {k})
                gap = base - alt
                if gap > 0:
                    prices[(j, k)] = gap / alt
    return PriceTable(prices)


# --------------------------------------------------------------------------
# rematching and the full solver


def rematch(inst: OneSidedInstance, bundles, H) -> Allocation:
    """Give every agent one item of ``H`` on top of its bundle, maximizing
    the product of the augmented bundle values."""
    H = sorted(H)
    if len(H) != inst.n:
        raise InstanceError(f"rematching needs exactly n={inst.n} items, got {len(H)}")
    weights = [
        [v.value(set(bundles[i]) | {h}) for h in H] for i, v in enumerate(inst.valuations)
    ]
    delta, _ = max_product_matching(weights)
    return Allocation(tuple(frozenset(bundles[i]) | {H[delta[i]]} for i in range(inst.n)))


@dataclass
class OneSidedResult:
    allocation: Allocation
    nsw: float
    diagnostics: dict
    state: LocalSearchState

    def to_json(self) -> dict:
        return {"allocation": self.allocation.as_lists(), **self.diagnostics}


def solve_one_sided(inst: OneSidedInstance, eps: float = 0.1) -> OneSidedResult:
    """(6 + eps)-approximate capacitated one-sided Nash welfare."""
    if eps <= 0:
        raise InstanceError("eps must be positive")
    q0 = inst.queries
    t0 = time.perf_counter()
    exact, m_real = to_exact_capacitated(inst)
    inner_eps = eps / 6

    weights = [[v.value((j,)) for j in range(exact.m)] for v in exact.valuations]
    tau, positive = max_product_matching(weights)
    H = frozenset(tau)
    J = frozenset(range(exact.m)) - H
    t1 = time.perf_counter()

    state = local_search(exact, J, inner_eps)
    t2 = time.perf_counter()

    full = rematch(exact, state.bundles, H)
    A = strip_dummies(full, m_real)
    t3 = time.perf_counter()

    nsw = nsw_one_sided(inst, A)
    diagnostics = {
        "swaps": state.swaps,
        "iterations_bound": state.iterations_bound,
        "queries": inst.queries - q0,
        "phase_ms": {
            "matching": 1000 * (t1 - t0),
            "local_search": 1000 * (t2 - t1),
            "rematch": 1000 * (t3 - t2),
        },
        "nsw": nsw,
        "positive_phase1": positive,
        "eps_local": inner_eps,
        "dummies": exact.m - m_real,
    }
    return OneSidedResult(A, nsw, diagnostics, state)
