"""Brute-force optima and independent checkers.

Nothing here calls into the solver modules: optima come from plain
enumeration with exact rational comparisons, and the verifiers rebuild
their conditions from the raw instance data.  Ties in the optimum are
broken towards the lexicographically smallest assignment (item/worker 0
first, "unassigned" ranking after every agent), so outputs are canonical.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import ResourceError
from .model import (
    Allocation,
    Matching,
    OneSidedInstance,
    TwoSidedInstance,
    WeightedInstance,
    ln,
    nsw_one_sided,
    nsw_two_sided,
    weighted_nsw,
)

DEFAULT_BUDGET = 10**7
BLOCK = 1 << 17
TIE_TOL = 1e-9


@dataclass
class EnumerationBudget:
    """Caps the number of enumerated states; ``NSWOPT_BUDGET`` overrides the default."""

    max_states: int = field(default_factory=lambda: int(os.environ.get("NSWOPT_BUDGET", DEFAULT_BUDGET)))
    used: int = 0

    def charge(self, states: int) -> None:
        if self.used + states > self.max_states:
            raise ResourceError(
                f"enumeration of {states} states exceeds the budget of {self.max_states}"
                f" ({self.used} already used)"
            )
        self.used += states


@dataclass
class ExactResult:
    solution: object
    nsw: float
    product: Optional[Fraction]
    states: int

    def to_json(self) -> dict:
        if isinstance(self.solution, Allocation):
            body = {"allocation": self.solution.as_lists()}
        else:
            body = {"assignment": list(self.solution.assignment)}
        return {**body, "nsw": self.nsw, "exact": True, "states": self.states}


def _masks(m):
    return [frozenset(j for j in range(m) if mask >> j & 1) for mask in range(1 << m)]


def _value_tables(valuations, m, caps):
    """Exact ``v_i(mask)`` for masks within capacity, ``None`` beyond it."""
    sets = _masks(m)
    return [
        [v.value(S) if len(S) <= c else None for S in sets]
        for v, c in zip(valuations, caps)
    ]


# --------------------------------------------------------------------------
# one-sided


def exact_one_sided(inst: OneSidedInstance, budget: Optional[EnumerationBudget] = None,
                    method: str = "vectorized") -> ExactResult:
    """Nash-optimal partial allocation by enumerating every item -> agent-or-nobody map."""
    n, m = inst.n, inst.m
    budget = budget or EnumerationBudget()
    states = feasible_allocations(m, inst.capacities)
    budget.charge(states)
    if m > 20:
        raise ResourceError("item count too large for table enumeration")
    tabs = _value_tables(inst.valuations, m, inst.capacities)
    if method == "vectorized":
        codes = _one_sided_candidates(tabs, n, m)
    elif method == "recursive":
        codes = None
    else:
        raise ValueError(f"unknown method {method!r}")

    best, best_prod = None, None
    if codes is None:
        it = itertools.product(range(n + 1), repeat=m)
    else:
        it = (_digits(c, n + 1, m) for c in sorted(codes))
    for digits in it:
        prod = _one_sided_product(tabs, digits, n)
        if prod is None:
            continue
        if best_prod is None or prod > best_prod:
            best, best_prod = digits, prod
    bundles = tuple(frozenset(j for j, d in enumerate(best) if d == i) for i in range(n))
    A = Allocation(bundles)
    return ExactResult(A, nsw_one_sided(inst, A), best_prod, states)


def feasible_allocations(m: int, caps) -> int:
    """Number of item -> agent-or-nobody maps that respect every capacity."""
    ways = [1] + [0] * m  # ways[r]: ways to fill the agents so far using r items
    for c in caps:
        nxt = [0] * (m + 1)
        for used, w in enumerate(ways):
            if w:
                for k in range(min(c, m - used) + 1):
                    nxt[used + k] += w * math.comb(m - used, k)
        ways = nxt
    return sum(ways)


def _digits(code, base, m):
    out = [0] * m
    for j in range(m - 1, -1, -1):
        code, out[j] = divmod(code, base)
    return tuple(out)


def _one_sided_product(tabs, digits, n):
    masks = [0] * n
    for j, d in enumerate(digits):
        if d < n:
            masks[d] |= 1 << j
    prod = Fraction(1)
    for i in range(n):
        v = tabs[i][masks[i]]
        if v is None:
            return None
        prod *= v
    return prod


def _one_sided_candidates(tabs, n, m):
    """Codes whose float log-product is within tolerance of the float maximum.

    Codes are split into a leading part, looped over in Python, and a
    trailing block of items handled as one numpy array.  Infeasible bundles
    carry NaN in the log tables, so a single gather-and-add per agent scores
    a whole block.
    """
    base = n + 1
    low = 0
    while low < m and base ** (low + 1) <= BLOCK:
        low += 1
    high = m - low
    # bundle masks contributed by the trailing ``low`` items for every block offset
    offsets = np.arange(base**low, dtype=np.int64)
    place = base ** np.arange(low - 1, -1, -1, dtype=np.int64)
    digits = (offsets[:, None] // place) % base if low else np.zeros((1, 0), dtype=np.int64)
    bits = 1 << np.arange(high, m, dtype=np.int64)
    low_masks = [((digits == i) * bits).sum(axis=1) for i in range(n)]
    logs = [
        np.array([np.nan if t is None else ln(t) for t in tab]) for tab in tabs
    ]
    caps = [max(len(_bits(k)) for k, t in enumerate(tab) if t is not None) for tab in tabs]

    best = -np.inf
    cands = []
    first_feasible = None
    block = len(offsets)
    for h, lead in enumerate(itertools.product(range(base), repeat=high)):
        head = [0] * n
        for j, d in enumerate(lead):
            if d < n:
                head[d] |= 1 << j
        if any(bin(head[i]).count("1") > caps[i] for i in range(n)):
            continue
        score = np.zeros(block)
        for i in range(n):
            score += logs[i][low_masks[i] | head[i]]
        valid = ~np.isnan(score)
        if not valid.any():
            continue
        if first_feasible is None:
            first_feasible = h * block + int(np.flatnonzero(valid)[0])
        top = np.max(score[valid])
        if top == -np.inf:
            continue
        if top > best:
            best = top
            cut = best - TIE_TOL * max(1.0, abs(best))
            cands = [c for c in cands if c[1] >= cut]
        cut = best - TIE_TOL * max(1.0, abs(best))
        keep = np.flatnonzero(score >= cut)
        cands += [(h * block + int(k), float(score[k])) for k in keep]
    if best == -np.inf:
        # every allocation has NSW zero: the smallest feasible code is canonical
        return [] if first_feasible is None else [first_feasible]
    cut = best - TIE_TOL * max(1.0, abs(best))
    return [c for c, sc in cands if sc >= cut]


def _bits(mask):
    return [j for j in range(mask.bit_length()) if mask >> j & 1]


# --------------------------------------------------------------------------
# two-sided and weighted


def _assignments(n, m, caps, reverse=False):
    choices = range(n - 1, -1, -1) if reverse else range(n)
    for a in itertools.product(choices, repeat=m):
        load = [0] * n
        fine = True
        for i in a:
            load[i] += 1
            if load[i] > caps[i]:
                fine = False
                break
        if fine:
            yield a


def _utilities(tabs, worker_values, a, n):
    masks = [0] * n
    for j, i in enumerate(a):
        masks[i] |= 1 << j
    return [tabs[i][masks[i]] for i in range(n)], [worker_values[j][i] for j, i in enumerate(a)]


def exact_two_sided(inst: TwoSidedInstance, budget: Optional[EnumerationBudget] = None,
                    reverse: bool = False) -> ExactResult:
    """Nash-optimal matching over every capacity-feasible full assignment."""
    n, m = inst.n, inst.m
    budget = budget or EnumerationBudget()
    states = n**m
    budget.charge(states)
    tabs = _value_tables(inst.firm_valuations, m, inst.capacities)
    best, best_prod = None, None
    for a in _assignments(n, m, inst.capacities, reverse):
        firms, workers = _utilities(tabs, inst.worker_values, a, n)
        prod = Fraction(1)
        for u in firms + workers:
            prod *= u
            if not prod:
                break
        if best_prod is None or prod > best_prod or (prod == best_prod and a < best):
            best, best_prod = a, prod
    mu = Matching(best, n)
    return ExactResult(mu, nsw_two_sided(inst, mu), best_prod, states)


def _weighted_key(utils, weights, q):
    """``prod u^(w q)`` exactly, with ``0^0 = 1``; ``q`` clears every weight's denominator."""
    prod = Fraction(1)
    for u, w in zip(utils, weights):
        if w == 0:
            continue
        if u == 0:
            return Fraction(0)
        prod *= Fraction(u) ** int(w * q)
    return prod


def _weighted_log(utils, weights):
    total = 0.0
    for u, w in zip(utils, weights):
        if w == 0:
            continue
        if u == 0:
            return -math.inf
        total += float(w) * ln(u)
    return total


def exact_weighted(winst: WeightedInstance, budget: Optional[EnumerationBudget] = None,
                   reverse: bool = False) -> ExactResult:
    """Optimal weighted NSW matching.

    Values are compared exactly by raising to a common denominator of the
    weights when that is small, and in floating point otherwise.
    """
    inst = winst.instance
    n, m = inst.n, inst.m
    budget = budget or EnumerationBudget()
    states = n**m
    budget.charge(states)
    weights = list(winst.firm_weights) + list(winst.worker_weights)
    q = math.lcm(*(Fraction(w).denominator for w in weights))
    exact = q <= 256
    tabs = _value_tables(inst.firm_valuations, m, inst.capacities)
    best, best_key = None, None
    for a in _assignments(n, m, inst.capacities, reverse):
        firms, workers = _utilities(tabs, inst.worker_values, a, n)
        utils = firms + workers
        key = _weighted_key(utils, weights, q) if exact else _weighted_log(utils, weights)
        if best is None or key > best_key or (key == best_key and a < best):
            best, best_key = a, key
    mu = Matching(best, n)
    return ExactResult(mu, weighted_nsw(winst, mu), best_key if exact else None, states)


# --------------------------------------------------------------------------
# verifiers


@dataclass(frozen=True)
class Verdict:
    ok: bool
    witness: object = None

    def __bool__(self):
        return self.ok


def verify_no_improving_swap(state, slack: float = 1e-9) -> Verdict:
    """Re-check local optimality of a finished local-search state.

    Endowed values ``v_i(R) + v_i(favourite)`` are recomputed from the
    valuations; a swap counts as improving when it raises the product of
    the touched agents' endowed values by more than ``(1 + eps_hat)``.
    """
    inst = state.inst
    vals = inst.valuations
    factor = Fraction((1 + state.eps) ** (inst.n / inst.m)) * Fraction(1 + slack)
    fav_value = {i: vals[i].value((state.favorite[i],)) for i in state.active}
    R = [frozenset(b) for b in state.bundles]
    held = set().union(*(R[i] for i in state.active)) if state.active else set()
    free = sorted(set(state.J) - held)

    def bar(i, S):
        return vals[i].value(S) + fav_value[i]

    for i in state.active:
        before = bar(i, R[i])
        for j in sorted(R[i]):
            for k in free:
                after = bar(i, R[i] - {j} | {k})
                if after > factor * before:
                    return Verdict(False, ("partial", i, j, k, after / before))
    for i, i2 in itertools.combinations(state.active, 2):
        before = bar(i, R[i]) * bar(i2, R[i2])
        for j in sorted(R[i]):
            for k in sorted(R[i2]):
                after = bar(i, R[i] - {j} | {k}) * bar(i2, R[i2] - {k} | {j})
                if after > factor * before:
                    return Verdict(False, ("full", i, j, i2, k, after / before))
    return Verdict(True)


def verify_flow_optimal(net, flow, tol: float = 1e-9) -> Verdict:
    """Feasibility plus absence of a negative residual cycle (Bellman-Ford).

    The witness is ``("infeasible", reason)`` or ``("cycle", [edge, ...])``
    where each entry is ``(edge_index, direction)`` with direction +1 for a
    forward residual arc and -1 for a backward one.
    """
    f = list(getattr(flow, "flow", flow))
    if len(f) != len(net.edges):
        return Verdict(False, ("infeasible", "flow vector has the wrong length"))
    balance = [0] * net.num_nodes
    for idx, (e, x) in enumerate(zip(net.edges, f)):
        if not e.lower <= x <= e.upper:
            return Verdict(False, ("infeasible", f"edge {idx} carries {x} outside [{e.lower}, {e.upper}]"))
        balance[e.tail] -= x
        balance[e.head] += x
    for v, b in enumerate(balance):
        want = -net.value if v == net.source else net.value if v == net.sink else 0
        if b != want:
            return Verdict(False, ("infeasible", f"node {v} is unbalanced by {b - want}"))

    arcs = []
    for idx, (e, x) in enumerate(zip(net.edges, f)):
        if x < e.upper:
            arcs.append((e.tail, e.head, e.cost, (idx, +1)))
        if x > e.lower:
            arcs.append((e.head, e.tail, -e.cost, (idx, -1)))
    N = net.num_nodes
    dist = [0.0] * N
    pred = [None] * N
    last = None
    for _ in range(N):
        last = None
        for u, v, c, tag in arcs:
            if dist[u] + c < dist[v] - tol:
                dist[v] = dist[u] + c
                pred[v] = (u, tag)
                last = v
        if last is None:
            return Verdict(True)
    v = last
    for _ in range(N):
        v = pred[v][0]
    cycle, u = [], v
    while True:
        p, tag = pred[u]
        cycle.append(tag)
        u = p
        if u == v:
            break
    cycle.reverse()
    return Verdict(False, ("cycle", cycle))


def verify_dual_feasible(winst: WeightedInstance, dual, eps: float, tol: float = 1e-9) -> Verdict:
    """Every configuration constraint holds up to ``ln(1 + eps/2)``.

    Checks ``sum_{j in S} alpha_j + beta_i >= eta_i ln v_i(S) + sum zeta_j ln w_j(i)
    - ln(1 + eps/2)`` for all ``i`` and ``|S| <= c_i`` by enumeration.
    """
    inst = winst.instance
    slack = math.log1p(eps / 2)
    for i, v in enumerate(inst.firm_valuations):
        eta = winst.firm_weights[i]
        for r in range(inst.capacities[i] + 1):
            for S in itertools.combinations(range(inst.m), r):
                coef = 0.0
                if eta:
                    val = v.value(S)
                    if val == 0:
                        continue
                    coef = float(eta) * ln(val)
                dead = False
                for j in S:
                    z = winst.worker_weights[j]
                    if not z:
                        continue
                    w = inst.worker_values[j][i]
                    if w == 0:
                        dead = True
                        break
                    coef += float(z) * ln(w)
                if dead:
                    continue
                lhs = math.fsum(dual.alpha[j] for j in S) + dual.beta[i]
                gap = coef - lhs
                if gap > slack + tol:
                    return Verdict(False, (i, S, gap))
    if any(a < -tol for a in dual.alpha):
        return Verdict(False, ("negative alpha", [j for j, a in enumerate(dual.alpha) if a < -tol]))
    return Verdict(True)

