"""Instances, valuation oracles, allocations/matchings and Nash welfare.

Valuations are stored and queried as exact :class:`fractions.Fraction`
values.  Welfare objectives are evaluated in the log domain with doubles;
a product containing a zero factor evaluates to an exact ``0.0``.
"""

from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .errors import InfeasibleError, InstanceError

#: relative tolerance used for every floating comparison of log-products
REL_TOL = 1e-9
#: exhaustive tables are limited to this many items
MAX_TABLE_ITEMS = 16


def as_fraction(x) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to a Fraction.

    Floats are rejected: every stored value must be an exact rational.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise InstanceError(f"not a rational: {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InstanceError(f"not a rational: {x!r}") from exc
    raise InstanceError(f"not a rational: {x!r}")


def ln(q) -> float:
    """Natural log of a nonnegative rational; ``-inf`` for zero.

    Numerator and denominator are logged separately so huge operands do
    not overflow a float conversion.
    """
    q = Fraction(q)
    if q < 0:
        raise ValueError("log of a negative value")
    if q == 0:
        return -math.inf
    return math.log(q.numerator) - math.log(q.denominator)


class QueryCounter:
    """Thread-safe counter of value queries."""

    def __init__(self):
        self._n = 0
        self._lock = threading.Lock()

    def tick(self):
        with self._lock:
            self._n += 1

    @property
    def count(self) -> int:
        return self._n

    def reset(self):
        with self._lock:
            self._n = 0


def _mask(items: Iterable[int]) -> int:
    mask = 0
    for j in items:
        mask |= 1 << j
    return mask


class Valuation:
    """Monotone, normalized set function over items ``0..m-1``.

    Subclasses implement ``_evaluate(frozenset)``; callers go through
    :meth:`value`, which range-checks and counts the query.
    """

    kind = "abstract"
    _counter: QueryCounter

    @property
    def m(self) -> int:
        raise NotImplementedError

    @property
    def queries(self) -> int:
        return self._counter.count

    def reset_queries(self):
        self._counter.reset()

    def value(self, items: Iterable[int] = ()) -> Fraction:
        S = frozenset(items)
        for j in S:
            if not isinstance(j, int) or not 0 <= j < self.m:
                raise InstanceError(f"item {j!r} outside universe of size {self.m}")
        self._counter.tick()
        if not S:
            return Fraction(0)
        return self._evaluate(S)

    __call__ = value

    def _evaluate(self, S: frozenset) -> Fraction:
        raise NotImplementedError


@dataclass(frozen=True, eq=True)
class Additive(Valuation):
    values: tuple
    _counter: QueryCounter = field(default_factory=QueryCounter, compare=False, repr=False)
    kind = "additive"

    def __post_init__(self):
        vals = tuple(as_fraction(v) for v in self.values)
        if any(v < 0 for v in vals):
            raise InstanceError("negative item value")
        object.__setattr__(self, "values", vals)

    @property
    def m(self):
        return len(self.values)

    def _evaluate(self, S):
        return sum((self.values[j] for j in S), Fraction(0))


@dataclass(frozen=True, eq=True)
class CappedAdditive(Valuation):
    """Sum of the ``cap`` largest item values in the bundle."""

    values: tuple
    cap: int
    _counter: QueryCounter = field(default_factory=QueryCounter, compare=False, repr=False)
    kind = "capped"

    def __post_init__(self):
        vals = tuple(as_fraction(v) for v in self.values)
        if any(v < 0 for v in vals):
            raise InstanceError("negative item value")
        if not isinstance(self.cap, int) or self.cap < 1:
            raise InstanceError(f"cap must be a positive integer, got {self.cap!r}")
        object.__setattr__(self, "values", vals)

    @property
    def m(self):
        return len(self.values)

    def _evaluate(self, S):
        top = sorted((self.values[j] for j in S), reverse=True)[: self.cap]
        return sum(top, Fraction(0))


@dataclass(frozen=True, eq=True)
class WeightedCoverage(Valuation):
    """Weight of the union of the element sets covered by the bundle."""

    universe: int
    weights: tuple
    sets: tuple
    _counter: QueryCounter = field(default_factory=QueryCounter, compare=False, repr=False)
    kind = "coverage"

    def __post_init__(self):
        w = tuple(as_fraction(x) for x in self.weights)
        if len(w) != self.universe:
            raise InstanceError("coverage weights must have one entry per element")
        if any(x < 0 for x in w):
            raise InstanceError("negative element weight")
        sets = tuple(frozenset(s) for s in self.sets)
        for s in sets:
            if any(not 0 <= e < self.universe for e in s):
                raise InstanceError("coverage element out of range")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "sets", sets)

    @property
    def m(self):
        return len(self.sets)

    def _evaluate(self, S):
        covered = frozenset().union(*(self.sets[j] for j in S))
        return sum((self.weights[e] for e in covered), Fraction(0))


@dataclass(frozen=True, eq=True)
class ExplicitTable(Valuation):
    """One value per subset, indexed by bitmask (bit ``j`` = item ``j``)."""

    values: tuple
    _counter: QueryCounter = field(default_factory=QueryCounter, compare=False, repr=False)
    kind = "table"

    def __post_init__(self):
        vals = tuple(as_fraction(v) for v in self.values)
        size = len(vals)
        m = size.bit_length() - 1
        if size < 1 or 1 << m != size:
            raise InstanceError("table length must be a power of two")
        if m > MAX_TABLE_ITEMS:
            raise InstanceError(f"explicit tables support at most {MAX_TABLE_ITEMS} items")
        if vals[0] != 0:
            raise InstanceError("table valuation is not normalized: v(empty) != 0")
        if any(v < 0 for v in vals):
            raise InstanceError("negative table value")
        for mask in range(size):
            for j in range(m):
                if not mask >> j & 1 and vals[mask | 1 << j] < vals[mask]:
                    raise InstanceError(f"table valuation is not monotone at subset mask {mask}")
        object.__setattr__(self, "values", vals)

    @property
    def m(self):
        return len(self.values).bit_length() - 1

    def _evaluate(self, S):
        return self.values[_mask(S)]

    @classmethod
    def from_function(cls, m: int, fn) -> "ExplicitTable":
        """Tabulate ``fn(frozenset) -> rational`` over all subsets of ``m`` items."""
        if m > MAX_TABLE_ITEMS:
            raise InstanceError(f"explicit tables support at most {MAX_TABLE_ITEMS} items")
        vals = []
        for mask in range(1 << m):
            vals.append(as_fraction(fn(frozenset(j for j in range(m) if mask >> j & 1))))
        return cls(tuple(vals))


@dataclass(frozen=True, eq=True)
class WithDummies(Valuation):
    """``base`` extended to ``size`` items; items ``>= base.m`` are worthless."""

    base: Valuation
    size: int
    kind = "dummies"

    def __post_init__(self):
        if self.size < self.base.m:
            raise InstanceError("padded universe smaller than the base universe")

    @property
    def _counter(self):
        return self.base._counter

    @property
    def m(self):
        return self.size

    def _evaluate(self, S):
        return self.base.value(j for j in S if j < self.base.m)

    def value(self, items=()):
        S = frozenset(items)
        for j in S:
            if not isinstance(j, int) or not 0 <= j < self.size:
                raise InstanceError(f"item {j!r} outside universe of size {self.size}")
        # the base oracle counts the query
        return self.base.value(j for j in S if j < self.base.m)


def value_query(v: Valuation, items: Iterable[int]) -> Fraction:
    return v.value(items)


def capped_transform(v: Additive, cap: int) -> CappedAdditive:
    """Turn an additive valuation into "best ``cap`` items" form."""
    if not isinstance(v, Additive):
        raise InstanceError("capped_transform needs an additive valuation")
    if not isinstance(cap, int) or cap < 1:
        raise InstanceError("cap must be a positive integer")
    return CappedAdditive(v.values, cap)


def best_subset_value(v: Valuation, items: Iterable[int], cap: int) -> Fraction:
    """``max v(S')`` over ``S' ⊆ items`` with ``|S'| <= cap``, by enumeration."""
    S = sorted(frozenset(items))
    if cap < 0:
        raise InstanceError("cap must be nonnegative")
    best = Fraction(0)
    for r in range(1, min(cap, len(S)) + 1):
        for sub in itertools.combinations(S, r):
            best = max(best, v.value(sub))
    return best


def constrained_table(v: Valuation, cap: int) -> ExplicitTable:
    """Tabulate ``S -> best_subset_value(v, S, cap)`` for every subset."""
    return ExplicitTable.from_function(v.m, lambda S: best_subset_value(v, S, cap))


def _table(v: Valuation) -> tuple:
    if not isinstance(v, ExplicitTable):
        raise TypeError(
            f"exhaustive class checks need an explicit table, got {v.kind!r} "
            "(additive, capped and coverage valuations are submodular by construction)"
        )
    return v.values


def is_submodular(v: ExplicitTable) -> bool:
    """Diminishing marginals, checked over all ``S ⊆ T`` and ``j ∉ T``."""
    vals = _table(v)
    m = v.m
    for T in range(1 << m):
        # iterate over all submasks S of T
        S = T
        while True:
            for j in range(m):
                bit = 1 << j
                if T & bit:
                    continue
                if vals[S | bit] - vals[S] < vals[T | bit] - vals[T]:
                    return False
            if S == 0:
                break
            S = (S - 1) & T
    return True


def is_subadditive(v: ExplicitTable) -> bool:
    vals = _table(v)
    size = len(vals)
    return all(vals[S | T] <= vals[S] + vals[T] for S in range(size) for T in range(S, size))


# --------------------------------------------------------------------------
# instances


def _check_capacities(capacities) -> tuple:
    caps = tuple(capacities)
    for c in caps:
        if isinstance(c, bool) or not isinstance(c, int) or c < 1:
            raise InstanceError(f"capacities must be positive integers, got {c!r}")
    return caps


@dataclass(frozen=True)
class OneSidedInstance:
    valuations: tuple
    capacities: tuple
    m: int

    def __post_init__(self):
        vals = tuple(self.valuations)
        caps = _check_capacities(self.capacities)
        if not vals:
            raise InstanceError("need at least one agent")
        if len(caps) != len(vals):
            raise InstanceError("one capacity per agent required")
        for v in vals:
            if v.m != self.m:
                raise InstanceError(f"valuation universe {v.m} != item count {self.m}")
        object.__setattr__(self, "valuations", vals)
        object.__setattr__(self, "capacities", caps)

    @property
    def n(self) -> int:
        return len(self.valuations)

    @property
    def queries(self) -> int:
        return sum(v.queries for v in self.valuations)


@dataclass(frozen=True)
class TwoSidedInstance:
    firm_valuations: tuple
    worker_values: tuple  # worker_values[j][i] = w_j(i)
    capacities: tuple

    def __post_init__(self):
        vals = tuple(self.firm_valuations)
        caps = _check_capacities(self.capacities)
        if not vals:
            raise InstanceError("need at least one firm")
        if len(caps) != len(vals):
            raise InstanceError("one capacity per firm required")
        rows = tuple(tuple(as_fraction(x) for x in row) for row in self.worker_values)
        for row in rows:
            if len(row) != len(vals):
                raise InstanceError("each worker needs one value per firm")
            if any(x < 0 for x in row):
                raise InstanceError("negative worker value")
        for v in vals:
            if v.m != len(rows):
                raise InstanceError(f"firm valuation universe {v.m} != worker count {len(rows)}")
        if sum(caps) < len(rows):
            raise InfeasibleError(
                f"inadequate capacities: sum {sum(caps)} < {len(rows)} workers"
            )
        object.__setattr__(self, "firm_valuations", vals)
        object.__setattr__(self, "capacities", caps)
        object.__setattr__(self, "worker_values", rows)

    @property
    def n(self) -> int:
        return len(self.firm_valuations)

    @property
    def m(self) -> int:
        return len(self.worker_values)

    @property
    def queries(self) -> int:
        return sum(v.queries for v in self.firm_valuations)

    def as_one_sided(self) -> OneSidedInstance:
        """The firms' side alone, as a one-sided instance."""
        return OneSidedInstance(self.firm_valuations, self.capacities, self.m)


@dataclass(frozen=True)
class WeightedInstance:
    """A two-sided instance with firm weights and worker weights summing to one."""

    instance: TwoSidedInstance
    firm_weights: tuple
    worker_weights: tuple

    def __post_init__(self):
        eta = tuple(as_fraction(x) for x in self.firm_weights)
        zeta = tuple(as_fraction(x) for x in self.worker_weights)
        _check_weights(self.instance, eta, zeta)
        object.__setattr__(self, "firm_weights", eta)
        object.__setattr__(self, "worker_weights", zeta)

    @property
    def n(self):
        return self.instance.n

    @property
    def m(self):
        return self.instance.m

    @classmethod
    def uniform(cls, inst: TwoSidedInstance) -> "WeightedInstance":
        w = Fraction(1, inst.n + inst.m)
        return cls(inst, (w,) * inst.n, (w,) * inst.m)


def _check_weights(inst, eta, zeta):
    if len(eta) != inst.n or len(zeta) != inst.m:
        raise InstanceError("need one weight per firm and per worker")
    if any(x < 0 for x in itertools.chain(eta, zeta)):
        raise InstanceError("weights must be nonnegative")
    total = float(sum(eta)) + float(sum(zeta))
    if abs(total - 1.0) > 1e-9:
        raise InstanceError(f"weights must sum to 1, got {total}")


# --------------------------------------------------------------------------
# solutions


@dataclass(frozen=True)
class Allocation:
    bundles: tuple

    def __post_init__(self):
        bundles = tuple(frozenset(b) for b in self.bundles)
        seen = set()
        for b in bundles:
            if seen & b:
                raise InstanceError("bundles are not pairwise disjoint")
            seen |= b
        object.__setattr__(self, "bundles", bundles)

    @property
    def n(self):
        return len(self.bundles)

    def is_feasible(self, capacities) -> bool:
        return len(capacities) == self.n and all(
            len(b) <= c for b, c in zip(self.bundles, capacities)
        )

    def as_lists(self):
        return [sorted(b) for b in self.bundles]


@dataclass(frozen=True)
class Matching:
    """Many-to-one matching; ``assignment[j]`` is worker j's firm or ``None``."""

    assignment: tuple
    n: int

    def __post_init__(self):
        a = tuple(self.assignment)
        for i in a:
            if i is not None and not 0 <= i < self.n:
                raise InstanceError(f"firm index {i!r} out of range")
        object.__setattr__(self, "assignment", a)

    @property
    def m(self):
        return len(self.assignment)

    @property
    def bundles(self) -> tuple:
        out = [set() for _ in range(self.n)]
        for j, i in enumerate(self.assignment):
            if i is not None:
                out[i].add(j)
        return tuple(frozenset(b) for b in out)

    @property
    def loads(self) -> tuple:
        return tuple(len(b) for b in self.bundles)

    def is_feasible(self, capacities) -> bool:
        return all(l <= c for l, c in zip(self.loads, capacities))

    @classmethod
    def from_bundles(cls, bundles, m: int) -> "Matching":
        a = [None] * m
        for i, b in enumerate(bundles):
            for j in b:
                if a[j] is not None:
                    raise InstanceError(f"worker {j} assigned twice")
                a[j] = i
        return cls(tuple(a), len(bundles))


# --------------------------------------------------------------------------
# welfare


def _geo_mean(logs: Sequence[float], weights: Optional[Sequence[float]] = None) -> float:
    if weights is None:
        if any(x == -math.inf for x in logs):
            return 0.0
        return math.exp(math.fsum(logs) / len(logs))
    parts = []
    for x, w in zip(logs, weights):
        if w == 0:
            continue  # 0^0 = 1
        if x == -math.inf:
            return 0.0
        parts.append(w * x)
    return math.exp(math.fsum(parts))


def one_sided_utilities(inst: OneSidedInstance, A: Allocation) -> list:
    if A.n != inst.n:
        raise InstanceError("allocation has the wrong number of bundles")
    return [v.value(b) for v, b in zip(inst.valuations, A.bundles)]


def two_sided_utilities(inst: TwoSidedInstance, mu: Matching):
    """``(firm utilities, worker utilities)``; an unmatched worker gets 0."""
    if mu.n != inst.n or mu.m != inst.m:
        raise InstanceError("matching does not fit the instance")
    firms = [v.value(b) for v, b in zip(inst.firm_valuations, mu.bundles)]
    workers = [
        Fraction(0) if i is None else inst.worker_values[j][i]
        for j, i in enumerate(mu.assignment)
    ]
    return firms, workers


def ln_nsw_one_sided(inst: OneSidedInstance, A: Allocation) -> float:
    logs = [ln(u) for u in one_sided_utilities(inst, A)]
    if any(x == -math.inf for x in logs):
        return -math.inf
    return math.fsum(logs) / inst.n


def nsw_one_sided(inst: OneSidedInstance, A: Allocation) -> float:
    return _geo_mean([ln(u) for u in one_sided_utilities(inst, A)])


def ln_nsw_two_sided(inst: TwoSidedInstance, mu: Matching) -> float:
    firms, workers = two_sided_utilities(inst, mu)
    logs = [ln(u) for u in firms + workers]
    if any(x == -math.inf for x in logs):
        return -math.inf
    return math.fsum(logs) / (inst.n + inst.m)


def nsw_two_sided(inst: TwoSidedInstance, mu: Matching) -> float:
    firms, workers = two_sided_utilities(inst, mu)
    return _geo_mean([ln(u) for u in firms + workers])


def ln_nsw_weighted(inst: TwoSidedInstance, mu: Matching, firm_weights, worker_weights) -> float:
    eta = [as_fraction(x) for x in firm_weights]
    zeta = [as_fraction(x) for x in worker_weights]
    _check_weights(inst, eta, zeta)
    firms, workers = two_sided_utilities(inst, mu)
    parts = []
    for u, w in zip(firms + workers, eta + zeta):
        if w == 0:
            continue
        if u == 0:
            return -math.inf
        parts.append(float(w) * ln(u))
    return math.fsum(parts)


def nsw_weighted(inst: TwoSidedInstance, mu: Matching, firm_weights, worker_weights) -> float:
    """Weighted geometric mean with the ``0^0 = 1`` convention."""
    x = ln_nsw_weighted(inst, mu, firm_weights, worker_weights)
    return 0.0 if x == -math.inf else math.exp(x)


def weighted_nsw(winst: WeightedInstance, mu: Matching) -> float:
    return nsw_weighted(winst.instance, mu, winst.firm_weights, winst.worker_weights)


def ln_weighted_nsw(winst: WeightedInstance, mu: Matching) -> float:
    return ln_nsw_weighted(winst.instance, mu, winst.firm_weights, winst.worker_weights)


def ef1_factor(inst: OneSidedInstance, A: Allocation) -> float:
    """Largest ``gamma`` for which ``A`` is gamma-EF1 in the capacitated sense.

    For every ordered pair ``(i, k)`` and every nonempty ``S ⊆ A_k`` with
    ``|S| <= c_i`` some ``g ∈ S`` must satisfy
    ``v_i(A_i) >= gamma * v_i(S - g)``.  Returns ``inf`` when no pair
    imposes a constraint.
    """
    gamma = math.inf
    for i, vi in enumerate(inst.valuations):
        own = vi.value(A.bundles[i])
        for k, bundle in enumerate(A.bundles):
            if k == i:
                continue
            items = sorted(bundle)
            for r in range(1, min(inst.capacities[i], len(items)) + 1):
                for S in itertools.combinations(items, r):
                    worst = min(vi.value(set(S) - {g}) for g in S)
                    if worst == 0:
                        continue
                    gamma = min(gamma, float(own / worst))
    return gamma
