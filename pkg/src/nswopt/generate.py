"""Seeded random instances and small named fixtures.

All numbers are rationals with denominators at most ``MAX_DEN``.  The same
``(family, parameters, seed)`` always yields the same instance.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import InstanceError
from .model import (
    Additive,
    CappedAdditive,
    ExplicitTable,
    OneSidedInstance,
    TwoSidedInstance,
    WeightedCoverage,
    WeightedInstance,
)

MAX_DEN = 1000
KINDS = ("additive", "capped", "coverage", "xos")
SUBMODULAR_KINDS = ("additive", "capped", "coverage")


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_rational(rng, hi: int = 10, max_den: int = 8, zero_prob: float = 0.0) -> Fraction:
    """Uniform-ish rational in ``(0, hi]``, or zero with probability ``zero_prob``."""
    if zero_prob and rng.random() < zero_prob:
        return Fraction(0)
    den = int(rng.integers(1, max_den + 1))
    return Fraction(int(rng.integers(1, hi * den + 1)), den)


def random_valuation(rng, m: int, kind: str, zero_prob: float = 0.1):
    if kind == "additive":
        return Additive(tuple(random_rational(rng, zero_prob=zero_prob) for _ in range(m)))
    if kind == "capped":
        vals = tuple(random_rational(rng, zero_prob=zero_prob) for _ in range(m))
        return CappedAdditive(vals, int(rng.integers(1, max(m, 1) + 1)))
    if kind == "coverage":
        u = m + 2
        weights = tuple(random_rational(rng) for _ in range(u))
        sets = []
        for _ in range(m):
            if rng.random() < zero_prob:
                sets.append(())
                continue
            size = int(rng.integers(1, 4))
            sets.append(tuple(sorted(int(e) for e in rng.choice(u, size=size, replace=False))))
        return WeightedCoverage(u, weights, tuple(sets))
    if kind == "xos":
        clauses = [
            [random_rational(rng, zero_prob=zero_prob) for _ in range(m)] for _ in range(3)
        ]
        return ExplicitTable.from_function(
            m, lambda S: max(sum((c[j] for j in S), Fraction(0)) for c in clauses)
        )
    raise InstanceError(f"unknown valuation kind {kind!r}; expected one of {KINDS}")


def _capacities(rng, n, lo, hi):
    return [int(rng.integers(lo, hi + 1)) for _ in range(n)]


def one_sided(n: int, m: int, seed=0, kind: str = "additive", cap_range=(1, 3),
              zero_prob: float = 0.1) -> OneSidedInstance:
    rng = _rng(seed)
    caps = _capacities(rng, n, *cap_range)
    vals = tuple(random_valuation(rng, m, kind, zero_prob) for _ in range(n))
    return OneSidedInstance(vals, tuple(caps), m)


def two_sided(n: int, m: int, seed=0, kind: str = "additive", cap_range=(1, 3),
              zero_prob: float = 0.1) -> TwoSidedInstance:
    """Random two-sided instance; capacities are raised until they cover ``m``."""
    rng = _rng(seed)
    caps = _capacities(rng, n, *cap_range)
    while sum(caps) < m:
        caps[int(rng.integers(n))] += 1
    vals = tuple(random_valuation(rng, m, kind, zero_prob) for _ in range(n))
    workers = tuple(
        tuple(random_rational(rng, zero_prob=zero_prob) for _ in range(n)) for _ in range(m)
    )
    return TwoSidedInstance(vals, workers, tuple(caps))


def random_weights(rng, k: int, zero_prob: float = 0.0):
    raw = [0 if zero_prob and rng.random() < zero_prob else int(rng.integers(1, 10)) for _ in range(k)]
    if not any(raw):
        raw[int(rng.integers(k))] = 1
    total = sum(raw)
    return [Fraction(r, total) for r in raw]


def weighted(n: int, m: int, seed=0, cap_range=(1, 3), zero_prob: float = 0.1,
             zero_weight_prob: float = 0.0) -> WeightedInstance:
    """Additive firms with random weights over all ``n + m`` parties."""
    rng = _rng(seed)
    inst = two_sided(n, m, rng, "additive", cap_range, zero_prob)
    w = random_weights(rng, n + m, zero_weight_prob)
    return WeightedInstance(inst, tuple(w[:n]), tuple(w[n:]))


# --------------------------------------------------------------------------
# presets


def footnote(n: int, k: int, c, capacity=None) -> OneSidedInstance:
    """``n`` agents and ``k n`` items, every item worth ``c`` to everyone.

    Without a capacity (``capacity=None``) every agent may take all items.
    """
    m = k * n
    cap = m if capacity is None else capacity
    vals = tuple(Additive((Fraction(c),) * m) for _ in range(n))
    return OneSidedInstance(vals, (cap,) * n, m)


def example1_valuation() -> ExplicitTable:
    """Submodular table on four items whose capacity-2 restriction is not submodular."""

    def v(S):
        S = frozenset(S)
        if not S:
            return 0
        if S == {1, 3}:
            return 4
        if S == {0, 2, 3}:
            return 3
        return min(4, len(S) + 1)

    return ExplicitTable.from_function(4, v)


def example1(capacity: int = 2) -> OneSidedInstance:
    return OneSidedInstance((example1_valuation(),), (capacity,), 4)


FAMILIES = ("one-sided", "two-sided", "weighted", "footnote", "example1")


def generate(family: str, seed: int = 0, **params):
    """Dispatch by family name; ``params`` are the family's keyword arguments."""
    if family == "one-sided":
        return one_sided(seed=seed, **params)
    if family == "two-sided":
        return two_sided(seed=seed, **params)
    if family == "weighted":
        return weighted(seed=seed, **params)
    if family == "footnote":
        return footnote(**params)
    if family == "example1":
        return example1(**params)
    raise InstanceError(f"unknown family {family!r}; expected one of {FAMILIES}")
