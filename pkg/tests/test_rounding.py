import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nswopt.rounding import dependent_rounding, load_ceilings


def test_integral_input_is_fixed():
    x = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    rng = np.random.default_rng(0)
    for _ in range(20):
        assert dependent_rounding(x, rng).assignment == (0, 1, 0)


def test_even_split_frequency():
    x = np.array([[0.5], [0.5]])
    rng = np.random.default_rng(7)
    draws = 10_000
    hits = sum(dependent_rounding(x, rng).assignment[0] == 0 for _ in range(draws))
    sigma = math.sqrt(draws * 0.25)
    assert abs(hits - draws / 2) <= 3 * sigma


def test_load_ceiling_one_and_a_half():
    x = np.array([[0.5, 0.5, 0.5], [0.5, 0.5, 0.5]])
    rng = np.random.default_rng(3)
    for _ in range(2000):
        loads = dependent_rounding(x, rng).loads
        assert all(load <= 2 for load in loads)


def test_partial_worker_can_stay_unmatched():
    x = np.array([[0.3]])
    rng = np.random.default_rng(1)
    seen = {dependent_rounding(x, rng).assignment[0] for _ in range(200)}
    assert seen == {0, None}


def test_rejects_overfull_worker():
    with pytest.raises(ValueError):
        dependent_rounding(np.array([[0.7], [0.7]]))


def test_rejects_capacity_violation():
    with pytest.raises(ValueError):
        dependent_rounding(np.array([[0.9, 0.9]]), capacities=[1])


@st.composite
def fractional(draw):
    n = draw(st.integers(1, 4))
    m = draw(st.integers(1, 6))
    seed = draw(st.integers(0, 10**6))
    rng = np.random.default_rng(seed)
    x = rng.random((n, m)) * (rng.random((n, m)) < 0.7)
    x /= np.maximum(1.0, x.sum(axis=0) * rng.uniform(1.0, 1.5, m))
    return x


@settings(max_examples=100, deadline=None)
@given(fractional(), st.integers(0, 10**6))
def test_every_draw_respects_ceilings(x, seed):
    mu = dependent_rounding(x, np.random.default_rng(seed))
    assert all(load <= c for load, c in zip(mu.loads, load_ceilings(x)))
    for j, i in enumerate(mu.assignment):
        assert i is None or x[i, j] > 0
