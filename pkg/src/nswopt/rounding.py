"""Marginal-preserving dependent rounding of a fractional firm/worker assignment.

Repeatedly picks a cycle or a maximal path in the graph of fractional edges,
splits it into two alternating edge classes and shifts mass between them with
probabilities that keep every ``E[x_ij]`` fixed.  Each step makes at least one
edge integral.  Every vertex ends with degree ``floor`` or ``ceil`` of its
fractional degree, so firm loads never exceed ``ceil(sum_j x_ij)`` and every
worker is matched at most once.
"""

from __future__ import annotations

import math

import numpy as np

from .model import Matching

TOL = 1e-9


def _fractional_adjacency(x, n, m):
    adj = [[] for _ in range(n + m)]
    for i, j in zip(*np.nonzero((x > TOL) & (x < 1 - TOL))):
        i, j = int(i), int(j)
        adj[i].append(n + j)
        adj[n + j].append(i)
    return adj


def _walk(adj, start):
    """Follow fractional edges from ``start`` until a dead end or a repeat.

    Returns the node sequence of a maximal path, or of a closed cycle whose
    first and last node coincide.
    """
    path = [start]
    pos = {start: 0}
    prev = None
    cur = start
    while True:
        nxt = next((v for v in adj[cur] if v != prev), None)
        if nxt is None:
            return path
        if nxt in pos:
            return path[pos[nxt]:] + [nxt]
        pos[nxt] = len(path)
        path.append(nxt)
        prev, cur = cur, nxt


def rounding_step(x: np.ndarray, rng, n: int, m: int) -> bool:
    """One cycle/path shift in place; False once ``x`` is integral."""
    adj = _fractional_adjacency(x, n, m)
    deg1 = [v for v in range(n + m) if len(adj[v]) == 1]
    if deg1:
        start = deg1[0]
    else:
        start = next((v for v in range(n + m) if adj[v]), None)
        if start is None:
            return False
    nodes = _walk(adj, start)
    edges = []
    for a, b in zip(nodes, nodes[1:]):
        i, j = (a, b - n) if a < n else (b, a - n)
        edges.append((i, j))
    up = edges[0::2]
    down = edges[1::2]
    alpha = min([1 - x[e] for e in up] + [x[e] for e in down])
    beta = min([x[e] for e in up] + [1 - x[e] for e in down])
    if rng.random() < beta / (alpha + beta):
        shift = alpha
    else:
        shift = -beta
    for e in up:
        x[e] += shift
    for e in down:
        x[e] -= shift
    np.clip(x, 0.0, 1.0, out=x)
    x[x < TOL] = 0.0
    x[x > 1 - TOL] = 1.0
    return True


def dependent_rounding(x, rng=None, capacities=None) -> Matching:
    """Random matching with ``P[j -> i] = x[i, j]`` and loads ``<= ceil(sum_j x_ij)``.

    ``x`` is an ``n x m`` array of marginals with column sums at most one.
    ``capacities`` is only checked, never used to steer the rounding.
    """
    rng = np.random.default_rng() if rng is None else rng
    x = np.array(x, dtype=float, copy=True)
    n, m = x.shape
    if capacities is not None:
        for i, c in enumerate(capacities):
            if x[i].sum() > c + 1e-7:
                raise ValueError(f"firm {i} has fractional load above its capacity")
    if (x.sum(axis=0) > 1 + 1e-7).any():
        raise ValueError("a worker is assigned more than once in total")
    x[x < TOL] = 0.0
    x[x > 1 - TOL] = 1.0
    for _ in range(n * m + 1):
        if not rounding_step(x, rng, n, m):
            break
    assignment = []
    for j in range(m):
        col = np.nonzero(x[:, j] > 0.5)[0]
        assignment.append(int(col[0]) if len(col) else None)
    return Matching(tuple(assignment), n)


def load_ceilings(x) -> list:
    """``ceil(sum_j x_ij)`` per firm, forgiving float noise in the sums."""
    return [math.ceil(s - 1e-7) for s in np.asarray(x).sum(axis=1)]
