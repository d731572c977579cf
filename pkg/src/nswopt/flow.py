"""Min-cost flow with lower bounds by successive shortest paths.

Lower bounds are removed by the usual excess/deficit transformation; the
resulting supplies are routed from a super source to a super sink along
shortest paths under reduced costs (Dijkstra), with initial potentials from
one Bellman-Ford pass so negative edge costs are allowed as long as the
network has no negative cycle.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import List, Optional

from .errors import InfeasibleError

COST_TOL = 1e-9


@dataclass(frozen=True)
class Edge:
    tail: int
    head: int
    lower: int
    upper: int
    cost: float
    label: tuple = ()


@dataclass
class FlowNetwork:
    """Directed network that must carry exactly ``value`` units from source to sink."""

    num_nodes: int
    source: int
    sink: int
    value: int
    edges: List[Edge] = field(default_factory=list)
    names: List[str] = field(default_factory=list)

    def add_edge(self, tail, head, lower, upper, cost, label=()) -> int:
        if not 0 <= lower <= upper:
            raise ValueError(f"bad bounds {lower}..{upper}")
        self.edges.append(Edge(tail, head, lower, upper, float(cost), label))
        return len(self.edges) - 1


@dataclass
class IntegralFlow:
    flow: List[int]
    cost: float
    augmentations: int
    potentials: List[float]


class _Residual:
    def __init__(self, n):
        self.n = n
        self.head, self.cap, self.cost, self.adj = [], [], [], [[] for _ in range(n)]

    def add(self, u, v, cap, cost):
        idx = len(self.head)
        self.head += [v, u]
        self.cap += [cap, 0]
        self.cost += [cost, -cost]
        self.adj[u].append(idx)
        self.adj[v].append(idx + 1)
        return idx


def flow_cost(net: FlowNetwork, flow) -> float:
    return math.fsum(e.cost * f for e, f in zip(net.edges, flow) if f)


def is_feasible_flow(net: FlowNetwork, flow) -> bool:
    balance = [0] * net.num_nodes
    for e, f in zip(net.edges, flow):
        if not e.lower <= f <= e.upper:
            return False
        balance[e.tail] -= f
        balance[e.head] += f
    for v, b in enumerate(balance):
        want = -net.value if v == net.source else net.value if v == net.sink else 0
        if b != want:
            return False
    return True


def min_cost_flow(net: FlowNetwork) -> IntegralFlow:
    """Cheapest integral flow of ``net.value`` units respecting all bounds.

    Raises :class:`InfeasibleError` when no such flow exists.
    """
    n = net.num_nodes
    supply = [0] * n
    supply[net.source] += net.value
    supply[net.sink] -= net.value
    res = _Residual(n + 2)
    S, T = n, n + 1
    arc_of = []
    for e in net.edges:
        supply[e.tail] -= e.lower
        supply[e.head] += e.lower
        arc_of.append(res.add(e.tail, e.head, e.upper - e.lower, e.cost))
    need = 0
    for v, b in enumerate(supply):
        if b > 0:
            res.add(S, v, b, 0.0)
            need += b
        elif b < 0:
            res.add(v, T, -b, 0.0)

    pot = _bellman_ford_potentials(res)
    sent = 0
    augmentations = 0
    while sent < need:
        dist, prev = _dijkstra(res, S, pot)
        if dist[T] == math.inf:
            raise InfeasibleError("flow network has no feasible flow")
        finite = [d for d in dist if d < math.inf]
        top = max(finite)
        for v in range(res.n):
            pot[v] += dist[v] if dist[v] < math.inf else top
        # bottleneck along the path
        push = need - sent
        v = T
        while v != S:
            a = prev[v]
            push = min(push, res.cap[a])
            v = res.head[a ^ 1]
        v = T
        while v != S:
            a = prev[v]
            res.cap[a] -= push
            res.cap[a ^ 1] += push
            v = res.head[a ^ 1]
        sent += push
        augmentations += 1

    flow = [e.lower + res.cap[a ^ 1] for e, a in zip(net.edges, arc_of)]
    return IntegralFlow(flow, flow_cost(net, flow), augmentations, pot[:n])


def _bellman_ford_potentials(res: _Residual) -> List[float]:
    # virtual root joined to every node with cost 0
    dist = [0.0] * res.n
    for _ in range(res.n):
        changed = False
        for u in range(res.n):
            du = dist[u]
            for a in res.adj[u]:
                if res.cap[a] > 0:
                    v = res.head[a]
                    nd = du + res.cost[a]
                    if nd < dist[v] - COST_TOL:
                        dist[v] = nd
                        changed = True
        if not changed:
            return dist
    raise ValueError("network contains a negative-cost cycle")


def _dijkstra(res: _Residual, s: int, pot):
    dist = [math.inf] * res.n
    prev: List[Optional[int]] = [None] * res.n
    dist[s] = 0.0
    heap = [(0.0, s)]
    done = [False] * res.n
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for a in res.adj[u]:
            if res.cap[a] <= 0:
                continue
            v = res.head[a]
            if done[v]:
                continue
            rc = res.cost[a] + pot[u] - pot[v]
            nd = d + max(rc, 0.0)
            if nd < dist[v] - COST_TOL:
                dist[v] = nd
                prev[v] = a
                heapq.heappush(heap, (nd, v))
    return dist, prev


def reduced_cost_certificate(net: FlowNetwork, flow: IntegralFlow, tol: float = 1e-7) -> bool:
    """True when the final potentials price every residual arc at ``>= -tol``.

    That rules out negative residual cycles, so ``flow`` is optimal.
    """
    p = flow.potentials
    for e, f in zip(net.edges, flow.flow):
        rc = e.cost + p[e.tail] - p[e.head]
        if f < e.upper and rc < -tol:
            return False
        if f > e.lower and -rc < -tol:
            return False
    return True
