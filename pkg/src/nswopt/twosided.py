"""Two-sided capacitated Nash welfare through a single min-cost flow.

Every firm has a *main* copy, which takes exactly one worker and is charged
``-ln(v_i(j) w_j(i))``, and a *secondary* copy, which takes up to ``c_i - 1``
more workers at ``-ln w_j(i)``.  A min-cost flow therefore maximizes the
surrogate ``prod_i v_i(main_i) * prod_j w_j(firm_j)``, which is within
``x^(1/(1+x)) <= 1.3211`` (``x = m/n``) of the optimal two-sided NSW for
subadditive firm valuations.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction

from .errors import InfeasibleError, InstanceError, ResourceError
from .flow import FlowNetwork, IntegralFlow, min_cost_flow, reduced_cost_certificate
from .model import Matching, TwoSidedInstance, ln, ln_nsw_two_sided, nsw_two_sided

PTAS_MAX_STATES = 10**8
#: the surrogate bound x^(1/(1+x)) never exceeds this
WORST_CASE_FACTOR = 1.3211


def guarantee_factor(m: int, n: int) -> float:
    """``x^(1/(1+x))`` with ``x = m / n``."""
    if m == 0:
        return 1.0
    x = m / n
    return x ** (1 / (1 + x))


@dataclass(frozen=True)
class NetworkLayout:
    n: int
    m: int

    source = 0
    sink = 1

    def worker(self, j):
        return 2 + j

    def main(self, i):
        return 2 + self.m + i

    def secondary(self, i):
        return 2 + self.m + self.n + i


def build_network(inst: TwoSidedInstance) -> FlowNetwork:
    """Flow network whose min-cost flows are surrogate-optimal matchings.

    Edge labels: ``("source", j)``, ``("main", i)``/``("secondary", i)`` for
    firm-copy-to-sink arcs, and ``("assign", j, i, "main"|"secondary")`` for
    worker arcs, which come worker-major, firm-minor, main before secondary.
    """
    n, m = inst.n, inst.m
    if sum(inst.capacities) < m:
        raise InfeasibleError("inadequate capacities")
    lay = NetworkLayout(n, m)
    net = FlowNetwork(2 + m + 2 * n, lay.source, lay.sink, m)
    net.names = (
        ["s", "t"] + [f"x{j}" for j in range(m)]
        + [f"y1_{i}" for i in range(n)] + [f"y2_{i}" for i in range(n)]
    )
    for j in range(m):
        net.add_edge(lay.source, lay.worker(j), 1, 1, 0.0, ("source", j))
    for i in range(n):
        net.add_edge(lay.main(i), lay.sink, 1, 1, 0.0, ("main", i))
        net.add_edge(lay.secondary(i), lay.sink, 0, inst.capacities[i] - 1, 0.0, ("secondary", i))
    for j in range(m):
        for i in range(n):
            w = inst.worker_values[j][i]
            if w == 0:
                continue
            v = inst.firm_valuations[i].value((j,))
            if v != 0:
                net.add_edge(lay.worker(j), lay.main(i), 0, 1, -ln(v * w), ("assign", j, i, "main"))
            net.add_edge(lay.worker(j), lay.secondary(i), 0, 1, -ln(w), ("assign", j, i, "secondary"))
    return net


def extract_matching(net: FlowNetwork, flow, n: int, m: int):
    """``(matching, main_worker)`` read off the worker arcs carrying flow."""
    flow = flow.flow if isinstance(flow, IntegralFlow) else flow
    assignment = [None] * m
    main = [None] * n
    for e, f in zip(net.edges, flow):
        if f and e.label and e.label[0] == "assign":
            _, j, i, copy = e.label
            assignment[j] = i
            if copy == "main":
                main[i] = j
    return Matching(tuple(assignment), n), main


def surrogate(inst: TwoSidedInstance, mu: Matching, main=None) -> Fraction:
    """``prod_i v_i(main_i) * prod_j w_j(mu_j)``.

    Without ``main`` every firm's favourite matched worker is used; an
    empty firm or unmatched worker makes the surrogate zero.
    """
    total = Fraction(1)
    for i, bundle in enumerate(mu.bundles):
        v = inst.firm_valuations[i]
        if main is not None and main[i] is not None:
            best = v.value((main[i],))
        else:
            best = max((v.value((j,)) for j in bundle), default=Fraction(0))
        total *= best
    for j, i in enumerate(mu.assignment):
        total *= Fraction(0) if i is None else inst.worker_values[j][i]
    return total


def fallback_matching(inst: TwoSidedInstance) -> Matching:
    """Some capacity-feasible matching, used when every matching has NSW 0."""
    load = [0] * inst.n
    assignment = []
    for j in range(inst.m):
        order = sorted(range(inst.n), key=lambda i: (inst.worker_values[j][i] == 0, i))
        pick = next(i for i in order if load[i] < inst.capacities[i])
        load[pick] += 1
        assignment.append(pick)
    return Matching(tuple(assignment), inst.n)


@dataclass
class TwoSidedResult:
    matching: Matching
    nsw: float
    diagnostics: dict

    def to_json(self) -> dict:
        return {"assignment": list(self.matching.assignment), **self.diagnostics}


def solve_two_sided(inst: TwoSidedInstance) -> TwoSidedResult:
    """1.33-approximation for capacitated two-sided NSW (subadditive firms)."""
    t0 = time.perf_counter()
    net = build_network(inst)
    bound = guarantee_factor(inst.m, inst.n)
    diag = {"x_ratio": inst.m / inst.n, "bound": bound}
    try:
        flow = min_cost_flow(net)
    except InfeasibleError:
        # no flow means some firm or worker cannot get a positive utility: OPT = 0
        mu = fallback_matching(inst)
        diag.update(
            surrogate=0.0, nsw=0.0, flow_cost=None, augmentations=0,
            certificate=None, zero_optimum=True, main_workers=None,
            millis=1000 * (time.perf_counter() - t0),
        )
        return TwoSidedResult(mu, 0.0, diag)
    mu, main = extract_matching(net, flow, inst.n, inst.m)
    nsw = nsw_two_sided(inst, mu)
    sur = surrogate(inst, mu, main)
    diag.update(
        surrogate=float(sur),
        ln_surrogate=ln(sur),
        nsw=nsw,
        flow_cost=flow.cost,
        augmentations=flow.augmentations,
        certificate=reduced_cost_certificate(net, flow),
        zero_optimum=False,
        main_workers=main,
        millis=1000 * (time.perf_counter() - t0),
    )
    return TwoSidedResult(mu, nsw, diag)


def _enumerate_best(inst: TwoSidedInstance) -> Matching:
    """Exhaustive NSW maximum via a mixed-radix counter over worker->firm choices.

    Prefixes that overfill a firm are pruned; products are compared exactly.
    """
    n, m = inst.n, inst.m
    if n ** m > PTAS_MAX_STATES:
        raise ResourceError(f"enumeration of {n}^{m} matchings exceeds {PTAS_MAX_STATES}")
    load = [0] * n
    choice = [0] * m
    best, best_val = None, Fraction(-1)
    vals = inst.firm_valuations

    def rec(j):
        nonlocal best, best_val
        if j == m:
            bundles = [[] for _ in range(n)]
            for w, i in enumerate(choice):
                bundles[i].append(w)
            prod = Fraction(1)
            for i in range(n):
                prod *= vals[i].value(bundles[i])
                if not prod:
                    break
            for w in range(m):
                if not prod:
                    break
                prod *= inst.worker_values[w][choice[w]]
            if prod > best_val:
                best, best_val = tuple(choice), prod
            return
        for i in range(n):
            if load[i] < inst.capacities[i]:
                load[i] += 1
                choice[j] = i
                rec(j + 1)
                load[i] -= 1

    rec(0)
    return Matching(best, n)


def solve_two_sided_ptas(inst: TwoSidedInstance, eps: float) -> TwoSidedResult:
    """(1 + eps)-approximation for constantly many firms.

    Runs the flow algorithm when it is already good enough
    (``eps >= 0.33`` or ``m >= n / eps^2``), else enumerates all matchings.
    """
    if eps <= 0:
        raise InstanceError("eps must be positive")
    if eps >= 0.33 or inst.m >= inst.n / eps**2:
        res = solve_two_sided(inst)
        res.diagnostics["branch"] = "flow"
        return res
    t0 = time.perf_counter()
    mu = _enumerate_best(inst)
    nsw = nsw_two_sided(inst, mu)
    diag = {
        "branch": "enumeration",
        "nsw": nsw,
        "ln_nsw": ln_nsw_two_sided(inst, mu),
        "x_ratio": inst.m / inst.n,
        "bound": 1.0,
        "millis": 1000 * (time.perf_counter() - t0),
    }
    return TwoSidedResult(mu, nsw, diag)


def worst_case_factor_sweep(xs) -> float:
    """Max of ``x^(1/(1+x))`` over the given points."""
    return max(math.exp(math.log(x) / (1 + x)) for x in xs)
