"""Weighted two-sided NSW through a configuration LP.

The LP has one variable ``y[i, S]`` per firm ``i`` and bundle ``|S| <= c_i``
with objective coefficient ``eta_i ln v_i(S) + sum_{j in S} zeta_j ln w_j(i)``.
It is solved by column generation: a restricted master LP (HiGHS) over the
columns found so far, priced by an approximate separation oracle for the
dual.  The oracle sorts workers for firms of weight zero and otherwise runs a
value-scaled knapsack DP, one per choice of the bundle's most valuable worker.

At termination every firm's best relaxed violation bounds its exact
violation, so ``objective <= LP* <= upper_bound`` with
``upper_bound - objective <= ln(1 + eps/2) * sum(eta)`` up to LP tolerances.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional

import numpy as np
from scipy.optimize import linprog

from .errors import InstanceError, ResourceError
from .model import (
    Additive,
    Matching,
    TwoSidedInstance,
    WeightedInstance,
    ln,
    ln_weighted_nsw,
    nsw_two_sided,
)
from .rounding import dependent_rounding
from .twosided import guarantee_factor, solve_two_sided

MAX_COLUMNS = 10_000
VIOLATION_TOL = 1e-9


def _require_additive(winst: WeightedInstance) -> None:
    for i, v in enumerate(winst.instance.firm_valuations):
        if not isinstance(v, Additive):
            raise InstanceError(f"firm {i}: the weighted pipeline needs additive valuations")


def _as_weighted(inst) -> WeightedInstance:
    if isinstance(inst, WeightedInstance):
        return inst
    if isinstance(inst, TwoSidedInstance):
        return WeightedInstance.uniform(inst)
    raise InstanceError("expected a two-sided instance")


@dataclass(frozen=True)
class Column:
    firm: int
    workers: frozenset
    coef: float
    weight: float = 0.0

    @property
    def key(self):
        return (self.firm, self.workers)


@dataclass(frozen=True)
class DualPoint:
    alpha: tuple
    beta: tuple
    budget: Optional[float] = None

    def total(self) -> float:
        return math.fsum(self.alpha) + math.fsum(self.beta)


@dataclass(frozen=True)
class FractionalAssignment:
    """Marginals ``x[i, j] = sum_{S ∋ j} y[i, S]`` as an ``n x m`` array."""

    x: np.ndarray

    @classmethod
    def from_columns(cls, columns, n: int, m: int) -> "FractionalAssignment":
        x = np.zeros((n, m))
        for col in columns:
            for j in col.workers:
                x[col.firm, j] += col.weight
        np.clip(x, 0.0, 1.0, out=x)
        over = x.sum(axis=0)
        # absorb LP round-off so worker totals never exceed one
        x[:, over > 1] /= over[over > 1]
        return cls(x)

    def worker_totals(self):
        return self.x.sum(axis=0)

    def firm_totals(self):
        return self.x.sum(axis=1)

    def is_integral(self, tol: float = 1e-9) -> bool:
        return bool(np.all((self.x < tol) | (self.x > 1 - tol)))


class _Pricing:
    """Per-firm constants shared by the oracle and the coefficient routine."""

    def __init__(self, winst: WeightedInstance):
        inst = winst.instance
        self.winst = winst
        self.n, self.m = inst.n, inst.m
        self.eta = [float(e) for e in winst.firm_weights]
        self.zeta = [float(z) for z in winst.worker_weights]
        self.vals = [[v.value((j,)) for j in range(self.m)] for v in inst.firm_valuations]
        # lw[i][j] = zeta_j ln w_j(i), -inf when the worker weighs a zero value
        self.lw = [
            [
                0.0 if winst.worker_weights[j] == 0
                else -math.inf if inst.worker_values[j][i] == 0
                else self.zeta[j] * ln(inst.worker_values[j][i])
                for j in range(self.m)
            ]
            for i in range(self.n)
        ]

    def coefficient(self, i: int, S) -> float:
        total = 0.0
        if self.eta[i] > 0:
            v = sum((self.vals[i][j] for j in S), Fraction(0))
            if v == 0:
                return -math.inf
            total = self.eta[i] * ln(v)
        return total + math.fsum(self.lw[i][j] for j in S)


def column_coefficient(winst: WeightedInstance, i: int, S) -> float:
    """``eta_i ln v_i(S) + sum_{j in S} zeta_j ln w_j(i)`` with ``0 * ln 0 = 0``."""
    return _Pricing(winst).coefficient(i, S)


def relaxed_violation(winst, dual: DualPoint, i: int, S, eps: float) -> float:
    """Slack of the relaxed dual constraint; positive means violated.

    The firm term uses ``v_i(S) * (1 + eps/2)`` in place of ``v_i(S)``.
    """
    p = winst if isinstance(winst, _Pricing) else _Pricing(winst)
    coef = p.coefficient(i, S)
    if p.eta[i] > 0 and coef > -math.inf:
        coef += p.eta[i] * math.log1p(eps / 2)
    return coef - math.fsum(dual.alpha[j] for j in S) - dual.beta[i]


def exact_violation(winst, dual: DualPoint, i: int, S) -> float:
    p = winst if isinstance(winst, _Pricing) else _Pricing(winst)
    return p.coefficient(i, S) - math.fsum(dual.alpha[j] for j in S) - dual.beta[i]


# --------------------------------------------------------------------------
# knapsack DP


@dataclass
class KnapsackTable:
    """Min ``sum alpha'`` over sets containing ``star``, indexed by (size, scaled value).

    ``cost[x, y]`` is ``inf`` for unreachable cells.  ``items`` lists the
    optional workers in processing order; ``take[k]`` records whether cell
    ``(x, y)`` used item ``k`` after it was processed.
    """

    star: int
    items: list
    cost: np.ndarray
    value: np.ndarray
    take: list = field(repr=False)
    sizes: dict = field(repr=False)

    def reconstruct(self, x: int, y: int) -> frozenset:
        chosen = [self.star]
        for k in range(len(self.items) - 1, -1, -1):
            if self.take[k][x, y]:
                j = self.items[k]
                chosen.append(j)
                x -= 1
                y -= self.sizes[j]
        return frozenset(chosen)


def scaled_values(values, star: int, m: int, eps: float) -> dict:
    """``floor(2 m v(j) / (eps v(star)))`` for every ``j`` with ``v(j) <= v(star)``."""
    top = Fraction(values[star])
    e = Fraction(eps)
    return {
        j: math.floor(Fraction(2 * m) * Fraction(v) / (e * top))
        for j, v in enumerate(values)
        if v <= top
    }


def knapsack_table(alpha_prime, values, star: int, cap: int, eps: float, m: Optional[int] = None) -> KnapsackTable:
    """DP over workers ``j != star`` with finite ``alpha'_j`` and ``v(j) <= v(star)``."""
    m = len(values) if m is None else m
    sizes = scaled_values(values, star, m, eps)
    items = [j for j in sorted(sizes) if j != star and alpha_prime[j] < math.inf]
    ymax = cap * math.floor(Fraction(2 * m) / Fraction(eps))
    cost = np.full((cap + 1, ymax + 1), np.inf)
    value = np.zeros((cap + 1, ymax + 1))
    cost[1, sizes[star]] = alpha_prime[star]
    value[1, sizes[star]] = float(values[star])
    take = []
    for j in items:
        h, a, vj = sizes[j], alpha_prime[j], float(values[j])
        t = np.zeros((cap + 1, ymax + 1), dtype=bool)
        for x in range(cap, 1, -1):
            width = ymax + 1 - h
            cand = cost[x - 1, :width] + a
            better = cand < cost[x, h:]
            if better.any():
                cost[x, h:][better] = cand[better]
                value[x, h:][better] = value[x - 1, :width][better] + vj
                t[x, h:] = better
        take.append(t)
    return KnapsackTable(star, items, cost, value, take, sizes)


# --------------------------------------------------------------------------
# separation oracle


@dataclass(frozen=True)
class Violation:
    firm: int
    workers: frozenset
    relaxed: float
    exact: float


def _firm_zero_weight(p: _Pricing, dual, i, cap):
    keys = []
    for j in range(p.m):
        if p.lw[i][j] == -math.inf:
            continue
        keys.append((dual.alpha[j] - p.lw[i][j], j))
    keys.sort()
    best_S, best_val, run = frozenset(), -dual.beta[i], 0.0
    for r, (k, j) in enumerate(keys[:cap], start=1):
        run += k
        val = -run - dual.beta[i]
        if val > best_val:
            best_S, best_val = frozenset(j for _, j in keys[:r]), val
    return best_S


def _firm_positive_weight(p: _Pricing, dual, i, cap, eps):
    eta = p.eta[i]
    alpha_p = [
        math.inf if p.lw[i][j] == -math.inf else (dual.alpha[j] - p.lw[i][j]) / eta
        for j in range(p.m)
    ]
    vals = p.vals[i]
    half = math.log1p(eps / 2)
    best, best_score = None, -math.inf
    for star in range(p.m):
        if vals[star] == 0 or alpha_p[star] == math.inf:
            continue
        table = knapsack_table(alpha_p, vals, star, cap, eps, p.m)
        finite = np.isfinite(table.cost)
        if not finite.any():
            continue
        with np.errstate(divide="ignore"):
            score = np.where(finite, eta * (np.log(table.value) + half - table.cost), -np.inf)
        x, y = np.unravel_index(int(np.argmax(score)), score.shape)
        if score[x, y] > best_score:
            best_score = score[x, y]
            best = table.reconstruct(int(x), int(y))
    return best


def firm_candidates(winst, dual: DualPoint, eps: float) -> List[Violation]:
    """Most relaxed-violated set of every firm, with its relaxed and exact slack."""
    p = winst if isinstance(winst, _Pricing) else _Pricing(winst)
    caps = p.winst.instance.capacities
    out = []
    for i in range(p.n):
        if p.eta[i] == 0:
            S = _firm_zero_weight(p, dual, i, caps[i])
        else:
            S = _firm_positive_weight(p, dual, i, caps[i], eps)
            if S is None:
                continue
        out.append(Violation(i, S, relaxed_violation(p, dual, i, S, eps), exact_violation(p, dual, i, S)))
    return out


def separation_oracle(winst, dual: DualPoint, eps: float) -> Optional[Violation]:
    """A dual constraint violated in the relaxed sense, or ``None`` for "feasible".

    Exactly violated candidates are preferred; a candidate violated only
    after relaxing ``v_i(S)`` to ``v_i(S) (1 + eps/2)`` is returned when no
    exact violation shows up among the DP's representatives.
    """
    if eps <= 0:
        raise InstanceError("eps must be positive")
    cands = [c for c in firm_candidates(winst, dual, eps) if c.relaxed > VIOLATION_TOL]
    if not cands:
        return None
    exact = [c for c in cands if c.exact > VIOLATION_TOL]
    pool = exact or cands
    return max(pool, key=lambda c: (c.exact if exact else c.relaxed, -c.firm))


# --------------------------------------------------------------------------
# master LP and column generation


@dataclass
class ConfLPResult:
    columns: list
    objective: float
    upper_bound: float
    dual: DualPoint
    x: FractionalAssignment
    feasible: bool
    iterations: int
    diagnostics: dict


def _solve_master(cols, n, m, big):
    k = len(cols)
    c = np.empty(k)
    A_ub = np.zeros((m, k))
    A_eq = np.zeros((n, k))
    for t, col in enumerate(cols):
        c[t] = big if col.workers is None else -col.coef
        A_eq[col.firm, t] = 1.0
        for j in col.workers or ():
            A_ub[j, t] = 1.0
    res = linprog(
        c, A_ub=A_ub if m else None, b_ub=np.ones(m) if m else None,
        A_eq=A_eq, b_eq=np.ones(n), bounds=(0, None), method="highs",
    )
    if res.status != 0:
        raise ResourceError(f"master LP failed: {res.message}")
    alpha = tuple(float(max(0.0, -a)) for a in res.ineqlin.marginals) if m else ()
    beta = tuple(float(-b) for b in res.eqlin.marginals)
    return res.x, alpha, beta


def _seed_columns(p: _Pricing, winst):
    inst = winst.instance
    seeds = []
    for i in range(p.n):
        if p.eta[i] == 0:
            seeds.append((i, frozenset()))
        for j in range(p.m):
            seeds.append((i, frozenset([j])))
    try:
        flow = solve_two_sided(inst).matching
        seeds += [(i, frozenset(b)) for i, b in enumerate(flow.bundles)]
    except ResourceError:
        pass
    out = {}
    for i, S in seeds:
        if len(S) <= inst.capacities[i] and (i, S) not in out:
            coef = p.coefficient(i, S)
            if coef > -math.inf:
                out[(i, S)] = Column(i, S, coef)
    return list(out.values())


def solve_conf_lp(inst, eps: float = 0.1, max_columns: int = MAX_COLUMNS) -> ConfLPResult:
    """Configuration LP within additive ``ln(1 + eps)`` of its optimum.

    ``feasible`` is False when no finite-coefficient solution exists, i.e.
    every matching has weighted NSW zero; the objective is then ``-inf``.
    """
    if eps <= 0:
        raise InstanceError("eps must be positive")
    winst = _as_weighted(inst)
    _require_additive(winst)
    t0 = time.perf_counter()
    p = _Pricing(winst)
    n, m = p.n, p.m
    cols = _seed_columns(p, winst)
    known = {c.key for c in cols}
    logs = [abs(ln(q)) for row in p.vals for q in row if q > 0]
    logs += [abs(x) for row in p.lw for x in row if x > -math.inf]
    big = 1e3 * (1 + max(logs, default=0.0)) * (m + 1)
    artificial = [Column(i, None, -big) for i in range(n)]
    iterations = 0
    while True:
        iterations += 1
        master = artificial + cols
        y, alpha, beta = _solve_master(master, n, m, big)
        dual = DualPoint(alpha, beta)
        cands = firm_candidates(p, dual, eps)
        fresh = [c for c in cands if c.relaxed > VIOLATION_TOL and (c.firm, c.workers) not in known]
        if not fresh:
            break
        for c in fresh:
            cols.append(Column(c.firm, c.workers, p.coefficient(c.firm, c.workers)))
            known.add((c.firm, c.workers))
        if len(cols) > max_columns:
            partial = _package(winst, master, y, dual, cands, iterations, t0, eps)
            raise ResourceError(f"column generation exceeded {max_columns} columns", partial=partial)
    return _package(winst, master, y, dual, cands, iterations, t0, eps)


def _package(winst, master, y, dual, cands, iterations, t0, eps):
    n, m = winst.n, winst.m
    art = sum(float(y[t]) for t, c in enumerate(master) if c.workers is None)
    feasible = art < 1e-7
    weights = np.maximum(y, 0.0)
    kept = []
    for t, col in enumerate(master):
        if col.workers is not None and weights[t] > 1e-12:
            kept.append(Column(col.firm, col.workers, col.coef, float(weights[t])))
    # renormalize each firm's weights to sum to exactly one
    totals = [0.0] * n
    for col in kept:
        totals[col.firm] += col.weight
    kept = [Column(c.firm, c.workers, c.coef, c.weight / totals[c.firm]) for c in kept]
    if feasible:
        objective = math.fsum(c.coef * c.weight for c in kept)
        gap = math.fsum(max(0.0, c.relaxed) for c in cands)
        upper = math.fsum(dual.alpha) + math.fsum(dual.beta) + gap
    else:
        objective = upper = -math.inf
    dual = DualPoint(dual.alpha, dual.beta, math.fsum(dual.alpha) + math.fsum(dual.beta))
    x = FractionalAssignment.from_columns(kept, n, m)
    diag = {
        "lp_objective": objective,
        "upper_bound": upper,
        "columns": len(kept),
        "generated": len(master) - n,
        "iterations": iterations,
        "eps": eps,
        "millis": 1000 * (time.perf_counter() - t0),
    }
    return ConfLPResult(kept, objective, upper, dual, x, feasible, iterations, diag)


# --------------------------------------------------------------------------
# rounding pipeline


def complete_matching(inst: TwoSidedInstance, mu: Matching) -> Matching:
    """Assign leftover workers to firms with spare capacity, best worker value first.

    Firms are monotone, so this never lowers anyone's utility.
    """
    load = list(mu.loads)
    assignment = list(mu.assignment)
    for j, i in enumerate(assignment):
        if i is not None:
            continue
        open_ = [k for k in range(inst.n) if load[k] < inst.capacities[k]]
        if not open_:
            continue
        pick = max(open_, key=lambda k: (inst.worker_values[j][k], -k))
        assignment[j] = pick
        load[pick] += 1
    return Matching(tuple(assignment), inst.n)


@dataclass
class WeightedResult:
    matching: Matching
    ln_nsw: float
    diagnostics: dict
    lp: Optional[ConfLPResult] = None

    @property
    def nsw(self) -> float:
        return 0.0 if self.ln_nsw == -math.inf else math.exp(self.ln_nsw)

    def to_json(self) -> dict:
        return {"best_matching": list(self.matching.assignment), **self.diagnostics}


def trial_rng(seed: int, trial: int):
    return np.random.default_rng([seed, trial])


def solve_weighted(inst, eps: float = 0.1, trials: int = 16, seed: int = 0) -> WeightedResult:
    """Round the configuration LP ``trials`` times and keep the best matching."""
    if trials < 1:
        raise InstanceError("trials must be at least 1")
    winst = _as_weighted(inst)
    base = winst.instance
    lp = solve_conf_lp(winst, eps)
    sum_eta = float(sum(winst.firm_weights))
    diag = {
        "lp_objective": lp.objective,
        "lp_upper_bound": lp.upper_bound,
        "columns": [
            {"firm": c.firm, "workers": sorted(c.workers), "weight": c.weight} for c in lp.columns
        ],
        "x_marginals": lp.x.x.round(12).tolist(),
        "floor": lp.objective - sum_eta / math.e,
    }
    best, best_ln, records = None, -math.inf, []
    for t in range(trials):
        mu = dependent_rounding(lp.x.x, trial_rng(seed, t), base.capacities)
        mu = complete_matching(base, mu)
        value = ln_weighted_nsw(winst, mu)
        records.append({"seed": [seed, t], "ln_nsw": value})
        if best is None or value > best_ln:
            best, best_ln = mu, value
    finite = [r["ln_nsw"] for r in records]
    diag["trials"] = records
    diag["mean_ln_nsw"] = math.fsum(finite) / len(finite) if -math.inf not in finite else -math.inf
    diag["ln_nsw"] = best_ln
    diag["nsw"] = 0.0 if best_ln == -math.inf else math.exp(best_ln)
    return WeightedResult(best, best_ln, diag, lp)


def combined_bound(m: int, n: int, eps: float = 0.0) -> float:
    """``min(x^(1/(1+x)), e^(1/(e(x+1)) + eps))`` with ``x = m / n``."""
    x = m / n
    return min(guarantee_factor(m, n), math.exp(1 / (math.e * (x + 1)) + eps))


@dataclass
class CombinedResult:
    matching: Matching
    nsw: float
    diagnostics: dict

    def to_json(self) -> dict:
        return {"assignment": list(self.matching.assignment), **self.diagnostics}


def solve_unweighted_best(inst: TwoSidedInstance, eps: float = 0.1, trials: int = 16, seed: int = 0) -> CombinedResult:
    """Better of the flow algorithm and the uniformly weighted LP rounding."""
    if isinstance(inst, WeightedInstance):
        inst = inst.instance
    winst = WeightedInstance.uniform(inst)
    _require_additive(winst)
    flow = solve_two_sided(inst)
    rounded = solve_weighted(winst, eps, trials, seed)
    flow_nsw = flow.nsw
    lp_nsw = nsw_two_sided(inst, rounded.matching)
    if lp_nsw > flow_nsw:
        branch, mu, nsw = "rounding", rounded.matching, lp_nsw
    else:
        branch, mu, nsw = "flow", flow.matching, flow_nsw
    diag = {
        "branch": branch,
        "nsw": nsw,
        "flow_nsw": flow_nsw,
        "rounding_nsw": lp_nsw,
        "lp_objective": rounded.lp.objective,
        "bound": combined_bound(inst.m, inst.n, eps),
    }
    return CombinedResult(mu, nsw, diag)
