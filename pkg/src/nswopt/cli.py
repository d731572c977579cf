"""Command-line front end: ``nswopt {gen,solve,exact,bench,verify}``.

Exit codes: 0 success, 1 failed verification, 2 bad or infeasible input,
3 resource limit hit.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

from . import generate as gen_mod
from .conflp import combined_bound, solve_unweighted_best, solve_weighted
from .errors import InstanceError, ResourceError
from .flow import min_cost_flow
from .io import dumps, load_instance
from .model import OneSidedInstance, TwoSidedInstance, WeightedInstance
from .onesided import solve_one_sided
from .oracle import (
    EnumerationBudget,
    exact_one_sided,
    exact_two_sided,
    exact_weighted,
    verify_dual_feasible,
    verify_flow_optimal,
    verify_no_improving_swap,
)
from .twosided import build_network, guarantee_factor, solve_two_sided, solve_two_sided_ptas

ALGS = ("one-sided", "two-sided", "ptas", "weighted", "combined")
BENCH_COLUMNS = ("family", "n", "m", "eps", "seed", "alg_nsw", "opt_nsw", "ratio", "bound", "queries", "millis")
DEFAULT_ALG = {"one-sided": "one-sided", "two-sided": "two-sided", "weighted": "weighted"}


def _two_sided(inst) -> TwoSidedInstance:
    if isinstance(inst, WeightedInstance):
        return inst.instance
    if isinstance(inst, TwoSidedInstance):
        return inst
    raise InstanceError("this algorithm needs a two-sided instance")


def run_algorithm(inst, alg: str, eps: float = 0.1, seed: int = 0, trials: int = 16):
    """Solve ``inst`` with ``alg``; returns the solver's result object."""
    if alg == "one-sided":
        if not isinstance(inst, OneSidedInstance):
            raise InstanceError("one-sided algorithm needs a one-sided instance")
        return solve_one_sided(inst, eps)
    if alg == "two-sided":
        return solve_two_sided(_two_sided(inst))
    if alg == "ptas":
        return solve_two_sided_ptas(_two_sided(inst), eps)
    if alg == "weighted":
        if isinstance(inst, OneSidedInstance):
            raise InstanceError("weighted algorithm needs a two-sided instance")
        return solve_weighted(inst, eps, trials, seed)
    if alg == "combined":
        return solve_unweighted_best(_two_sided(inst), eps, trials, seed)
    raise InstanceError(f"unknown algorithm {alg!r}")


def run_exact(inst, budget=None):
    if isinstance(inst, OneSidedInstance):
        return exact_one_sided(inst, budget)
    if isinstance(inst, WeightedInstance):
        return exact_weighted(inst, budget)
    return exact_two_sided(inst, budget)


def _emit(payload, out):
    text = json.dumps(payload, indent=1, default=_json_default)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _json_default(x):
    if hasattr(x, "tolist"):
        return x.tolist()
    if isinstance(x, (set, frozenset)):
        return sorted(x)
    return str(x)


def _clean(obj):
    """Replace non-finite floats so the output stays strict JSON."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


# --------------------------------------------------------------------------
# subcommands


def cmd_gen(args):
    params = {}
    if args.family in ("one-sided", "two-sided", "weighted"):
        params = {"n": args.n, "m": args.m, "cap_range": (args.cap_min, args.cap_max)}
        if args.family != "weighted":
            params["kind"] = args.kind
    elif args.family == "footnote":
        params = {"n": args.n, "k": args.k, "c": args.c, "capacity": args.capacity}
    elif args.family == "example1":
        params = {"capacity": args.capacity or 2}
    inst = gen_mod.generate(args.family, seed=args.seed, **params)
    text = dumps(inst)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def cmd_solve(args):
    inst = load_instance(args.instance)
    res = run_algorithm(inst, args.alg, args.eps, args.seed, args.trials)
    _emit(_clean({"algorithm": args.alg, **res.to_json()}), args.out)
    return 0


def cmd_exact(args):
    inst = load_instance(args.instance)
    res = run_exact(inst)
    _emit(_clean(res.to_json()), args.out)
    return 0


def cmd_verify(args):
    """Solve, then re-check the solver's certificate independently."""
    inst = load_instance(args.instance)
    alg = args.alg or ("one-sided" if isinstance(inst, OneSidedInstance) else "two-sided")
    res = run_algorithm(inst, alg, args.eps, args.seed, args.trials)
    checks = {}
    if alg == "one-sided":
        checks["feasible"] = res.allocation.is_feasible(inst.capacities)
        verdict = verify_no_improving_swap(res.state)
        checks["no_improving_swap"] = verdict.ok
        witness = verdict.witness
    elif alg in ("two-sided", "ptas") and res.diagnostics.get("branch", "flow") == "flow":
        base = _two_sided(inst)
        checks["feasible"] = res.matching.is_feasible(base.capacities)
        witness = None
        if not res.diagnostics.get("zero_optimum"):
            net = build_network(base)
            verdict = verify_flow_optimal(net, min_cost_flow(net))
            checks["flow_optimal"] = verdict.ok
            witness = verdict.witness
    elif alg == "weighted":
        winst = inst if isinstance(inst, WeightedInstance) else WeightedInstance.uniform(inst)
        checks["feasible"] = res.matching.is_feasible(winst.instance.capacities)
        verdict = verify_dual_feasible(winst, res.lp.dual, args.eps)
        checks["dual_feasible"] = verdict.ok
        witness = verdict.witness
    else:
        base = _two_sided(inst)
        checks["feasible"] = res.matching.is_feasible(base.capacities)
        witness = None
    ok = all(checks.values())
    _emit(_clean({"algorithm": alg, "ok": ok, "checks": checks, "witness": witness}), args.out)
    return 0 if ok else 1


# --------------------------------------------------------------------------
# bench


def _bound(alg, inst, eps):
    if alg == "one-sided":
        return 6 + eps
    if alg == "ptas":
        return 1 + eps
    base = inst.instance if isinstance(inst, WeightedInstance) else inst
    if alg == "two-sided":
        return guarantee_factor(base.m, base.n)
    if alg == "combined":
        return combined_bound(base.m, base.n, eps)
    sum_eta = float(sum(inst.firm_weights))
    return math.exp(sum_eta / math.e + eps)


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def bench_rows(config: dict):
    """Yield one CSV row dict per grid point and seed, in config order."""
    family = config.get("family", "one-sided")
    if family not in DEFAULT_ALG:
        raise InstanceError(f"bench family must be one of {sorted(DEFAULT_ALG)}")
    alg = config.get("alg", DEFAULT_ALG[family])
    eps = float(config.get("eps", 0.1))
    trials = int(config.get("trials", 16))
    seeds = list(config.get("seeds", [0]))
    kind = config.get("kind", "additive")
    cap_range = tuple(config.get("capacity", (1, 3)))
    budget_states = int(config.get("oracle_budget", EnumerationBudget().max_states))
    grid = config.get("grid")
    if grid is None:
        grid = [{"n": n, "m": m} for n in config.get("n", []) for m in config.get("m", [])]
    for point in grid:
        n, m = int(point["n"]), int(point["m"])
        for seed in seeds:
            row = {"family": family, "n": n, "m": m, "eps": eps, "seed": seed}
            try:
                params = {"n": n, "m": m, "cap_range": cap_range}
                if family != "weighted":
                    params["kind"] = kind
                inst = gen_mod.generate(family, seed=seed, **params)
                base = inst.instance if isinstance(inst, WeightedInstance) else inst
                q0 = _queries(base)
                t0 = time.perf_counter()
                res = run_algorithm(inst, alg, eps, seed, trials)
                millis = 1000 * (time.perf_counter() - t0)
                alg_nsw = res.nsw
                row.update(alg_nsw=alg_nsw, bound=_bound(alg, inst, eps),
                           queries=_queries(base) - q0, millis=round(millis, 3))
                try:
                    opt = run_exact(inst, EnumerationBudget(budget_states)).nsw
                except ResourceError:
                    opt = None
                if opt is not None:
                    row["opt_nsw"] = opt
                    row["ratio"] = 1.0 if opt == 0 else (math.inf if alg_nsw == 0 else opt / alg_nsw)
            except (InstanceError, ResourceError) as exc:
                print(f"bench: n={n} m={m} seed={seed}: {exc}", file=sys.stderr)
            yield row


def _queries(inst):
    return inst.queries


def cmd_bench(args):
    config = json.loads(Path(args.config).read_text(encoding="utf-8"))
    out = args.out or config.get("out")
    stream = open(out, "w", newline="", encoding="utf-8") if out else sys.stdout
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(BENCH_COLUMNS)
        for row in bench_rows(config):
            writer.writerow([_fmt(row.get(c)) for c in BENCH_COLUMNS])
    finally:
        if out:
            stream.close()
    return 0


# --------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nswopt", description="Capacitated Nash social welfare solvers.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an instance")
    g.add_argument("family", choices=gen_mod.FAMILIES)
    g.add_argument("--n", type=int, default=3)
    g.add_argument("--m", type=int, default=6)
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--c", type=int, default=5)
    g.add_argument("--capacity", type=int, default=None)
    g.add_argument("--kind", choices=gen_mod.KINDS, default="additive")
    g.add_argument("--cap-min", type=int, default=1)
    g.add_argument("--cap-max", type=int, default=3)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    def solver_flags(q, alg_default):
        q.add_argument("instance")
        q.add_argument("--alg", choices=ALGS, default=alg_default)
        q.add_argument("--eps", type=float, default=0.1)
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("--trials", type=int, default=16)
        q.add_argument("--out")

    s = sub.add_parser("solve", help="run an approximation algorithm")
    solver_flags(s, "one-sided")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="solve and re-check the solver's certificate")
    solver_flags(v, None)
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("exact", help="brute-force optimum")
    e.add_argument("instance")
    e.add_argument("--out")
    e.set_defaults(func=cmd_exact)

    b = sub.add_parser("bench", help="benchmark sweep to CSV")
    b.add_argument("config")
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InstanceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ResourceError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
