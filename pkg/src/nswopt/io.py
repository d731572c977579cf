"""JSON instance format.

Top level::

    {"model": "one-sided" | "two-sided", "n": int, "m": int,
     "capacities": [int, ...], "valuations": [ValuationJson, ...],
     "worker_values": [["p/q", ...], ...],            # two-sided only, m x n
     "weights": {"firms": [...], "workers": [...]}}   # optional, two-sided

Rationals are written as plain integers when integral, else ``"p/q"``.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Union

from .errors import InstanceError
from .model import (
    Additive,
    CappedAdditive,
    ExplicitTable,
    OneSidedInstance,
    TwoSidedInstance,
    Valuation,
    WeightedCoverage,
    WeightedInstance,
    as_fraction,
)

Instance = Union[OneSidedInstance, TwoSidedInstance, WeightedInstance]


def rational_to_json(q: Fraction):
    q = Fraction(q)
    return q.numerator if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _rat(x, where):
    try:
        return as_fraction(x)
    except InstanceError as exc:
        raise InstanceError(f"{where}: {exc}") from None


def valuation_to_json(v: Valuation) -> dict:
    if isinstance(v, Additive):
        return {"kind": "additive", "values": [rational_to_json(x) for x in v.values]}
    if isinstance(v, CappedAdditive):
        return {"kind": "capped", "values": [rational_to_json(x) for x in v.values], "cap": v.cap}
    if isinstance(v, WeightedCoverage):
        return {
            "kind": "coverage",
            "universe": v.universe,
            "weights": [rational_to_json(x) for x in v.weights],
            "sets": [sorted(s) for s in v.sets],
        }
    if isinstance(v, ExplicitTable):
        return {"kind": "table", "values": [rational_to_json(x) for x in v.values]}
    raise InstanceError(f"cannot serialize valuation of kind {v.kind!r}")


def valuation_from_json(d: dict, m: int, where: str = "valuation") -> Valuation:
    if not isinstance(d, dict) or "kind" not in d:
        raise InstanceError(f"{where}: expected an object with a 'kind' field")
    kind = d["kind"]
    try:
        if kind == "additive":
            v = Additive(tuple(_rat(x, where) for x in d["values"]))
        elif kind == "capped":
            v = CappedAdditive(tuple(_rat(x, where) for x in d["values"]), d["cap"])
        elif kind == "coverage":
            v = WeightedCoverage(
                d["universe"], tuple(_rat(x, where) for x in d["weights"]),
                tuple(tuple(s) for s in d["sets"]),
            )
        elif kind == "table":
            v = ExplicitTable(tuple(_rat(x, where) for x in d["values"]))
        else:
            raise InstanceError(f"{where}: unknown valuation kind {kind!r}")
    except KeyError as exc:
        raise InstanceError(f"{where}: missing field {exc.args[0]!r}") from None
    except InstanceError as exc:
        msg = str(exc)
        raise InstanceError(msg if msg.startswith(where) else f"{where}: {msg}") from None
    if v.m != m:
        raise InstanceError(f"{where}: universe size {v.m} does not match m={m}")
    return v


def instance_to_json(inst: Instance) -> dict:
    if isinstance(inst, OneSidedInstance):
        return {
            "model": "one-sided",
            "n": inst.n,
            "m": inst.m,
            "capacities": list(inst.capacities),
            "valuations": [valuation_to_json(v) for v in inst.valuations],
        }
    weights = None
    if isinstance(inst, WeightedInstance):
        weights = {
            "firms": [rational_to_json(x) for x in inst.firm_weights],
            "workers": [rational_to_json(x) for x in inst.worker_weights],
        }
        inst = inst.instance
    out = {
        "model": "two-sided",
        "n": inst.n,
        "m": inst.m,
        "capacities": list(inst.capacities),
        "valuations": [valuation_to_json(v) for v in inst.firm_valuations],
        "worker_values": [[rational_to_json(x) for x in row] for row in inst.worker_values],
    }
    if weights is not None:
        out["weights"] = weights
    return out


def instance_from_json(d: dict) -> Instance:
    if not isinstance(d, dict):
        raise InstanceError("instance must be a JSON object")
    for key in ("model", "n", "m", "capacities", "valuations"):
        if key not in d:
            raise InstanceError(f"missing top-level field {key!r}")
    n, m = d["n"], d["m"]
    if not isinstance(n, int) or n < 1 or not isinstance(m, int) or m < 0:
        raise InstanceError("n must be >= 1 and m >= 0")
    caps = d["capacities"]
    if not isinstance(caps, list) or len(caps) != n:
        raise InstanceError(f"capacities must be a list of {n} integers")
    for c in caps:
        if isinstance(c, bool) or not isinstance(c, int) or c < 1:
            raise InstanceError(f"capacity must be a positive integer, got {c!r}")
    vals = d["valuations"]
    if not isinstance(vals, list) or len(vals) != n:
        raise InstanceError(f"valuations must be a list of {n} objects")
    valuations = tuple(valuation_from_json(v, m, f"valuations[{i}]") for i, v in enumerate(vals))
    model = d["model"]
    if model == "one-sided":
        if "worker_values" in d or "weights" in d:
            raise InstanceError("one-sided instances take no worker_values or weights")
        return OneSidedInstance(valuations, tuple(caps), m)
    if model != "two-sided":
        raise InstanceError(f"unknown model {model!r}")
    rows = d.get("worker_values")
    if not isinstance(rows, list) or len(rows) != m:
        raise InstanceError(f"worker_values must be an {m} x {n} matrix")
    worker_values = []
    for j, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            raise InstanceError(f"worker_values[{j}] must have {n} entries")
        worker_values.append(tuple(_rat(x, f"worker_values[{j}]") for x in row))
    inst = TwoSidedInstance(valuations, tuple(worker_values), tuple(caps))
    if "weights" not in d:
        return inst
    w = d["weights"]
    if not isinstance(w, dict) or "firms" not in w or "workers" not in w:
        raise InstanceError("weights must have 'firms' and 'workers' lists")
    return WeightedInstance(
        inst,
        tuple(_rat(x, "weights.firms") for x in w["firms"]),
        tuple(_rat(x, "weights.workers") for x in w["workers"]),
    )


def dumps(inst: Instance) -> str:
    return json.dumps(instance_to_json(inst), indent=1)


def loads(text: str) -> Instance:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"invalid JSON: {exc}") from None
    return instance_from_json(d)


def save_instance(inst: Instance, path) -> None:
    if hasattr(path, "write"):
        path.write(dumps(inst))
        return
    Path(path).write_text(dumps(inst), encoding="utf-8")


def load_instance(path) -> Instance:
    if hasattr(path, "read"):
        return loads(path.read())
    return loads(Path(path).read_text(encoding="utf-8"))
