import io
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nswopt import generate as gen
from nswopt.errors import InfeasibleError, InstanceError
from nswopt.io import dumps, instance_to_json, load_instance, loads, save_instance


@settings(max_examples=60, deadline=None)
@given(
    st.sampled_from(["one-sided", "two-sided", "weighted"]),
    st.sampled_from(gen.KINDS),
    st.integers(1, 4),
    st.integers(0, 6),
    st.integers(0, 10**6),
)
def test_round_trip(family, kind, n, m, seed):
    params = {"n": n, "m": m}
    if family != "weighted":
        params["kind"] = kind
    inst = gen.generate(family, seed=seed, **params)
    back = loads(dumps(inst))
    assert back == inst
    assert instance_to_json(back) == instance_to_json(inst)


def test_stream_and_path(tmp_path):
    inst = gen.example1()
    buf = io.StringIO()
    save_instance(inst, buf)
    assert load_instance(io.StringIO(buf.getvalue())) == inst
    path = tmp_path / "x.json"
    save_instance(inst, path)
    assert load_instance(path) == inst


def test_rationals_are_strings():
    d = json.loads(dumps(gen.two_sided(2, 3, seed=1)))
    flat = [x for row in d["worker_values"] for x in row]
    assert all(isinstance(x, int) or "/" in x for x in flat)


def _doc(**over):
    d = {"model": "one-sided", "n": 1, "m": 1, "capacities": [1],
         "valuations": [{"kind": "additive", "values": ["1/2"]}]}
    d.update(over)
    return json.dumps(d)


@pytest.mark.parametrize(
    "text",
    [
        _doc(capacities=[0]),
        _doc(valuations=[{"kind": "additive", "values": [-1]}]),
        _doc(valuations=[{"kind": "additive", "values": [0.5]}]),
        _doc(valuations=[{"kind": "warp", "values": [1]}]),
        _doc(model="three-sided"),
        "{not json",
        json.dumps({"model": "one-sided"}),
    ],
)
def test_bad_documents(text):
    with pytest.raises(InstanceError):
        loads(text)


def test_inadequate_two_sided_file():
    d = {
        "model": "two-sided", "n": 2, "m": 5, "capacities": [2, 2],
        "valuations": [{"kind": "additive", "values": [1] * 5}] * 2,
        "worker_values": [[1, 1]] * 5,
    }
    with pytest.raises(InfeasibleError):
        loads(json.dumps(d))
