"""Drive the command line: generate, solve, verify and sweep to CSV.

Run with ``python3 demos/bench_sweep.py``; files go to a temporary directory.
"""

import json
import tempfile
from pathlib import Path

from nswopt.cli import main


def step(title, *argv):
    print(f"\n$ nswopt {' '.join(argv)}    # {title}")
    code = main(list(argv))
    print(f"(exit {code})")


if __name__ == "__main__":
    work = Path(tempfile.mkdtemp(prefix="nswopt-demo-"))
    inst = work / "two.json"
    config = work / "sweep.json"
    config.write_text(json.dumps({
        "family": "two-sided",
        "grid": [{"n": 1, "m": m} for m in range(1, 7)],
        "seeds": [0, 1],
    }))
    step("make a two-sided instance", "gen", "two-sided", "--n", "2", "--m", "4", "--seed", "9",
         "--out", str(inst))
    step("approximate", "solve", str(inst), "--alg", "two-sided", "--out", str(work / "sol.json"))
    print((work / "sol.json").read_text()[:300])
    step("re-check the certificate", "verify", str(inst))
    step("model mismatch is rejected", "solve", str(inst), "--alg", "one-sided")
    step("sweep x = m/n from 1 to 6", "bench", str(config))
