"""Weighted NSW through the configuration LP and dependent rounding.

Run with ``python3 demos/weighted_tour.py``.
"""

import math

import numpy as np

from nswopt import generate as gen
from nswopt.conflp import combined_bound, solve_conf_lp, solve_unweighted_best, solve_weighted
from nswopt.oracle import exact_two_sided, exact_weighted
from nswopt.rounding import dependent_rounding


def lp_and_rounding():
    winst = gen.weighted(2, 4, seed=4)
    lp = solve_conf_lp(winst, eps=0.1)
    print(f"LP objective {lp.objective:.4f} using {len(lp.columns)} columns"
          f" after {lp.iterations} pricing rounds")
    print(f"certified upper bound {lp.upper_bound:.4f}")
    print("marginals x[i, j]:")
    print(np.array2string(lp.x.x, precision=3, suppress_small=True))

    res = solve_weighted(winst, eps=0.1, trials=200, seed=1)
    d = res.diagnostics
    opt = exact_weighted(winst).nsw
    print(f"best of 200 roundings: ln NSW {res.ln_nsw:.4f} (optimum {math.log(opt):.4f})")
    print(f"mean over roundings {d['mean_ln_nsw']:.4f}, predicted floor {d['floor']:.4f}")


def marginals_are_kept():
    x = np.array([[0.5, 0.25, 0.75], [0.5, 0.75, 0.0]])
    rng = np.random.default_rng(0)
    counts = np.zeros_like(x)
    for _ in range(5000):
        for j, i in enumerate(dependent_rounding(x, rng).assignment):
            if i is not None:
                counts[i, j] += 1
    print("\nasked for\n", x, "\ngot\n", np.round(counts / 5000, 3))


def combined():
    print("\ncombined solver on unweighted instances (bound peaks near 1.163):")
    for n, m in [(2, 2), (2, 3), (1, 3), (2, 6)]:
        inst = gen.two_sided(n, m, seed=2)
        res = solve_unweighted_best(inst, eps=0.1, trials=16, seed=0)
        opt = exact_two_sided(inst).nsw
        ratio = opt / res.nsw if res.nsw else math.inf
        print(f"  n={n} m={m}: branch {res.diagnostics['branch']:<8} ratio {ratio:.4f}"
              f" bound {combined_bound(m, n):.4f}")


if __name__ == "__main__":
    lp_and_rounding()
    marginals_are_kept()
    combined()
