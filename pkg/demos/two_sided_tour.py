"""Two-sided matching: the flow algorithm, its surrogate, and the PTAS.

Run with ``python3 demos/two_sided_tour.py``.
"""

import numpy as np

from nswopt import generate as gen
from nswopt.flow import min_cost_flow
from nswopt.oracle import exact_two_sided, verify_flow_optimal
from nswopt.twosided import (
    build_network,
    guarantee_factor,
    solve_two_sided,
    solve_two_sided_ptas,
    worst_case_factor_sweep,
)


def one_instance():
    inst = gen.two_sided(2, 5, seed=3, kind="xos")
    net = build_network(inst)
    print(f"network: {net.num_nodes} nodes, {len(net.edges)} edges, must carry {net.value} units")
    res = solve_two_sided(inst)
    d = res.diagnostics
    print(f"matching {res.matching.assignment}, main workers {d['main_workers']}")
    print(f"surrogate {d['surrogate']:.3f}, NSW {res.nsw:.4f}, optimum {exact_two_sided(inst).nsw:.4f}")
    print(f"no negative residual cycle: {bool(verify_flow_optimal(net, min_cost_flow(net)))}")


def ratio_curve():
    print("\nworst observed ratio per workers-to-firms ratio x, against x^(1/(1+x)):")
    for n, m in [(2, 1), (2, 2), (2, 3), (1, 2), (2, 6), (1, 4), (1, 6)]:
        worst = 1.0
        for seed in range(30):
            inst = gen.two_sided(n, m, seed=seed)
            opt = exact_two_sided(inst).nsw
            alg = solve_two_sided(inst).nsw
            if opt > 0 and alg > 0:
                worst = max(worst, opt / alg)
        print(f"  x = {m / n:4.2f}: worst {worst:.4f}  bound {guarantee_factor(m, n):.4f}")
    xs = np.linspace(1e-3, 100, 200_000)
    print(f"the bound never exceeds {worst_case_factor_sweep(xs):.4f}")


def ptas():
    inst = gen.two_sided(2, 6, seed=8)
    for eps in (0.5, 0.2):
        res = solve_two_sided_ptas(inst, eps)
        print(f"\nPTAS eps={eps}: branch {res.diagnostics['branch']}, NSW {res.nsw:.4f}")
    print(f"optimum {exact_two_sided(inst).nsw:.4f}")


if __name__ == "__main__":
    one_instance()
    ratio_curve()
    ptas()
