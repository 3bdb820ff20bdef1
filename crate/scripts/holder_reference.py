"""Reference values for the node LP of the dual Hölder norm, solved by HiGHS.

Uses the unshifted formulation (f, g free), so it shares neither the variable
shift nor the solver with the Rust implementation.

    python3 scripts/holder_reference.py
"""

import numpy as np
from scipy.optimize import linprog

AUX_NODES = 8
AUX_REACH = 2.0


def nodes_with_aux(points, masses, dipoles, aux=AUX_NODES):
    merged = {}
    for p, m, d in zip(points, masses, dipoles):
        a, b = merged.get(p, (0.0, 0.0))
        merged[p] = (a + m, b + d)
    pts = sorted(p for p, (m, d) in merged.items() if m != 0.0 or d != 0.0)
    rows = [(p, *merged[p]) for p in pts]
    if rows and aux:
        lo, hi = pts[0], pts[-1]
        left = aux // 2
        right = aux - left
        rows += [(lo - AUX_REACH * j / left, 0.0, 0.0) for j in range(1, left + 1)]
        rows += [(hi + AUX_REACH * j / right, 0.0, 0.0) for j in range(1, right + 1)]
    rows.sort()
    return [r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows]


def holder_upper(points, masses, dipoles, alpha, aux=AUX_NODES):
    x, m, d = nodes_with_aux(points, masses, dipoles, aux)
    n = len(x)
    nv = 2 * n + 3
    a, b, c = 2 * n, 2 * n + 1, 2 * n + 2
    A, rhs = [], []

    def row(terms, r=0.0):
        v = np.zeros(nv)
        for j, coef in terms:
            v[j] += coef
        A.append(v)
        rhs.append(r)

    for k in range(n):
        row([(k, 1), (a, -1)])
        row([(k, -1), (a, -1)])
        row([(n + k, 1), (b, -1)])
        row([(n + k, -1), (b, -1)])
    for k in range(n):
        for l in range(n):
            if k == l:
                continue
            dx = x[l] - x[k]
            dist = abs(dx)
            if k < l:
                h = dist ** alpha
                row([(n + k, 1), (n + l, -1), (c, -h)])
                row([(n + k, -1), (n + l, 1), (c, -h)])
            kap = dist ** (1 + alpha) / (1 + alpha)
            row([(l, 1), (k, -1), (n + k, -dx), (c, -kap)])
            row([(l, -1), (k, 1), (n + k, dx), (c, -kap)])
    row([(a, 1), (b, 1), (c, 1)], 1.0)
    cost = np.zeros(nv)
    cost[:n] = -np.array(m)
    cost[n:2 * n] = -np.array(d)
    bounds = [(None, None)] * (2 * n) + [(0, None)] * 3
    res = linprog(cost, A_ub=np.array(A), b_ub=np.array(rhs), bounds=bounds, method="highs")
    assert res.status == 0, res.message
    return -res.fun


CASES = {
    "three_atoms": ([-0.3, 0.2, 0.9], [1.0, -0.5, -0.5], [0.0, 0.0, 0.0]),
    "mass_and_dipoles": ([0.0, 0.4], [0.3, -0.3], [1.0, -0.2]),
    "unit_dipole": ([0.0], [0.0], [1.0]),
    "close_pair": ([0.3, 0.31], [1.0, -1.0], [0.0, 0.0]),
    "signed_seven": (
        [-1.7, -1.05, -0.42, 0.13, 0.58, 1.21, 1.93],
        [0.8, -0.35, 0.61, -0.9, 0.22, 0.47, -0.85],
        [0.0] * 7,
    ),
}

if __name__ == "__main__":
    for name, (p, m, d) in CASES.items():
        for alpha in (0.25, 0.5, 1.0):
            print(f"{name} alpha={alpha}: {holder_upper(p, m, d, alpha):.16e}")
