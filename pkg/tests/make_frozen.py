"""Regenerate tests/data/frozen.json from the oracles (not a test).

Run once; the tests then compare the solver against these stored numbers.
"""

import json
import os

import numpy as np

from oracles import lambda_max_by_hand, lp_solve_inf

HERE = os.path.dirname(os.path.abspath(__file__))


def main():
    cases = []
    for seed in range(10):
        rng = np.random.default_rng(1000 + seed)
        m, n = rng.integers(3, 8), rng.integers(3, 9)
        d = rng.uniform(size=(m, n))
        lmax, ell = lambda_max_by_hand(d, "inf")
        lam = 0.3 * lmax
        _, obj = lp_solve_inf(d, lam)
        cases.append({"seed": 1000 + seed, "shape": [int(m), int(n)],
                      "lambda_max_inf": lmax, "l_star": ell,
                      "lambda": lam, "lp_objective": obj})
    path = os.path.join(HERE, "data", "frozen.json")
    with open(path, "w") as fh:
        json.dump({"inf_lp_cases": cases}, fh, indent=1)


if __name__ == "__main__":
    main()
