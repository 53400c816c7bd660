"""Max-norm discretization error of every problem under a dense solve.

Prints the error for J = 3..6 and the ratio between successive grids; a
second-order scheme gives ratios near 4 once the solution is resolved.
"""

import argparse

import numpy as np

from belief_solve.problems import DEFAULT_PARAMS, PROBLEM_NAMES, assemble


def max_error(name, J, params):
    P = assemble(name, J, params)
    x = np.linalg.solve(P.A.to_dense(), P.b)
    return float(np.max(np.abs(x - P.exact)))


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--J", type=int, nargs="+", default=[3, 4, 5, 6])
    args = p.parse_args()
    for name in PROBLEM_NAMES:
        params = DEFAULT_PARAMS[name]
        errs = [max_error(name, J, params) for J in args.J]
        ratios = " ".join(f"{a / b:6.2f}" for a, b in zip(errs, errs[1:]))
        print(f"{name:15s} {params!s:40s} errors {' '.join(f'{e:.3e}' for e in errs)}  ratios {ratios}")


if __name__ == "__main__":
    main()
