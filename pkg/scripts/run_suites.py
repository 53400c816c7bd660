"""Run benchmark tables and write CSV, markdown and residual histories.

    python3 scripts/run_suites.py --out results/            # every table
    python3 scripts/run_suites.py mixed stretched --out results/
"""

import argparse
import os

from belief_solve.suites import SUITE_NAMES, histories_csv, run_suite, to_csv, to_markdown


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("suites", nargs="*", help=f"any of {', '.join(SUITE_NAMES)}; all when omitted")
    p.add_argument("--out", default="results")
    args = p.parse_args()
    unknown = [s for s in args.suites if s not in SUITE_NAMES]
    if unknown:
        p.error(f"unknown suites {unknown}")
    os.makedirs(args.out, exist_ok=True)
    for name in args.suites or SUITE_NAMES:
        results = run_suite(name)
        table = to_markdown(results)
        print(f"## {name}\n\n{table}")
        base = os.path.join(args.out, name)
        for suffix, text in ((".csv", to_csv(results)), (".md", table),
                             ("_histories.csv", histories_csv(results))):
            with open(base + suffix, "w", newline="") as fh:
                fh.write(text)


if __name__ == "__main__":
    main()
