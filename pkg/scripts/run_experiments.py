"""Run named experiments and write their CSV outputs.

    python3 scripts/run_experiments.py                 # all of them into ./out
    python3 scripts/run_experiments.py rough_grid --workers 4 --out results
"""

import argparse
import time

from fresnelsim.experiments import EXPERIMENTS, run_experiment


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("names", nargs="*", help=f"any of {', '.join(EXPERIMENTS)} (default: all)")
    p.add_argument("--out", default="out")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args()
    unknown = [n for n in args.names if n not in EXPERIMENTS]
    if unknown:
        p.error(f"unknown experiments {unknown}")
    for name in args.names or list(EXPERIMENTS):
        t0 = time.perf_counter()
        report = run_experiment(name, seed=args.seed, workers=args.workers)
        root = report.write(args.out)
        print(f"{name}: {len(report.rows)} rows -> {root} ({time.perf_counter() - t0:.1f} s)")


if __name__ == "__main__":
    main()
