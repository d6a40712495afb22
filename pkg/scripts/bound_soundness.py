"""Observed single-pass failure rates next to the analytic bound.

Runs the Monte Carlo estimator on a grid of (L, N) where the bound is below
one and prints rate, Clopper-Pearson interval and bound as CSV.

    python scripts/bound_soundness.py --trials 200
"""

import argparse
import csv
import os
import sys

from seqmem.bounds import BoundParams, theorem_bound
from seqmem.experiments import ExperimentConfig, monte_carlo

GRID = [(4000, 2), (6000, 3), (10000, 4), (20000, 6), (40000, 10)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--p", type=float, default=0.5)
    ap.add_argument("--eta-tilde", type=float, default=0.125)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=int(os.environ.get("SEQMEM_WORKERS", "1")))
    args = ap.parse_args()

    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["L", "N", "trials", "failures", "rate", "ci_low", "ci_high", "bound_total", "sound"])
    for L, N in GRID:
        if theorem_bound(BoundParams(L, N, args.p, args.eta_tilde)).total >= 1:
            continue
        rep = monte_carlo(ExperimentConfig(L, N, args.p, args.eta_tilde, trials=args.trials,
                                           seed=args.seed, workers=args.workers, confidence=0.999))
        w.writerow([L, N, rep.trials, rep.failures, rep.rate, f"{rep.ci_low:.4g}", f"{rep.ci_high:.4g}",
                    f"{rep.bound_total:.4g}", int(rep.ci_low <= rep.bound_total)])
        sys.stdout.flush()


if __name__ == "__main__":
    main()
