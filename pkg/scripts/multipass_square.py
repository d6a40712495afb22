"""Multi-pass training on square random matrices.

For each seeded instance: exact rank of the shifted system, randomized
Kaczmarz for a fixed epoch budget, then worst-case verification. Prints one
CSV row per instance.

    python scripts/multipass_square.py --n 64 --instances 100 --epochs 500
"""

import argparse
import csv
import sys
import time

from seqmem.experiments import CounterStream, sample_bernoulli_matrix
from seqmem.multi_pass import TrainConfig, build_shifted_system, rank_is_full, sgd_train
from seqmem.network import verify_memorization


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--instances", type=int, default=100)
    ap.add_argument("--epochs", type=int, default=500)
    ap.add_argument("--p", type=float, default=0.5)
    ap.add_argument("--eta-tilde", type=float, default=0.4)
    ap.add_argument("--tol", type=float, default=0.25)
    ap.add_argument("--order", choices=["cyclic", "random"], default="random")
    ap.add_argument("--seed", type=int, default=5)
    args = ap.parse_args()

    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["instance", "rank", "full_rank", "updates", "residual_max", "perfect", "seconds"])
    for s in range(args.instances):
        A = sample_bernoulli_matrix(args.n, args.n, args.p, CounterStream(args.seed, s))
        full, rank = rank_is_full(build_shifted_system(A))
        cfg = TrainConfig(max_updates=args.epochs * args.n, tolerance=args.tol, seed=s,
                          order=args.order, eta_tilde=args.eta_tilde)
        t0 = time.perf_counter()
        log = []
        net = sgd_train(A, cfg, log=log)
        perfect = verify_memorization(net, A).perfect
        w.writerow([s, rank, int(full), log[-1].update_index, f"{log[-1].residual_max:.6g}", int(perfect),
                    f"{time.perf_counter() - t0:.3f}"])
        sys.stdout.flush()


if __name__ == "__main__":
    main()
