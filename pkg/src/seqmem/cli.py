"""Command-line interface.

Exit status: 0 on success, 1 when ``verify`` finds imperfect memorization,
2 on usage, parameter or input-file errors. Data goes to ``--out`` (or
stdout), diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys

from seqmem import bounds
from seqmem.errors import StructurallyUnmemorizable
from seqmem.experiments import (
    CounterStream,
    ExperimentConfig,
    estimate_mgf,
    exhaustive_exact,
    monte_carlo,
    sample_bernoulli_matrix,
    write_trial_csv,
)
from seqmem.io import format_matrix, load_network, network_to_dict, read_matrix, save_network
from seqmem.multi_pass import (
    TrainConfig,
    build_shifted_system,
    float_rank,
    rank_is_full,
    sgd_train,
    write_residual_csv,
)
from seqmem.network import FiringMatrix, run_sequence, verify_memorization
from seqmem.single_pass import train_single_pass


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _add_bound_flags(p, L=True, N=True):
    if L:
        p.add_argument("--L", type=int, required=True)
    if N:
        p.add_argument("--N", type=int, required=True)
    p.add_argument("--p", type=float, default=bounds.FIGURE1_P)
    p.add_argument("--eta-tilde", type=float, default=bounds.FIGURE1_ETA_TILDE)


def _add_train_flags(p):
    p.add_argument("--schedule", choices=["kaczmarz", "constant"], default="kaczmarz")
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--max-epochs", type=int, default=500)
    p.add_argument("--tol", type=float, default=0.25)
    p.add_argument("--order", choices=["cyclic", "random"], default="random")


def _train_config(args, N: int, eta_tilde: float) -> TrainConfig:
    if args.max_epochs < 1:
        raise ValueError("--max-epochs must be >= 1")
    return TrainConfig(
        schedule=args.schedule,
        beta=args.beta,
        max_updates=args.max_epochs * N,
        tolerance=args.tol,
        seed=args.seed,
        order=args.order,
        eta_tilde=eta_tilde,
    )


def cmd_bound_eval(args) -> int:
    res = bounds.theorem_bound(bounds.BoundParams(args.L, args.N, args.p, args.eta_tilde))
    if args.format == "csv":
        _emit(args, "term_hebb,term_binom,total,clamped\n"
              f"{res.term_hebb!r},{res.term_binom!r},{res.total!r},{res.clamped!r}\n")
    else:
        _emit(args, _dump(res.to_dict()))
    return 0


def cmd_bound_invert(args) -> int:
    _emit(args, f"{bounds.min_L_for_target(args.N, args.p, args.eta_tilde, args.target)}\n")
    return 0


def cmd_bound_sweep(args) -> int:
    rows = bounds.figure1_sweep(args.N, args.target, args.p, args.eta_tilde)
    buf = io.StringIO()
    bounds.write_sweep_csv(buf, rows)
    _emit(args, buf.getvalue())
    return 0


def cmd_train(args) -> int:
    A = read_matrix(args.matrix)
    if args.mode == "single":
        net = train_single_pass(A, args.p, args.eta_tilde)
    else:
        log = []
        net = sgd_train(A, _train_config(args, A.N, args.eta_tilde), log=log)
        if args.residual_csv:
            with open(args.residual_csv, "w") as fh:
                write_residual_csv(fh, log)
    if args.out:
        save_network(args.out, net)
    else:
        sys.stdout.write(json.dumps(network_to_dict(net)) + "\n")
    return 0


def cmd_verify(args) -> int:
    net = load_network(args.net)
    A = read_matrix(args.matrix)
    rep = verify_memorization(net, A)
    _emit(args, _dump(rep.to_dict()))
    if not rep.perfect:
        print(f"imperfect: {len(rep.failures)} failing events, "
              f"{len(rep.inconsistencies)} inconsistent transitions", file=sys.stderr)
        return 1
    return 0


def cmd_run(args) -> int:
    net = load_network(args.net)
    A = read_matrix(args.matrix) if args.matrix else None
    if A is None:
        raise ValueError("--matrix is required to pick the initial column")
    init = A.column(args.init_col)
    traj = run_sequence(net, init, args.steps, args.policy, seed=args.seed, reference=A)
    if args.steps >= 2:
        _emit(args, format_matrix(FiringMatrix(traj.T)))
    else:
        _emit(args, f"{net.params.L} 1\n" + "".join(f"{b}\n" for b in traj[0]))
    return 0


def cmd_mc(args) -> int:
    mode = "single-pass" if args.mode == "single" else "multi-pass"
    train = _train_config(args, args.N, args.eta_tilde) if mode == "multi-pass" else None
    cfg = ExperimentConfig(
        L=args.L, N=args.N, p=args.p, eta_tilde=args.eta_tilde, mode=mode, train=train,
        trials=args.trials, seed=args.seed, workers=args.workers, confidence=args.confidence,
    )
    counts = []
    rep = monte_carlo(cfg, per_trial=counts)
    if args.trial_csv:
        with open(args.trial_csv, "w") as fh:
            write_trial_csv(fh, counts)
    _emit(args, rep.to_json() + "\n")
    return 0


def cmd_exhaustive(args) -> int:
    q = exhaustive_exact(args.L, args.N, args.p, args.eta_tilde)
    _emit(args, _dump({"L": args.L, "N": args.N, "p": args.p, "eta_tilde": args.eta_tilde, "probability": q}))
    return 0


def cmd_mgf(args) -> int:
    d = estimate_mgf(args.L, args.N, args.p, args.t, args.samples, args.seed)
    _emit(args, _dump(d.to_dict()))
    return 0


def cmd_capacity(args) -> int:
    s = bounds.capacity_summary(args.L, args.N, args.p, args.eta_tilde).to_dict()
    s["sufficient_N"] = bounds.sufficient_N(args.L, args.p, args.eta_tilde)
    _emit(args, _dump(s))
    return 0


def cmd_rank(args) -> int:
    system = build_shifted_system(read_matrix(args.matrix))
    if args.float:
        r = float_rank(system)
        out = {"N": system.N, "rank": r, "full_rank": r == system.N, "exact": False}
    else:
        full, r = rank_is_full(system, cap=args.cap)
        out = {"N": system.N, "rank": r, "full_rank": full, "exact": True}
    _emit(args, _dump(out))
    return 0


def cmd_sample(args) -> int:
    A = sample_bernoulli_matrix(args.L, args.N, args.p, CounterStream(args.seed, 0))
    _emit(args, format_matrix(A))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqmem", description="Memorization of random firing sequences.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound-eval", help="evaluate the failure-probability bound")
    _add_bound_flags(p)
    p.add_argument("--format", choices=["csv", "json"], default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bound_eval)

    p = sub.add_parser("bound-invert", help="smallest L reaching a target bound")
    _add_bound_flags(p, L=False)
    p.add_argument("--target", type=float, default=1e-3)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bound_invert)

    p = sub.add_parser("bound-sweep", help="required L over a grid of N and targets (CSV)")
    p.add_argument("--N", type=int, nargs="+", default=list(bounds.FIGURE1_N))
    p.add_argument("--target", type=float, nargs="+", default=list(bounds.FIGURE1_TARGETS))
    p.add_argument("--p", type=float, default=bounds.FIGURE1_P)
    p.add_argument("--eta-tilde", type=float, default=bounds.FIGURE1_ETA_TILDE)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bound_sweep)

    p = sub.add_parser("train", help="train a network on a matrix file")
    p.add_argument("--matrix", required=True)
    p.add_argument("--mode", choices=["single", "multi"], default="single")
    p.add_argument("--p", type=float, default=bounds.FIGURE1_P)
    p.add_argument("--eta-tilde", type=float, default=bounds.FIGURE1_ETA_TILDE)
    p.add_argument("--seed", type=int, default=0)
    _add_train_flags(p)
    p.add_argument("--residual-csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("verify", help="worst-case verification; exit 1 if imperfect")
    p.add_argument("--net", required=True)
    p.add_argument("--matrix", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("run", help="replay a trained network from a column of a matrix")
    p.add_argument("--net", required=True)
    p.add_argument("--matrix")
    p.add_argument("--init-col", type=int, default=0)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--policy", choices=["none", "adversarial", "sampled"], default="none")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("mc", help="Monte Carlo estimate of the failure probability")
    _add_bound_flags(p)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=int(os.environ.get("SEQMEM_WORKERS", "1")))
    p.add_argument("--confidence", type=float, default=0.99)
    p.add_argument("--mode", choices=["single", "multi"], default="single")
    _add_train_flags(p)
    p.add_argument("--trial-csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("exhaustive", help="exact failure probability by enumeration")
    _add_bound_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_exhaustive)

    p = sub.add_parser("mgf", help="sample the interference MGF next to its bound")
    p.add_argument("--L", type=int, default=10)
    p.add_argument("--N", type=int, default=5)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--t", type=float, default=0.1)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_mgf)

    p = sub.add_parser("capacity", help="capacity formulas")
    _add_bound_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("rank", help="exact rank of the shifted matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--float", action="store_true", help="floating-point rank estimate (no size cap)")
    p.add_argument("--cap", type=int, default=512)
    p.add_argument("--out")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("sample", help="write a random Bernoulli matrix file")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StructurallyUnmemorizable as exc:
        print(f"seqmem: structurally unmemorizable: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, IndexError) as exc:
        print(f"seqmem: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
