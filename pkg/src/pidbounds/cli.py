"""Command-line interface.

Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys

import numpy as np

from .attacks import AttackConfig, AttackKind
from .classic import InterventionConfig
from .dataset import read_jsonl, write_jsonl
from .errors import ContractError, DatasetValidationError, DegenerateDistributionError, QuadratureError
from .estimator import DEFAULT_SAMPLES
from .oracle_check import run_oracle_check
from .report import (
    METRICS,
    SWEEP_COLUMNS,
    EvaluationRequest,
    evaluate,
    format_cell,
    sweep,
    write_csv,
    write_report,
)
from .synth import KINDS, SyntheticSpec, synthesize
from .toy import ToyConfig, toy_attacked_pid, toy_scores

log = logging.getLogger("pidbounds")

TOY_COLUMNS = ("alpha", "mig", "unibound", "r", "c")


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _metrics(text):
    return tuple(m.strip() for m in text.split(",") if m.strip())


def _add_eval_args(p):
    p.add_argument("--dataset", required=True, help="JSON-lines dataset file")
    p.add_argument("--out", required=True, help="output path")
    p.add_argument("--metrics", type=_metrics, default=METRICS, help="comma-separated subset of " + ",".join(METRICS))
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES, help="Monte-Carlo sample size M")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--attack", choices=[k.value for k in AttackKind])
    p.add_argument("--mixing", choices=["identity", "reflection"], default="reflection")
    p.add_argument("--inner-subsample", type=int, default=None, help="subsample mixture components (biased)")
    p.add_argument("--normalizer", choices=["empirical", "gaussian"], default="empirical")
    p.add_argument("--pairs-per-vote", type=int, default=64)
    p.add_argument("--train-votes", type=int, default=800)
    p.add_argument("--test-votes", type=int, default=200)


def _request(args, alpha):
    attack = None
    if args.attack:
        attack = AttackConfig(AttackKind(args.attack), alpha, args.mixing)
    return EvaluationRequest(
        metrics=args.metrics,
        samples=args.samples,
        seed=args.seed,
        attack=attack,
        inner_subsample=args.inner_subsample,
        normalizer=args.normalizer,
        intervention=InterventionConfig(args.pairs_per_vote, args.train_votes, args.test_votes, args.seed),
        dataset_path=args.dataset,
    )


def cmd_evaluate(args):
    dataset = read_jsonl(args.dataset)
    report = evaluate(dataset, _request(args, args.alpha))
    write_report(report, args.out)
    for w in report["warnings"]:
        log.warning(w)
    print(json.dumps({k: v["value"] for k, v in report["scores"].items()}))
    return 0


def cmd_sweep(args):
    if not args.attack:
        raise ContractError("sweep requires --attack")
    dataset = read_jsonl(args.dataset)
    rows, _ = sweep(dataset, _request(args, 0.0), args.alphas)
    write_csv(rows, SWEEP_COLUMNS, args.out)
    return 0


def cmd_synthesize(args):
    spec = SyntheticSpec(tuple(args.cardinalities), args.latents, args.sigma, args.kind)
    write_jsonl(synthesize(spec), args.out)
    return 0


def cmd_toy(args):
    attack = None if args.attack == "none" else AttackKind(args.attack)
    rows = []
    for alpha in args.alphas:
        cfg = ToyConfig(args.K, args.sigma, alpha, attack, not args.raw)
        s = toy_scores(cfg)
        pid = toy_attacked_pid(cfg)
        rows.append((alpha, s["mig"], s["unibound"], pid["R"], pid["C"]))
    if args.out == "-":
        w = csv.writer(sys.stdout)
        w.writerow(TOY_COLUMNS)
        w.writerows([[format_cell(x) for x in r] for r in rows])
    else:
        write_csv(rows, TOY_COLUMNS, args.out)
    return 0


def cmd_oracle_check(args):
    results = run_oracle_check(seed=args.seed)
    failed = 0
    for group, failures in results.items():
        status = "PASS" if not failures else f"FAIL ({len(failures)})"
        print(f"{group:10s} {status}")
        for f in failures:
            print(f"  {f}")
        failed += len(failures)
    return 0 if not failed else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="pidbounds", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="compute metrics for a dataset")
    _add_eval_args(p)
    p.add_argument("--alpha", type=float, default=0.0, help="attack strength")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="metrics versus attack strength (CSV)")
    _add_eval_args(p)
    p.add_argument("--alphas", type=_floats, default=[0, 0.5, 1, 2, 5, 10])
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synthesize", help="write a synthetic factorial dataset")
    p.add_argument("--cardinalities", type=_ints, required=True, help="e.g. 3,6,40")
    p.add_argument("--latents", type=int, required=True, help="number of latent slots L")
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--kind", choices=KINDS, default="ideal")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("toy", help="closed-form toy-model scores over an alpha grid (CSV)")
    p.add_argument("--K", type=int, default=5)
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--attack", choices=["none", "red", "syn"], default="red")
    p.add_argument("--alphas", type=_floats, default=[0, 0.5, 1, 2, 5, 10])
    p.add_argument("--raw", action="store_true", help="do not normalize by 0.5 log(2 pi e)")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_toy)

    p = sub.add_parser("oracle-check", help="run the exact-reference self checks")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except DatasetValidationError as e:
        for p in e.problems:
            print(f"error: {p}", file=sys.stderr)
        return 1
    except (DegenerateDistributionError, QuadratureError, FloatingPointError, np.linalg.LinAlgError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 2
    except (ContractError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
