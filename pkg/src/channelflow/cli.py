"""Command line: ``gen | validate | decompose | run | bench``.

Exit codes: 0 ok, 2 validation failure, 3 ratio certification failure,
4 a cap was exceeded (oracle size or per-stage step cap).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Any, Sequence

from .decomposition import BUILDERS, IDEAL, build, decomposition_report, validate_decomposition
from .dist_sim import HeightBelowMinimum, SimConfig
from .generate import HEIGHT_PROFILES, GenConfig, generate
from .model import LINE, TREE, InstanceError, ProblemInstance, validate_problem
from .oracle import DEFAULT_CAP, OracleCapExceeded
from .pipeline import ALGORITHMS, ModeMismatch, build_report, timed_run
from .primal_dual import StepCapExceeded

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_RATIO = 3
EXIT_CAP = 4


def _seed(value: int | None) -> int:
    if value is not None:
        return value
    return int(os.environ.get("CHANNELFLOW_SEED", "0"))


def _emit(data: Any) -> None:
    sys.stdout.write(json.dumps(data, sort_keys=True) + "\n")


def _load(path: str) -> tuple[ProblemInstance | None, dict | None]:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        return None, {"ok": False, "kind": "io", "message": str(exc)}
    bad = validate_problem(raw)
    if bad is not None:
        return None, {"ok": False, "kind": bad.kind, "message": bad.message}
    return ProblemInstance.from_dict(raw), None


def _add_gen_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kind", choices=(TREE, LINE), default=TREE)
    p.add_argument("--n", type=int, default=16, help="vertices (line: slots + 1)")
    p.add_argument("--m", type=int, default=8, help="demands, one per processor")
    p.add_argument("--r", type=int, default=2, help="networks or resources")
    p.add_argument("--heights", choices=HEIGHT_PROFILES, default="unit")
    p.add_argument("--pmin", type=int, default=1)
    p.add_argument("--pmax", type=int, default=16)
    p.add_argument("--max-access", type=int, default=None)
    p.add_argument("--max-rho", type=int, default=None)
    p.add_argument("--slack", type=int, default=3, help="line windows: extra slots beyond rho")


def _gen_config(args: argparse.Namespace, seed: int) -> GenConfig:
    return GenConfig(
        kind=args.kind, n=args.n, m=args.m, r=args.r, seed=seed, heights=args.heights,
        profit_min=args.pmin, profit_max=args.pmax, max_access=args.max_access,
        max_rho=args.max_rho, window_slack=args.slack,
    )


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--algo", choices=ALGORITHMS, default="dist-unit")
    p.add_argument("--epsilon", type=Fraction, default=Fraction(1, 10))
    p.add_argument("--hmin", type=Fraction, default=None, help="default: smallest narrow height")
    p.add_argument("--c-steps", type=float, default=2.0)
    p.add_argument("--decomposition", choices=sorted(BUILDERS), default=IDEAL)
    p.add_argument("--single-tree", action="store_true", help="seq-tree without alpha raises")
    p.add_argument("--oracle", action="store_true", help="compare against the exact optimum")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP, help="oracle instance cap")


def _sim_config(args: argparse.Namespace, seed: int) -> SimConfig:
    return SimConfig(
        seed=seed, epsilon=args.epsilon, c_steps=args.c_steps, h_min=args.hmin,
        decomposition=args.decomposition,
    )


def _execute(problem: ProblemInstance, args: argparse.Namespace, seed: int) -> tuple[dict, int]:
    try:
        outcome, wall = timed_run(problem, args.algo, _sim_config(args, seed), args.single_tree)
        report = build_report(outcome, args.epsilon, seed, args.oracle, args.cap, wall)
    except (OracleCapExceeded, StepCapExceeded) as exc:
        return {"ok": False, "kind": "cap", "message": str(exc)}, EXIT_CAP
    except (ModeMismatch, HeightBelowMinimum) as exc:
        return {"ok": False, "kind": "mode", "message": str(exc)}, EXIT_INVALID
    if not report["feasible"]:
        return report, EXIT_INVALID
    if args.oracle and not report["certified"]:
        return report, EXIT_RATIO
    return report, EXIT_OK


def cmd_gen(args: argparse.Namespace) -> int:
    try:
        problem = generate(_gen_config(args, _seed(args.seed)))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    text = problem.dumps() + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    problem, err = _load(args.instance)
    if err is not None:
        _emit(err)
        return EXIT_INVALID
    _emit({"ok": True, "mode": problem.mode, "n": problem.n, "m": problem.m, "r": problem.r})
    return EXIT_OK


def cmd_decompose(args: argparse.Namespace) -> int:
    problem, err = _load(args.instance)
    if err is not None:
        _emit(err)
        return EXIT_INVALID
    status = EXIT_OK
    for net in problem.networks:
        if args.network is not None and net.id != args.network:
            continue
        dec = build(net, args.kind)
        rep = decomposition_report(dec, net)
        bad = validate_decomposition(dec, net)
        out = dec.to_dict(rep)
        out["valid"] = bad is None
        if bad is not None:
            out["violation"] = bad.message
            status = EXIT_INVALID
        _emit(out)
    return status


def cmd_run(args: argparse.Namespace) -> int:
    problem, err = _load(args.instance)
    if err is not None:
        _emit(err)
        return EXIT_INVALID
    report, code = _execute(problem, args, _seed(args.seed))
    _emit(report)
    return code


CSV_FIELDS = ("seed", "algorithm", "profit", "optimum", "ratio", "lambda", "rounds", "messages", "wall_time", "exit")


def _bench_one(job: tuple[argparse.Namespace, int]) -> dict:
    args, seed = job
    problem = generate(_gen_config(args, seed))
    report, code = _execute(problem, args, seed)
    report["exit"] = code
    report.setdefault("seed", seed)
    return report


def _row(report: dict) -> dict:
    def value(key: str) -> Any:
        v = report.get(key)
        return v["value"] if isinstance(v, dict) else v

    stats = report.get("stats") or {}
    row = {k: value(k) for k in ("seed", "algorithm", "profit", "optimum", "ratio", "lambda", "wall_time", "exit")}
    row.update(rounds=stats.get("rounds"), messages=stats.get("messages"))
    return row


def cmd_bench(args: argparse.Namespace) -> int:
    base = _seed(args.seed)
    jobs = [(args, base + k) for k in range(args.count)]
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            reports = list(pool.map(_bench_one, jobs))
    else:
        reports = [_bench_one(j) for j in jobs]
    if args.csv:
        writer = csv.DictWriter(sys.stdout, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for r in reports:
            writer.writerow(_row(r))
    else:
        for r in reports:
            _emit(r)
    return max((r["exit"] for r in reports), default=EXIT_OK)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="channelflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a random instance")
    _add_gen_args(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", "--out", default=None)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("validate", help="check an instance file")
    p.add_argument("instance")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("decompose", help="dump tree decompositions")
    p.add_argument("instance")
    p.add_argument("--kind", choices=sorted(BUILDERS), default=IDEAL)
    p.add_argument("--network", type=int, default=None)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("run", help="run one algorithm and print a report")
    p.add_argument("instance")
    p.add_argument("--seed", type=int, default=None)
    _add_run_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="generate and run a batch of instances")
    _add_gen_args(p)
    _add_run_args(p)
    p.add_argument("--seed", type=int, default=None, help="first seed; runs use seed, seed+1, ...")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--csv", action="store_true", help="print a table instead of JSON lines")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InstanceError as exc:
        _emit({"ok": False, "kind": "instance", "message": str(exc)})
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
