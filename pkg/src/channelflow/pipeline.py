"""Named algorithm pipelines and the report they produce."""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .decomposition import build, build_root_fixing, decomposition_report
from .dist_sim import DistResult, OverallResult, RoundStats, SimConfig, run_overall_height, run_unit
from .model import HEIGHT, LINE, TREE, UNIT, DemandInstance, ProblemInstance, Solution, check_feasible
from .oracle import DEFAULT_CAP, certify_ratio, exact_optimum
from .primal_dual import achieved_lambda, sequential_tree_solve

ALGORITHMS = ("dist-unit", "dist-height", "dist-line-unit", "dist-line-height", "seq-tree")


class ModeMismatch(ValueError):
    """The algorithm cannot run on this kind of instance."""


def certification_bound(algorithm: str, epsilon: Fraction, single_tree: bool = False) -> Fraction:
    """Ratio each algorithm is checked against when the oracle runs."""
    eps = Fraction(epsilon)
    return {
        "dist-unit": 7 + eps,
        "dist-height": 80 + 2 * eps,
        "dist-line-unit": 4 + eps,
        "dist-line-height": 23 + 2 * eps,
        "seq-tree": Fraction(2 if single_tree else 3),
    }[algorithm]


def instance_digest(problem: ProblemInstance) -> str:
    return hashlib.sha256(problem.dumps().encode()).hexdigest()


@dataclass
class RunOutcome:
    algorithm: str
    problem: ProblemInstance
    instances: list[DemandInstance]
    solution: Solution
    feasibility_mode: str
    lam: Fraction
    delta: int
    theta: int | None
    depth: int | None
    xi: dict[str, Fraction]
    stats: RoundStats | None
    raw: DistResult | OverallResult | Any
    extra: dict[str, Any] = field(default_factory=dict)


def _check_algorithm(problem: ProblemInstance, algorithm: str) -> None:
    if algorithm not in ALGORITHMS:
        raise ModeMismatch(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}")
    wants = LINE if "line" in algorithm else TREE
    if problem.mode != wants:
        raise ModeMismatch(f"{algorithm} needs a {wants} instance, got {problem.mode}")
    if algorithm in ("dist-unit", "dist-line-unit", "seq-tree") and not problem.is_unit_height:
        raise ModeMismatch(f"{algorithm} needs unit heights; use a height algorithm instead")


def _tree_shape(problem: ProblemInstance, kind: str) -> tuple[int | None, int | None]:
    if problem.mode != TREE:
        return None, None
    theta = depth = 0
    for net in problem.networks:
        rep = decomposition_report(build(net, kind), net)
        theta, depth = max(theta, rep.theta), max(depth, rep.depth)
    return theta, depth


def run_algorithm(
    problem: ProblemInstance,
    algorithm: str,
    config: SimConfig | None = None,
    single_tree: bool = False,
) -> RunOutcome:
    """Execute one named pipeline end to end (without the oracle)."""
    _check_algorithm(problem, algorithm)
    config = config or SimConfig()
    if algorithm == "seq-tree":
        res = sequential_tree_solve(problem, single_tree_variant=single_tree)
        depth = max(build_root_fixing(t, min(t.vertices)).height for t in problem.networks)
        lam = achieved_lambda(res.duals, res.instances, UNIT)
        return RunOutcome(
            algorithm, problem, res.instances, res.solution, UNIT, lam, 2, 1, depth, {}, None, res,
            {"steps": len(res.stack), "single_tree": single_tree},
        )
    theta, depth = _tree_shape(problem, config.decomposition)
    if algorithm in ("dist-unit", "dist-line-unit"):
        res = run_unit(problem, config)
        return RunOutcome(
            algorithm, problem, res.instances, res.solution, UNIT, res.lam, res.params.delta,
            theta, depth, {"unit": res.params.xi}, res.stats, res,
        )
    over = run_overall_height(problem, config)
    parts = [p for p in (over.wide, over.narrow) if p is not None]
    lam = min((p.lam for p in parts), default=Fraction(1))
    delta = max((p.params.delta for p in parts), default=0)
    xi = {}
    if over.wide is not None:
        xi["wide"] = over.wide.params.xi
    if over.narrow is not None:
        xi["narrow"] = over.narrow.params.xi
    return RunOutcome(
        algorithm, problem, over.instances, over.solution, HEIGHT, lam, delta, theta, depth, xi,
        over.stats, over, {"choice": over.choice, "h_min": over.h_min},
    )


def _frac(x: Fraction | None) -> Any:
    if x is None:
        return None
    return {"num": x.numerator, "den": x.denominator, "value": float(x)}


def build_report(
    outcome: RunOutcome,
    epsilon: Fraction,
    seed: int,
    oracle: bool = False,
    cap: int = DEFAULT_CAP,
    wall_time: float | None = None,
) -> dict[str, Any]:
    """RunReport as plain JSON-ready data. ``ratio`` only appears with the oracle."""
    feas = check_feasible(outcome.instances, outcome.solution, outcome.feasibility_mode, outcome.problem)
    report: dict[str, Any] = {
        "instance_digest": instance_digest(outcome.problem),
        "algorithm": outcome.algorithm,
        "mode": outcome.problem.mode,
        "heights": "unit" if outcome.problem.is_unit_height else "arbitrary",
        "epsilon": _frac(Fraction(epsilon)),
        "seed": seed,
        "profit": _frac(outcome.solution.profit),
        "selected": list(outcome.solution.selected),
        "feasible": feas.ok,
        "lambda": _frac(outcome.lam),
        "delta": outcome.delta,
        "xi": {k: _frac(v) for k, v in outcome.xi.items()},
        "theta": outcome.theta,
        "depth": outcome.depth,
        "stats": outcome.stats.to_dict() if outcome.stats is not None else None,
    }
    for k, v in outcome.extra.items():
        if k == "h_min":
            report[k] = _frac(v)
        elif k == "choice":
            report[k] = {str(t): side for t, side in sorted(v.items())}
        else:
            report[k] = v
    if oracle:
        opt = exact_optimum(outcome.instances, outcome.feasibility_mode, cap)
        single = outcome.extra.get("single_tree", False)
        bound = certification_bound(outcome.algorithm, Fraction(epsilon), single)
        report["optimum"] = _frac(opt.profit)
        report["oracle_nodes"] = opt.nodes
        ratio = opt.profit / outcome.solution.profit if outcome.solution.profit else None
        report["ratio"] = _frac(ratio) if opt.profit else _frac(Fraction(1))
        report["bound"] = _frac(bound)
        report["certified"] = certify_ratio(outcome.solution.profit, opt.profit, bound) is None
    if wall_time is not None:
        report["wall_time"] = wall_time
    return report


def timed_run(
    problem: ProblemInstance,
    algorithm: str,
    config: SimConfig,
    single_tree: bool = False,
) -> tuple[RunOutcome, float]:
    start = time.perf_counter()
    outcome = run_algorithm(problem, algorithm, config, single_tree)
    return outcome, time.perf_counter() - start

