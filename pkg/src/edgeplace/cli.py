"""Command-line interface.

Subcommands: gen, solve, check, export, sweep, report.
Exit codes: 0 success, 1 verifier failure, 2 bad configuration or input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import baselines, rangr
from .domain import (
    load_scenario,
    load_solution,
    save_scenario,
    save_solution,
    validate_scenario,
)
from .harness import (
    ExperimentConfig,
    HarnessError,
    config_from_dict,
    format_summary,
    recompute_report,
    run_experiment,
    summarize,
    write_report,
)
from .ilp import SolveLimits, build_model, export_standard, solve_exact
from .pathing import dump_pathset, enumerate_paths
from .scenario import LOAD_LEVELS, PRESET_SHAPES, build_scenario
from .verifier import check_solution, objective


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edgeplace",
        description="Joint UPF and edge-application placement toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a scenario file")
    p_gen.add_argument("--topology", choices=sorted(PRESET_SHAPES), required=True)
    p_gen.add_argument("--load", type=int, required=True, help=f"load percent, e.g. {LOAD_LEVELS}")
    p_gen.add_argument("--seed", type=int, required=True)
    p_gen.add_argument("--cutoff", type=int, default=6, help="path hop cutoff")
    p_gen.add_argument("--out", required=True)

    p_solve = sub.add_parser("solve", help="solve a scenario file")
    p_solve.add_argument("--algo", choices=["rangr", "greedy", "topk", "exact"], default="rangr")
    p_solve.add_argument("--exact", action="store_true", help="shorthand for --algo exact")
    p_solve.add_argument("--scenario", required=True)
    p_solve.add_argument("--out", required=True, help="solution file to write")
    p_solve.add_argument("--time-limit", type=float, default=300.0)
    p_solve.add_argument("--reject-negative-margin-offload", action="store_true")
    p_solve.add_argument("--dump-paths", metavar="FILE", help="write the path set dump")

    p_check = sub.add_parser("check", help="verify a solution against a scenario")
    p_check.add_argument("--scenario", required=True)
    p_check.add_argument("--solution", required=True)

    p_export = sub.add_parser("export", help="export the ILP in a standard format")
    p_export.add_argument("--scenario", required=True)
    p_export.add_argument("--format", choices=["lp", "mps"], default="lp")
    p_export.add_argument("--out", required=True)
    p_export.add_argument("--symmetry", action="store_true", help="add symmetry-breaking rows")

    p_sweep = sub.add_parser("sweep", help="run an experiment sweep from a config file")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out", required=True, help="output directory")
    p_sweep.add_argument("--jobs", type=int, default=None)
    p_sweep.add_argument("--time-limit", type=float, default=None)

    p_report = sub.add_parser("report", help="recompute a report from stored solutions")
    p_report.add_argument("dir")
    return parser


def _cmd_gen(args) -> int:
    scenario = build_scenario(args.topology, args.load, args.seed, cutoff=args.cutoff)
    errors = validate_scenario(scenario)
    if errors:
        print("invalid scenario:", "; ".join(errors), file=sys.stderr)
        return 2
    save_scenario(scenario, args.out)
    print(f"wrote {args.out}: {len(scenario.demands)} demands, "
          f"{len(scenario.topology.nodes)} nodes")
    return 0


def _cmd_solve(args) -> int:
    scenario = load_scenario(args.scenario)
    errors = validate_scenario(scenario)
    if errors:
        print("invalid scenario:", "; ".join(errors), file=sys.stderr)
        return 2
    pathset = enumerate_paths(scenario.topology, scenario.path_cutoff)
    if args.dump_paths:
        Path(args.dump_paths).write_text(dump_pathset(pathset))
        print(f"wrote path dump to {args.dump_paths} ({len(pathset)} paths)")
    algo = "exact" if args.exact else args.algo
    status = ""
    if algo == "rangr":
        solution = rangr.run_rangr(
            scenario,
            pathset,
            reject_negative_margin_offload=args.reject_negative_margin_offload,
        )
    elif algo == "greedy":
        solution = baselines.run_greedy(scenario, pathset)
    elif algo == "topk":
        solution = baselines.run_topk(scenario, pathset)
    else:
        result = solve_exact(scenario, pathset, SolveLimits(time_s=args.time_limit))
        if result.solution is None:
            print(f"exact solver: {result.status.value}: {result.message}", file=sys.stderr)
            return 2
        solution = result.solution
        status = f" status={result.status.value} bound={result.best_bound} nodes={result.nodes}"
    report = check_solution(scenario, pathset, solution)
    if not report.feasible:
        print(f"{algo} produced an infeasible solution:\n{report}", file=sys.stderr)
        return 1
    save_solution(solution, args.out)
    print(f"wrote {args.out}: objective {objective(scenario, solution)}{status}")
    return 0


def _cmd_check(args) -> int:
    scenario = load_scenario(args.scenario)
    pathset = enumerate_paths(scenario.topology, scenario.path_cutoff)
    solution = load_solution(args.solution)
    report = check_solution(scenario, pathset, solution)
    print(report, end="")
    print(f"objective: {objective(scenario, solution)}")
    return 0 if report.feasible else 1


def _cmd_export(args) -> int:
    scenario = load_scenario(args.scenario)
    errors = validate_scenario(scenario)
    if errors:
        print("invalid scenario:", "; ".join(errors), file=sys.stderr)
        return 2
    pathset = enumerate_paths(scenario.topology, scenario.path_cutoff)
    model = build_model(scenario, pathset, symmetry=args.symmetry)
    text = export_standard(model, args.format)
    Path(args.out).write_text(text)
    print(
        f"wrote {args.out}: {model.num_variables} variables, {model.num_rows} rows"
    )
    return 0


def _cmd_sweep(args) -> int:
    try:
        data = json.loads(Path(args.config).read_text())
        config = config_from_dict(data)
    except (OSError, json.JSONDecodeError, HarnessError) as exc:
        print(f"bad config: {exc}", file=sys.stderr)
        return 2
    overrides = {"out_dir": args.out}
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    if args.time_limit is not None:
        overrides["time_limit_s"] = args.time_limit
    config = ExperimentConfig(
        topologies=config.topologies,
        loads=config.loads,
        seeds=config.seeds,
        algorithms=config.algorithms,
        cutoff=config.cutoff,
        time_limit_s=overrides.get("time_limit_s", config.time_limit_s),
        jobs=overrides.get("jobs", config.jobs),
        out_dir=overrides["out_dir"],
    )
    errors = config.validate()
    if errors:
        print("bad config:", "; ".join(errors), file=sys.stderr)
        return 2
    try:
        rows = run_experiment(config)
    except HarnessError as exc:
        print(f"sweep failed: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {config.out_dir}/report.csv ({len(rows)} rows)")
    print(format_summary(summarize(rows)), end="")
    return 0


def _cmd_report(args) -> int:
    rows = recompute_report(args.dir)
    write_report(rows, Path(args.dir) / "report.csv")
    print(f"rewrote {args.dir}/report.csv ({len(rows)} rows)")
    print(format_summary(summarize(rows)), end="")
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "solve": _cmd_solve,
    "check": _cmd_check,
    "export": _cmd_export,
    "sweep": _cmd_sweep,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    return _COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
