"""Experiment driver: (topology x load x seed x algorithm) sweeps, the
metrics behind the profit/utilization/placement/runtime comparisons, and
machine-readable reports.

Profit is always recomputed by the verifier from the produced solution,
never taken from an algorithm's own accounting, and every heuristic
solution is feasibility-checked before a row is recorded.  Runtime covers
the solve call only; scenario generation and path enumeration are shared
setup.  Solutions are persisted under content-addressed filenames so a
report can be rebuilt from disk without re-solving.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from statistics import mean, stdev
from typing import Optional

from . import baselines, rangr
from .domain import (
    OFFLOADED,
    PLACED,
    REJECTED,
    Scenario,
    Solution,
    solution_bytes,
    solution_from_dict,
)
from .ilp import SolveLimits, SolveStatus, solve_exact
from .pathing import PathSet, enumerate_paths
from .scenario import LOAD_LEVELS, PRESET_SHAPES, build_scenario
from .verifier import check_solution, objective

ALGORITHMS = ("rangr", "greedy", "topk", "exact")

CSV_HEADER = (
    "topology,load_pct,seed,algorithm,profit,cpu_util,placed,offloaded,"
    "rejected,oens_on,upf_replicas,runtime_ms"
)


class HarnessError(RuntimeError):
    """Raised when an algorithm emits an infeasible solution or the config
    references unknown presets or algorithms."""


@dataclass(frozen=True)
class MetricsRow:
    topology: str
    load_pct: int
    seed: int
    algorithm: str
    profit: int
    cpu_util: float
    placed: int
    offloaded: int
    rejected: int
    oens_on: int
    upf_replicas: int
    runtime_ms: float
    status: str = ""  # exact-solver rows carry the solver status
    solution_file: str = ""

    def csv_line(self) -> str:
        return (
            f"{self.topology},{self.load_pct},{self.seed},{self.algorithm},"
            f"{self.profit},{self.cpu_util:.6f},{self.placed},{self.offloaded},"
            f"{self.rejected},{self.oens_on},{self.upf_replicas},{self.runtime_ms:.3f}"
        )


@dataclass(frozen=True)
class ExperimentConfig:
    topologies: tuple[str, ...]
    loads: tuple[int, ...]
    seeds: tuple[int, ...]
    algorithms: tuple[str, ...]
    cutoff: int = 6
    time_limit_s: float = 300.0
    jobs: int = 1
    out_dir: Optional[str] = None

    def validate(self) -> list[str]:
        errors = []
        for t in self.topologies:
            if t not in PRESET_SHAPES:
                errors.append(f"unknown topology preset {t!r}")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                errors.append(f"unknown algorithm {a!r}")
        for load in self.loads:
            if load <= 0:
                errors.append(f"load must be positive, got {load}")
        if self.cutoff < 1:
            errors.append("cutoff must be >= 1")
        return errors


def config_from_dict(data: dict) -> ExperimentConfig:
    try:
        seeds = data.get("seeds", 100)
        if isinstance(seeds, int):
            seeds = list(range(1, seeds + 1))
        return ExperimentConfig(
            topologies=tuple(data.get("topologies", list(PRESET_SHAPES))),
            loads=tuple(data.get("loads", list(LOAD_LEVELS))),
            seeds=tuple(int(s) for s in seeds),
            algorithms=tuple(data.get("algorithms", ["rangr", "greedy", "topk"])),
            cutoff=int(data.get("cutoff", 6)),
            time_limit_s=float(data.get("time_limit_s", 300.0)),
            jobs=int(data.get("jobs", 1)),
            out_dir=data.get("out_dir"),
        )
    except (TypeError, ValueError) as exc:
        raise HarnessError(f"bad config: {exc}") from exc


def solve_with(
    algorithm: str,
    scenario: Scenario,
    pathset: PathSet,
    time_limit_s: float = 300.0,
) -> tuple[Solution, float, str]:
    """Run one algorithm; returns (solution, runtime seconds, status)."""
    if algorithm == "rangr":
        t0 = time.perf_counter()
        solution = rangr.run_rangr(scenario, pathset)
        return solution, time.perf_counter() - t0, ""
    if algorithm == "greedy":
        t0 = time.perf_counter()
        solution = baselines.run_greedy(scenario, pathset)
        return solution, time.perf_counter() - t0, ""
    if algorithm == "topk":
        t0 = time.perf_counter()
        solution = baselines.run_topk(scenario, pathset)
        return solution, time.perf_counter() - t0, ""
    if algorithm == "exact":
        t0 = time.perf_counter()
        result = solve_exact(scenario, pathset, SolveLimits(time_s=time_limit_s))
        elapsed = time.perf_counter() - t0
        if result.solution is None:
            raise HarnessError(f"exact solver failed: {result.message}")
        return result.solution, elapsed, result.status.value
    raise HarnessError(f"unknown algorithm {algorithm!r}")


def solution_metrics(scenario: Scenario, solution: Solution) -> dict:
    """Metric fields recomputable from a stored (scenario, solution) pair."""
    placed = offloaded = rejected = 0
    for d in scenario.demands:
        kind = solution.disposition[d.key].kind
        if kind == PLACED:
            placed += 1
        elif kind == OFFLOADED:
            offloaded += 1
        else:
            rejected += 1
    on_oens = [o for o in scenario.oens if solution.oen_on.get(o.node, False)]
    capacity = sum(o.cpu_capacity for o in on_oens)
    used = 0
    for o in on_oens:
        e = o.node
        used += scenario.upf_policy.cpu_for(solution.upf_scale.get(e, 0))
        used += sum(
            scenario.ea_by_id(i).idle_cpu for i, ee in solution.ea_deployed if ee == e
        )
    for d in scenario.demands:
        disp = solution.disposition[d.key]
        if disp.kind == PLACED and solution.oen_on.get(disp.oen, False):
            used += d.cpu_req
    return {
        "profit": objective(scenario, solution),
        "cpu_util": (used / capacity) if capacity else 0.0,
        "placed": placed,
        "offloaded": offloaded,
        "rejected": rejected,
        "oens_on": len(on_oens),
        "upf_replicas": sum(
            solution.upf_scale.get(o.node, 0) for o in on_oens
        ),
    }


_PATHSET_CACHE: dict[tuple[str, int], PathSet] = {}


def _preset_pathset(topology_name: str, cutoff: int) -> PathSet:
    key = (topology_name, cutoff)
    if key not in _PATHSET_CACHE:
        scenario = build_scenario(topology_name, 30, 1, cutoff=cutoff)
        _PATHSET_CACHE[key] = enumerate_paths(scenario.topology, cutoff)
    return _PATHSET_CACHE[key]


def run_one(
    topology_name: str,
    load_pct: int,
    seed: int,
    algorithm: str,
    cutoff: int = 6,
    time_limit_s: float = 300.0,
    out_dir: Optional[str] = None,
) -> MetricsRow:
    """Generate, solve, verify, and measure a single run."""
    scenario = build_scenario(topology_name, load_pct, seed, cutoff=cutoff)
    pathset = _preset_pathset(topology_name, cutoff)
    solution, elapsed, status = solve_with(algorithm, scenario, pathset, time_limit_s)
    report = check_solution(scenario, pathset, solution)
    if not report.feasible:
        raise HarnessError(
            f"{algorithm} produced an infeasible solution on "
            f"{topology_name}/load {load_pct}/seed {seed}:\n{report}"
        )
    solution_file = ""
    if out_dir:
        payload = solution_bytes(solution)
        digest = hashlib.sha256(payload).hexdigest()[:16]
        solutions_dir = Path(out_dir) / "solutions"
        solutions_dir.mkdir(parents=True, exist_ok=True)
        solution_file = f"solutions/{digest}.json"
        target = Path(out_dir) / solution_file
        if not target.exists():
            target.write_bytes(payload)
    metrics = solution_metrics(scenario, solution)
    return MetricsRow(
        topology=topology_name,
        load_pct=load_pct,
        seed=seed,
        algorithm=algorithm,
        runtime_ms=elapsed * 1000.0,
        status=status,
        solution_file=solution_file,
        **metrics,
    )


def _run_one_star(args) -> MetricsRow:
    return run_one(*args)


def run_experiment(config: ExperimentConfig) -> list[MetricsRow]:
    """One row per (topology, load, seed, algorithm); any verifier violation
    aborts the sweep loudly."""
    errors = config.validate()
    if errors:
        raise HarnessError("; ".join(errors))
    jobs = []
    for topology in config.topologies:
        for load in config.loads:
            for seed in config.seeds:
                for algorithm in config.algorithms:
                    jobs.append(
                        (
                            topology,
                            load,
                            seed,
                            algorithm,
                            config.cutoff,
                            config.time_limit_s,
                            config.out_dir,
                        )
                    )
    if config.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            rows = list(pool.map(_run_one_star, jobs, chunksize=8))
    else:
        rows = [_run_one_star(job) for job in jobs]
    rows.sort(key=lambda r: (r.topology, r.load_pct, r.seed, r.algorithm))
    if config.out_dir:
        index = [
            {**{k: getattr(r, k) for k in (
                "topology", "load_pct", "seed", "algorithm", "profit", "cpu_util",
                "placed", "offloaded", "rejected", "oens_on", "upf_replicas",
                "runtime_ms", "status", "solution_file")}}
            for r in rows
        ]
        out = Path(config.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "index.json").write_text(json.dumps(index, indent=2, sort_keys=True) + "\n")
        write_report(rows, out / "report.csv")
    return rows


def write_report(rows: list[MetricsRow], path) -> None:
    """CSV with a fixed schema, rows sorted, locale-independent formatting."""
    ordered = sorted(rows, key=lambda r: (r.topology, r.load_pct, r.seed, r.algorithm))
    lines = [CSV_HEADER]
    lines.extend(r.csv_line() for r in ordered)
    Path(path).write_text("\n".join(lines) + "\n")


def recompute_report(out_dir) -> list[MetricsRow]:
    """Rebuild metric rows from persisted solutions (no re-solving)."""
    out = Path(out_dir)
    index = json.loads((out / "index.json").read_text())
    rows = []
    for entry in index:
        scenario = build_scenario(entry["topology"], entry["load_pct"], entry["seed"])
        solution = solution_from_dict(
            json.loads((out / entry["solution_file"]).read_text())
        )
        metrics = solution_metrics(scenario, solution)
        rows.append(
            MetricsRow(
                topology=entry["topology"],
                load_pct=entry["load_pct"],
                seed=entry["seed"],
                algorithm=entry["algorithm"],
                runtime_ms=entry["runtime_ms"],
                status=entry.get("status", ""),
                solution_file=entry["solution_file"],
                **metrics,
            )
        )
    rows.sort(key=lambda r: (r.topology, r.load_pct, r.seed, r.algorithm))
    return rows


@dataclass(frozen=True)
class SummaryCell:
    topology: str
    load_pct: int
    algorithm: str
    n: int
    profit_mean: float
    profit_stdev: float
    cpu_util_mean: float
    placed_mean: float
    runtime_ms_mean: float
    deviation_from_exact: Optional[float]  # mean (exact - algo)/exact, None if n/a


def summarize(rows: list[MetricsRow]) -> list[SummaryCell]:
    """Per-(topology, load, algorithm) aggregates with deviation-from-exact
    on seeds where the exact solver proved optimality (cells without such
    seeds, or with zero exact profit, are marked n/a)."""
    if not rows:
        raise ValueError("summarize needs at least one row")
    exact_profit: dict[tuple[str, int, int], int] = {}
    for r in rows:
        if r.algorithm == "exact" and r.status == SolveStatus.OPTIMAL.value:
            exact_profit[(r.topology, r.load_pct, r.seed)] = r.profit
    cells: dict[tuple[str, int, str], list[MetricsRow]] = {}
    for r in rows:
        cells.setdefault((r.topology, r.load_pct, r.algorithm), []).append(r)
    out = []
    for key in sorted(cells):
        topology, load, algorithm = key
        group = cells[key]
        deviations = []
        for r in group:
            ref = exact_profit.get((topology, load, r.seed))
            if ref is not None and ref != 0:
                deviations.append((ref - r.profit) / ref)
        out.append(
            SummaryCell(
                topology=topology,
                load_pct=load,
                algorithm=algorithm,
                n=len(group),
                profit_mean=mean(r.profit for r in group),
                profit_stdev=stdev([r.profit for r in group]) if len(group) > 1 else 0.0,
                cpu_util_mean=mean(r.cpu_util for r in group),
                placed_mean=mean(r.placed for r in group),
                runtime_ms_mean=mean(r.runtime_ms for r in group),
                deviation_from_exact=mean(deviations) if deviations else None,
            )
        )
    return out


def format_summary(cells: list[SummaryCell]) -> str:
    header = (
        f"{'topology':<8} {'load%':>5} {'algorithm':<9} {'n':>4} "
        f"{'profit':>10} {'+/-':>8} {'util':>6} {'placed':>7} {'ms':>8} {'dev':>7}"
    )
    lines = [header, "-" * len(header)]
    for c in cells:
        dev = f"{c.deviation_from_exact:.4f}" if c.deviation_from_exact is not None else "n/a"
        lines.append(
            f"{c.topology:<8} {c.load_pct:>5} {c.algorithm:<9} {c.n:>4} "
            f"{c.profit_mean:>10.1f} {c.profit_stdev:>8.1f} {c.cpu_util_mean:>6.3f} "
            f"{c.placed_mean:>7.1f} {c.runtime_ms_mean:>8.2f} {dev:>7}"
        )
    return "\n".join(lines) + "\n"
