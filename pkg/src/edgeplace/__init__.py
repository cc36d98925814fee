"""edgeplace: joint UPF-cluster and edge-application placement with demand
routing for operator edge networks.

Exact path: build the binary program, export it in LP/MPS text, or solve
it with the built-in branch-and-bound.  Heuristic path: the RanGr
ranked-greedy algorithm plus Greedy and Top-K baselines.  A scenario
generator and an experiment harness reproduce desk-scale comparisons.
"""

from .domain import (
    Demand,
    Disposition,
    EaType,
    Link,
    Oen,
    Scenario,
    Solution,
    Topology,
    UpfScalePolicy,
    load_scenario,
    load_solution,
    save_scenario,
    save_solution,
    validate_scenario,
    validate_topology,
)
from .pathing import PathSet, enumerate_paths
from .verifier import check_solution, objective
from .rangr import run_rangr
from .baselines import preinit, run_greedy, run_topk
from .scenario import build_scenario, generate_demands, make_preset_topology
from .ilp import build_model, enumerate_optimum, export_standard, solve_exact
from .harness import run_experiment, summarize, write_report

__version__ = "0.1.0"

__all__ = [
    "Demand",
    "Disposition",
    "EaType",
    "Link",
    "Oen",
    "Scenario",
    "Solution",
    "Topology",
    "UpfScalePolicy",
    "PathSet",
    "enumerate_paths",
    "check_solution",
    "objective",
    "run_rangr",
    "preinit",
    "run_greedy",
    "run_topk",
    "build_scenario",
    "generate_demands",
    "make_preset_topology",
    "build_model",
    "enumerate_optimum",
    "export_standard",
    "solve_exact",
    "run_experiment",
    "summarize",
    "write_report",
    "load_scenario",
    "load_solution",
    "save_scenario",
    "save_solution",
    "validate_scenario",
    "validate_topology",
    "run_experiment",
]
