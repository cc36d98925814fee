"""Integer linear program for the placement problem: builder, standard-format
export, deterministic branch-and-bound exact solver, and an exhaustive
micro-instance oracle."""

from .model import (
    IlpModel,
    ModelBuildError,
    Row,
    Variable,
    assignment_from_solution,
    build_model,
    evaluate_assignment,
)
from .exportfmt import export_standard
from .exact import SolveLimits, SolveResult, SolveStatus, solve_exact
from .oracle import enumerate_optimum

__all__ = [
    "IlpModel",
    "ModelBuildError",
    "Row",
    "Variable",
    "assignment_from_solution",
    "build_model",
    "evaluate_assignment",
    "export_standard",
    "SolveLimits",
    "SolveResult",
    "SolveStatus",
    "solve_exact",
    "enumerate_optimum",
]
