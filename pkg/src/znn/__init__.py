"""Discretized zeroing neural networks for time-varying matrix problems.

Look-ahead difference formulas (discovery and catalog), matrix flows,
per-problem rate assemblies and the ZNN engine.
"""
from .core import Diverged, RunConfig, Trace, TraceRecord, ZnnState, run, step, warmup
from .flows import SamplingGrid, fov_flow, functional_flow, make_flow_set, replay_flow
from .formulas import (
    DifferenceFormula,
    FormulaNotFound,
    FormulaNotPresent,
    FormulaType,
    SearchConfig,
    catalog,
    discover_formula,
    formula_from_weights,
    is_convergent,
    lookup,
)
from .problems import PROBLEMS, fov_point, make_problem
from .tensor import kron, min_norm_solve, unvec, vec

__all__ = [
    "DifferenceFormula",
    "Diverged",
    "FormulaNotFound",
    "FormulaNotPresent",
    "FormulaType",
    "PROBLEMS",
    "RunConfig",
    "SamplingGrid",
    "SearchConfig",
    "Trace",
    "TraceRecord",
    "ZnnState",
    "catalog",
    "discover_formula",
    "formula_from_weights",
    "fov_flow",
    "fov_point",
    "functional_flow",
    "is_convergent",
    "kron",
    "lookup",
    "make_flow_set",
    "make_problem",
    "min_norm_solve",
    "replay_flow",
    "run",
    "step",
    "unvec",
    "vec",
    "warmup",
]

__version__ = "0.1.0"
