"""Constrained policy optimization laboratory (native core bindings)."""

from ._core import (
    default_bridge_spec,
    default_config_json,
    gae,
    oracle_solve_ratio,
    run_experiment,
    solve_ratio,
    solver_fuzz,
    tabular_eval,
)

__all__ = [
    "default_bridge_spec",
    "default_config_json",
    "gae",
    "oracle_solve_ratio",
    "run_experiment",
    "solve_ratio",
    "solver_fuzz",
    "tabular_eval",
]
