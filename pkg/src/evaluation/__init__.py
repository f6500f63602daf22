"""Dataset ingestion, execution-accuracy evaluation and ablation sweeps."""

from .ablation import AblationReport, Grid, ablate, load_grid, parse_grid, tau_monotonicity
from .dataset import load_dataset, load_pool, load_pools
from .harness import EvalReport, TaskResult, evaluate, exclusion_reason

__all__ = [
    "ablate",
    "AblationReport",
    "EvalReport",
    "evaluate",
    "exclusion_reason",
    "Grid",
    "load_dataset",
    "load_grid",
    "load_pool",
    "load_pools",
    "parse_grid",
    "TaskResult",
    "tau_monotonicity",
]
