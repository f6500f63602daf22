"""Group scoring, resampling and the per-task selection pipeline."""

from .pipeline import rescore, select
from .resample import prune_top_n, run_resampling
from .scoring import (
    decisive,
    final_select,
    group_preference,
    lexicographic_sort,
    listwise_scores,
    pick_representative,
    pointwise_utility,
    rank_pool,
)

__all__ = [
    "decisive",
    "final_select",
    "group_preference",
    "lexicographic_sort",
    "listwise_scores",
    "pick_representative",
    "pointwise_utility",
    "prune_top_n",
    "rank_pool",
    "rescore",
    "run_resampling",
    "select",
]
