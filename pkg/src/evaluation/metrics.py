"""Aggregate metrics over selection traces."""

import math
from typing import Iterable, Optional, Sequence

import numpy as np

from ..core.models import Candidate, ExecOutcome, SelectionTrace
from ..execution.grouping import compare_results


def execution_accuracy(n_correct: int, n_included: int) -> float:
    """EX = 100 * correct / included, 0 when nothing is included."""
    if n_included == 0:
        return 0.0
    return round(100.0 * n_correct / n_included, 2)


def has_correct(
    pool: Iterable[Candidate],
    gold: ExecOutcome,
    float_tol: float = 1e-6,
    order_sensitive: bool = False,
) -> bool:
    return any(c.outcome is not None and compare_results(c.outcome, gold, float_tol, order_sensitive) for c in pool)


def ratio(numerator: int, denominator: int) -> Optional[float]:
    return round(numerator / denominator, 6) if denominator else None


def trigger_quality(triggered: Sequence[bool], lacks_correct: Sequence[bool]) -> tuple[Optional[float], Optional[float]]:
    """Precision and recall of resampling triggers against pools lacking a correct SQL."""
    tp = sum(1 for t, p in zip(triggered, lacks_correct) if t and p)
    return ratio(tp, sum(triggered)), ratio(tp, sum(lacks_correct))


def _zscore(values: np.ndarray) -> np.ndarray:
    std = values.std()
    if std == 0:
        return np.zeros_like(values)
    return (values - values.mean()) / std


def _within_group(values: dict[int, float], groups: Iterable[Sequence[int]]) -> Optional[float]:
    """Mean within-group variance of z-scored values over groups of size >= 2."""
    order = sorted(values)
    z = dict(zip(order, _zscore(np.array([values[i] for i in order], dtype=float))))
    variances = []
    for members in groups:
        if len(members) < 2:
            continue
        column = np.array([z[i] for i in members])
        # shift by the first member so identical values give exactly 0
        variances.append(float(np.var(column - column[0])))
    if not variances:
        return None
    return math.fsum(variances) / len(variances)


def group_score_variance(trace: SelectionTrace) -> Optional[float]:
    """Within-group variance when every member carries its group's rank as score."""
    if not trace.groups:
        return None
    values = {}
    for position, group in enumerate(trace.groups):
        for idx in group.members:
            values[idx] = float(-position)
    return _within_group(values, [g.members for g in trace.groups])


def raw_score_variance(trace: SelectionTrace) -> Optional[float]:
    """Within-group variance of the raw pointwise scores."""
    grouped = {idx for g in trace.groups for idx in g.members}
    values = {c.cand_idx: c.pointwise.raw for c in trace.pool_after if c.pointwise is not None and c.cand_idx in grouped}
    if not trace.groups or len(values) != len(grouped):
        return None
    return _within_group(values, [g.members for g in trace.groups])


def mean_of(values: Iterable[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    if not present:
        return None
    return round(math.fsum(present) / len(present), 6)
