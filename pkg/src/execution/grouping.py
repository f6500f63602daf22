"""Execution-equivalence grouping and EX comparison."""

import logging

from ..core.models import Candidate, ExecGroup, ExecOutcome
from .canon import canonicalize, rows_match

logger = logging.getLogger(__name__)


def _same_result(a: ExecOutcome, b: ExecOutcome, float_tol: float) -> bool:
    return a.column_count == b.column_count and a.row_count == b.row_count and rows_match(a.rows, b.rows, float_tol)


def group_candidates(pool: list[Candidate], float_tol: float = 1e-6) -> list[ExecGroup]:
    """Partition ok-status candidates by result.

    Candidates with equal fingerprints share a group; fingerprint buckets
    whose rows still match within float_tol are merged, and the merged group
    keeps the fingerprint of its earliest bucket. Errors and timeouts belong
    to no group. Groups come back ordered by descending size, then ascending
    smallest member; group_id is the position in that order. The
    representative starts as the smallest member and is replaced once
    pointwise scores exist.

    Raises:
        ValueError: If a candidate has not been executed
    """
    buckets: dict[str, list[Candidate]] = {}
    for cand in sorted(pool, key=lambda c: c.cand_idx):
        if cand.outcome is None:
            raise ValueError(f"candidate {cand.cand_idx} has no execution outcome")
        if cand.outcome.ok:
            buckets.setdefault(cand.outcome.fingerprint, []).append(cand)

    merged: list[tuple[str, ExecOutcome, list[int]]] = []
    for fp, cands in buckets.items():
        outcome = cands[0].outcome
        idxs = [c.cand_idx for c in cands]
        home = next((m for m in merged if _same_result(outcome, m[1], float_tol)), None)
        if home is None:
            merged.append((fp, outcome, idxs))
        else:
            logger.debug("[EXEC] Merging bucket %s into %s within tolerance", fp[:12], home[0][:12])
            home[2].extend(idxs)

    ordered = sorted(merged, key=lambda m: (-len(m[2]), min(m[2])))
    groups = [
        ExecGroup(
            group_id=gid,
            fingerprint=fp,
            members=tuple(sorted(idxs)),
            size=len(idxs),
            representative=min(idxs),
        )
        for gid, (fp, _, idxs) in enumerate(ordered)
    ]

    logger.debug(
        "[EXEC] %d candidates -> %d groups %s",
        len(pool),
        len(groups),
        [g.size for g in groups],
    )
    return groups


def compare_results(
    pred: ExecOutcome,
    gold: ExecOutcome,
    float_tol: float = 1e-6,
    order_sensitive: bool = False,
) -> bool:
    """True iff pred executed and matches gold as (column count, row multiset).

    Both sides are re-canonicalized under the same float_tol. Equal
    fingerprints match outright; otherwise the ordered rows are compared cell
    by cell within float_tol.
    """
    if not pred.ok or not gold.ok:
        return False
    if pred.column_count != gold.column_count:
        return False
    if pred.row_count != gold.row_count:
        return False
    pred_rows, pred_fp = canonicalize(pred.column_count, pred.rows, float_tol, order_sensitive)
    gold_rows, gold_fp = canonicalize(gold.column_count, gold.rows, float_tol, order_sensitive)
    return pred_fp == gold_fp or rows_match(pred_rows, gold_rows, float_tol)
