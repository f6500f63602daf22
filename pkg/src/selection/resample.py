"""Judge-gated resampling of the candidate pool.

When the judge decides the pool likely lacks a correct SQL (or always, or
when the pool is all errors / empty results), m fresh candidates are
generated and executed, and the n best by pointwise score replace the pool.
"""

import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional

from ..agents.factory import Backends
from ..agents.pointwise_agent import assign_ranks
from ..core.models import Candidate, JudgeDecision, SelectionConfig, Task
from ..execution.grouping import group_candidates
from ..execution.runner import SqlExecutor

logger = logging.getLogger(__name__)

FLAG_JUDGE_FALLBACK = "judge_fallback"
FLAG_JUDGE_BYPASSED = "judge_bypassed_uninformative_pool"
FLAG_SHORTFALL = "resample_generator_shortfall"


@dataclass
class ResampleResult:
    pool: list[Candidate]
    decision: Optional[JudgeDecision] = None
    resampled: bool = False
    flags: list[str] = field(default_factory=list)


def prune_top_n(cands: list[Candidate], scores: Mapping[int, float], n: int) -> list[Candidate]:
    """The n highest raw-scored candidates, best first; ties go to the lower seq."""
    ordered = sorted(cands, key=lambda c: (-scores[c.cand_idx], c.seq))
    return ordered[:n]


def judge_order(pool: list[Candidate], float_tol: float = 1e-6) -> list[Candidate]:
    """Pool as shown to the judge: members of larger result groups first, errors last."""
    by_idx = {c.cand_idx: c for c in pool}
    ordered = [by_idx[idx] for g in group_candidates(pool, float_tol) for idx in g.members]
    seen = {c.cand_idx for c in ordered}
    ordered.extend(c for c in pool if c.cand_idx not in seen)
    return ordered


def is_uninformative(pool: list[Candidate]) -> bool:
    """True when no candidate produced a non-empty result."""
    return all(c.outcome is None or not c.outcome.ok or c.outcome.row_count == 0 for c in pool)


def _reindex(cands: list[Candidate], start: int = 0) -> list[Candidate]:
    return [c.model_copy(update={"cand_idx": start + i}) for i, c in enumerate(cands)]


async def run_resampling(
    task: Task,
    pool: list[Candidate],
    config: SelectionConfig,
    backends: Backends,
    executor: SqlExecutor,
) -> ResampleResult:
    """
    Optionally replace an executed pool with a pruned resample.

    Args:
        task: Task being solved
        pool: Executed initial pool S
        config: resampling mode, n, m, prune and merge settings
        backends: Judge, generator and pointwise agents
        executor: Executor for the resampled batch

    Returns:
        ResampleResult with the pool to rank and the judge decision, if any
    """
    result = ResampleResult(pool=pool)
    if config.resampling == "off":
        return result

    if config.resampling == "agentic":
        if is_uninformative(pool):
            logger.info("[RESAMPLE] %s: no informative result in the pool, skipping the judge", task.task_id)
            result.flags.append(FLAG_JUDGE_BYPASSED)
        else:
            decision = await backends.judge.judge_pool(task, judge_order(pool, config.float_tol))
            result.decision = decision
            if decision.flagged:
                result.flags.append(FLAG_JUDGE_FALLBACK)
            if decision.likely_has_correct:
                return result

    batch = await backends.generator.generate(task, config.m, pass_="resampled", allow_partial=True)
    if len(batch) < config.n:
        logger.warning(
            "[RESAMPLE] %s: only %d of %d resampled candidates, keeping the initial pool",
            task.task_id,
            len(batch),
            config.n,
        )
        result.flags.append(FLAG_SHORTFALL)
        return result

    batch = await executor.execute_pool(task.db_ref, batch)

    if config.prune:
        raw = await backends.pointwise.raw_scores(task, batch)
        ranks = assign_ranks(raw.items())
        batch = [c.model_copy(update={"pointwise": ranks[c.cand_idx]}) for c in batch]
        kept = prune_top_n(batch, raw, config.n)
    else:
        kept = batch[: config.n]

    if config.resample_merge == "union":
        new_pool = list(pool) + _reindex(kept, start=len(pool))
    else:
        new_pool = _reindex(kept)

    logger.info(
        "[RESAMPLE] %s: %d generated, %d kept (%s)",
        task.task_id,
        len(batch),
        len(kept),
        config.resample_merge,
    )
    result.pool = new_pool
    result.resampled = True
    return result
