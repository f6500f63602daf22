"""Selection pipeline for one task.

Pipeline flow:
1. Execute the pool and group candidates by result
2. Optionally resample (judge-gated) and execute the new pool
3. Pointwise-score the pool (modes that use it)
4. Collect pairwise votes across groups (r3 and listwise)
5. Score, order and refine the groups, pick the representative
6. Return the full SelectionTrace
"""

import asyncio
import logging
import random
import time
from typing import Optional

from ..agents.factory import Backends
from ..agents.pointwise_agent import assign_ranks
from ..core.models import Candidate, ExecGroup, PairVote, SelectionConfig, SelectionTrace, Task
from ..execution.grouping import group_candidates
from ..execution.runner import SqlExecutor
from .resample import run_resampling
from .scoring import cross_group_pairs, is_capped, rank_pool

logger = logging.getLogger(__name__)

FLAG_UNPARSEABLE_VOTE = "unparseable_vote"
FLAG_NO_VALID_GROUP = "no_valid_group"
FLAG_PAIR_CAP = "pair_cap_applied"

_VOTING_MODES = ("r3", "listwise")


def _needs_pointwise(config: SelectionConfig) -> bool:
    return config.mode in ("pointwise", "pointwise_avg") or (config.mode == "r3" and config.pointwise_enabled)


async def _attach_pointwise(task: Task, pool: list[Candidate], backends: Backends) -> list[Candidate]:
    """Score candidates lacking a raw score, then re-rank the whole pool by raw."""
    missing = [c for c in pool if c.pointwise is None]
    raw = {c.cand_idx: c.pointwise.raw for c in pool if c.pointwise is not None}
    if missing:
        raw.update(await backends.pointwise.raw_scores(task, missing))
    ranks = assign_ranks(raw.items())
    return [c.model_copy(update={"pointwise": ranks[c.cand_idx]}) for c in pool]


def vote_pairs(
    task_id: str,
    groups: list[ExecGroup],
    config: SelectionConfig,
    seed: int = 0,
) -> tuple[list[tuple[int, int]], bool]:
    """Cross-group candidate pairs to query, lower group_id side first.

    Returns the pairs and whether any group pair was capped.
    """
    pairs: list[tuple[int, int]] = []
    capped = False
    for gi, gj in cross_group_pairs(groups):
        cross = [(a, b) for a in gi.members for b in gj.members]
        if is_capped(gi, gj, config):
            rng = random.Random(f"{seed}:{task_id}:{gi.group_id}:{gj.group_id}")
            cross = sorted(rng.sample(cross, config.max_pairs_per_group_pair))
            capped = True
        pairs.extend(cross)
    return pairs, capped


async def collect_votes(
    task: Task,
    pool: list[Candidate],
    groups: list[ExecGroup],
    config: SelectionConfig,
    backends: Backends,
    seed: int = 0,
) -> tuple[list[PairVote], bool]:
    """Query the pairwise ranker on every cross-group pair (never within a group)."""
    by_idx = {c.cand_idx: c for c in pool}
    pairs, capped = vote_pairs(task.task_id, groups, config, seed)
    votes = await asyncio.gather(
        *(backends.pairwise.compare_pair(task, by_idx[a], by_idx[b], config.order_policy) for a, b in pairs)
    )
    return list(votes), capped


async def select(
    task: Task,
    pool: list[Candidate],
    config: SelectionConfig,
    backends: Backends,
    executor: Optional[SqlExecutor] = None,
    seed: int = 0,
) -> SelectionTrace:
    """
    Run the full selection pipeline on one task.

    Args:
        task: Task being solved
        pool: Initial candidate pool (cand_idx dense from 0)
        config: Selection configuration
        backends: Agents for every role
        executor: Shared SQL executor (a private one is created when omitted)
        seed: Seed for pair sampling under a pair cap

    Returns:
        Complete SelectionTrace

    Raises:
        BackendError: If a backend fails after retries
        ConfigurationError: If the task database is missing
    """
    if not pool:
        raise ValueError(f"task {task.task_id}: empty candidate pool")

    own_executor = executor is None
    executor = executor or SqlExecutor(config)
    timings: dict[str, float] = {}
    flags: list[str] = []
    started = time.perf_counter()

    def lap(stage: str, since: float) -> float:
        now = time.perf_counter()
        timings[stage] = round((now - since) * 1000.0, 3)
        return now

    try:
        mark = started
        pool = await executor.execute_pool(task.db_ref, list(pool))
        pool_before = tuple(pool)
        mark = lap("execute", mark)

        resample = await run_resampling(task, pool, config, backends, executor)
        pool = resample.pool
        flags.extend(resample.flags)
        mark = lap("resample", mark)

        groups = group_candidates(pool, config.float_tol) if config.mode != "pointwise" else []

        if _needs_pointwise(config) and (groups or config.mode == "pointwise"):
            pool = await _attach_pointwise(task, pool, backends)
        mark = lap("pointwise", mark)

        votes: list[PairVote] = []
        if config.mode in _VOTING_MODES and len(groups) > 1:
            votes, capped = await collect_votes(task, pool, groups, config, backends, seed)
            if capped:
                flags.append(FLAG_PAIR_CAP)
            if any(v.flagged for v in votes):
                flags.append(FLAG_UNPARSEABLE_VOTE)
        mark = lap("pairwise", mark)

        if config.mode != "pointwise" and not groups:
            logger.warning("[SELECT] %s: no candidate executed successfully", task.task_id)
            flags.append(FLAG_NO_VALID_GROUP)

        ranking = rank_pool(pool, votes, config, groups=groups if config.mode != "pointwise" else None)
        lap("score", mark)
    finally:
        if own_executor:
            executor.shutdown()

    timings["total"] = round((time.perf_counter() - started) * 1000.0, 3)
    chosen = next(c for c in pool if c.cand_idx == ranking.final_cand_idx)

    logger.info(
        "[SELECT] %s: %s picked cand %d from %d groups%s",
        task.task_id,
        config.mode,
        chosen.cand_idx,
        len(ranking.groups),
        " (resampled)" if resample.resampled else "",
    )

    return SelectionTrace(
        task_id=task.task_id,
        mode=config.mode,
        pool_before=pool_before,
        pool_after=tuple(pool),
        judge=resample.decision,
        resampled=resample.resampled,
        groups=tuple(ranking.groups),
        preferences=tuple(ranking.preferences),
        votes=tuple(votes),
        final_group_id=ranking.final_group_id,
        final_cand_idx=chosen.cand_idx,
        chosen_sql=chosen.sql,
        timings=timings,
        flags=tuple(flags),
        call_counts=backends.ledger.task_counts(task.task_id),
    )


def rescore(trace: SelectionTrace, config: SelectionConfig) -> SelectionTrace:
    """Replay scoring on a trace's recorded votes and pointwise scores.

    No backend is called, so the config may only change how existing signals
    are combined (tau, mode, final_tie_to_prime, pointwise_enabled).

    Raises:
        MissingVoteError: If the new config needs votes the trace lacks
        ValueError: If the new config needs pointwise scores the trace lacks
    """
    pool = list(trace.pool_after)
    ranking = rank_pool(pool, trace.votes, config)
    chosen = next(c for c in pool if c.cand_idx == ranking.final_cand_idx)
    return trace.model_copy(
        update={
            "mode": config.mode,
            "groups": tuple(ranking.groups),
            "preferences": tuple(ranking.preferences),
            "final_group_id": ranking.final_group_id,
            "final_cand_idx": chosen.cand_idx,
            "chosen_sql": chosen.sql,
        }
    )
