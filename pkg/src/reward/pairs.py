"""Correct/incorrect pair export for ranker training data.

One positive (execution-matches gold) and one negative are drawn per task
from a single seeded RNG, in task order, so an export is reproducible byte
for byte.
"""

import asyncio
import logging
import random
from collections import Counter
from typing import Literal, Optional

from ..agents._prompt_helpers import Messages, TokenCounter, pairwise_messages
from ..agents.factory import Backends
from ..agents.pointwise_agent import assign_ranks
from ..core.models import Candidate, ExecOutcome, Record, SelectionConfig, Task
from ..execution.grouping import compare_results
from ..execution.runner import SqlExecutor
from ..execution.schema import describe_schema

logger = logging.getLogger(__name__)

NegativePolicy = Literal["random", "hard_top15"]
HARD_NEGATIVE_POOL = 15


class PairRecord(Record):
    """One training pair with both prompt orders pre-rendered."""

    task_id: str
    positive: Candidate
    negative: Candidate
    negative_source: NegativePolicy
    prompt_positive_first: Messages
    prompt_negative_first: Messages


def _hard_negatives(incorrect: list[Candidate]) -> list[Candidate]:
    missing = [c.cand_idx for c in incorrect if c.pointwise is None]
    if missing:
        raise ValueError(f"hard negatives need pointwise scores (missing for {missing})")
    ranked = sorted(incorrect, key=lambda c: (-c.pointwise.raw, c.cand_idx))
    return ranked[:HARD_NEGATIVE_POOL]


def build_pairs(
    tasks: list[Task],
    pools: dict[str, list[Candidate]],
    gold: dict[str, ExecOutcome],
    policy: NegativePolicy = "hard_top15",
    seed: int = 0,
    float_tol: float = 1e-6,
    order_sensitive: bool = False,
    token_budget: int = 8192,
    token_counter: Optional[TokenCounter] = None,
) -> tuple[list[PairRecord], dict[str, int]]:
    """
    Draw one correct/incorrect pair per task.

    Args:
        tasks: Tasks in export order
        pools: Executed candidates per task_id (pointwise scores needed for hard_top15)
        gold: Gold outcome per task_id
        policy: hard_top15 draws from the 15 best-scored incorrect candidates,
            random from all incorrect ones
        seed: RNG seed shared by the whole export
        float_tol: Tolerance for result comparison
        order_sensitive: Compare rows in order
        token_budget: Prompt budget for the rendered pairwise prompts
        token_counter: Token counter for truncation

    Returns:
        (pairs, skip counts by reason)
    """
    rng = random.Random(seed)
    pairs: list[PairRecord] = []
    skipped: Counter = Counter()

    for task in tasks:
        gold_outcome = gold.get(task.task_id)
        if gold_outcome is None or not gold_outcome.ok or gold_outcome.row_count == 0:
            skipped["no_gold_result"] += 1
            continue
        pool = pools.get(task.task_id, [])

        correct, incorrect = [], []
        for cand in pool:
            if cand.outcome is not None and compare_results(cand.outcome, gold_outcome, float_tol, order_sensitive):
                correct.append(cand)
            else:
                incorrect.append(cand)
        if not correct:
            skipped["no_correct"] += 1
            continue
        if not incorrect:
            skipped["no_incorrect"] += 1
            continue

        positive = rng.choice(correct)
        negatives = _hard_negatives(incorrect) if policy == "hard_top15" else incorrect
        negative = rng.choice(negatives)

        schema = describe_schema(task.db_ref)
        pairs.append(
            PairRecord(
                task_id=task.task_id,
                positive=positive,
                negative=negative,
                negative_source=policy,
                prompt_positive_first=pairwise_messages(
                    task, schema, positive, negative, token_budget, token_counter
                ),
                prompt_negative_first=pairwise_messages(
                    task, schema, negative, positive, token_budget, token_counter
                ),
            )
        )

    logger.info("[REWARD] Built %d pairs, skipped %s", len(pairs), dict(skipped))
    return pairs, dict(sorted(skipped.items()))


async def prepare_pools(
    tasks: list[Task],
    pools: dict[str, list[str]],
    config: SelectionConfig,
    backends: Backends,
    executor: SqlExecutor,
    score: bool = True,
) -> tuple[dict[str, list[Candidate]], dict[str, ExecOutcome]]:
    """Execute gold SQL and candidate pools, generating and scoring where needed.

    Tasks whose gold result is unusable get an empty pool and no backend calls.
    """

    async def one(task: Task) -> tuple[list[Candidate], ExecOutcome]:
        gold_outcome = await executor.run(task.db_ref, task.gold_sql or "")
        if not gold_outcome.ok or gold_outcome.row_count == 0:
            return [], gold_outcome
        if task.task_id in pools:
            cands = [Candidate(cand_idx=i, seq=i, sql=sql) for i, sql in enumerate(pools[task.task_id])]
        else:
            cands = await backends.generator.generate(task, config.n)
        cands = await executor.execute_pool(task.db_ref, cands)
        if score and cands:
            ranks = assign_ranks((await backends.pointwise.raw_scores(task, cands)).items())
            cands = [c.model_copy(update={"pointwise": ranks[c.cand_idx]}) for c in cands]
        return cands, gold_outcome

    results = await asyncio.gather(*(one(t) for t in tasks))
    return (
        {t.task_id: cands for t, (cands, _) in zip(tasks, results)},
        {t.task_id: gold_outcome for t, (_, gold_outcome) in zip(tasks, results)},
    )
