"""Position-consistency reward for pairwise rankers.

A decision earns the base reward when it is correct in the original order,
plus lambda_c when it stays correct after the two candidates are swapped.
"""

import asyncio
import logging
from typing import Optional

from pydantic import Field, model_validator

from ..agents.pairwise_agent import PairwiseAgent
from ..core.models import Record, Task
from .pairs import PairRecord

logger = logging.getLogger(__name__)


class RewardRecord(Record):
    """Reward of one ranker decision pair."""

    decision_original_correct: bool
    decision_swapped_correct: bool
    r_base: int = Field(ge=0, le=1)
    r_c: int = Field(ge=0, le=1)
    r_total: float

    @model_validator(mode="after")
    def _consistency_needs_correctness(self) -> "RewardRecord":
        if self.r_c and not self.r_base:
            raise ValueError("r_c = 1 requires r_base = 1")
        return self


class PairScoreSummary(Record):
    """Aggregate ranker behaviour over exported pairs."""

    n_pairs: int
    binary_accuracy: Optional[float] = None  # original order decided correctly
    input_consistency: Optional[float] = None  # same candidate picked in both orders
    mean_reward: Optional[float] = None
    unparseable: int = 0


def compute_reward(orig_correct: bool, swapped_correct: bool, lambda_c: float = 0.5) -> RewardRecord:
    """
    Reward = r_base + lambda_c * r_c.

    r_base is 1 iff the original-order decision is correct; r_c is 1 iff it
    is correct in both orders. A consistently wrong ranker earns 0.
    """
    if lambda_c < 0:
        raise ValueError("lambda_c must be >= 0")
    r_base = 1 if orig_correct else 0
    r_c = 1 if orig_correct and swapped_correct else 0
    return RewardRecord(
        decision_original_correct=orig_correct,
        decision_swapped_correct=swapped_correct,
        r_base=r_base,
        r_c=r_c,
        r_total=r_base + lambda_c * r_c,
    )


async def score_pairs(
    tasks: dict[str, Task],
    pairs: list[PairRecord],
    pairwise: PairwiseAgent,
    lambda_c: float = 0.5,
) -> tuple[list[RewardRecord], PairScoreSummary]:
    """
    Ask the pairwise ranker about every pair in both orders and score it.

    The original order shows the positive candidate first. An unparseable
    answer counts as an incorrect decision.

    Returns:
        One RewardRecord per pair (input order) and the summary
    """

    async def one(pair: PairRecord) -> tuple[RewardRecord, bool, bool]:
        task = tasks[pair.task_id]
        original, swapped = await asyncio.gather(
            pairwise.prefer_first(task, pair.positive, pair.negative),
            pairwise.prefer_first(task, pair.negative, pair.positive),
        )
        orig_correct = original is True
        swapped_correct = swapped is False
        consistent = original is not None and swapped is not None and original != swapped
        unparseable = original is None or swapped is None
        return compute_reward(orig_correct, swapped_correct, lambda_c), consistent, unparseable

    results = await asyncio.gather(*(one(p) for p in pairs))
    records = [r for r, _, _ in results]
    n = len(records)
    summary = PairScoreSummary(
        n_pairs=n,
        binary_accuracy=round(sum(r.r_base for r in records) / n, 6) if n else None,
        input_consistency=round(sum(1 for _, c, _ in results if c) / n, 6) if n else None,
        mean_reward=round(sum(r.r_total for r in records) / n, 6) if n else None,
        unparseable=sum(1 for _, _, u in results if u),
    )
    logger.info(
        "[REWARD] %d pairs: accuracy=%s consistency=%s mean reward=%s",
        n,
        summary.binary_accuracy,
        summary.input_consistency,
        summary.mean_reward,
    )
    return records, summary
