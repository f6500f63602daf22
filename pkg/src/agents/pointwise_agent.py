"""Pointwise ranker role: one order-independent score per candidate."""

import asyncio
import logging
from abc import abstractmethod
from typing import Iterable

from ..core.errors import BackendError, StubLookupError
from ..core.models import Candidate, PointwiseScore, Task
from .base_agent import BaseAgent

logger = logging.getLogger(__name__)


def assign_ranks(raw_scores: Iterable[tuple[int, float]]) -> dict[int, PointwiseScore]:
    """Rank (cand_idx, raw) pairs by descending raw; ties go to the lower cand_idx."""
    ordered = sorted(raw_scores, key=lambda item: (-item[1], item[0]))
    return {idx: PointwiseScore.at_rank(raw, rank) for rank, (idx, raw) in enumerate(ordered, start=1)}


class PointwiseAgent(BaseAgent):
    """Scores each candidate independently of the others."""

    stage = "pointwise"

    @abstractmethod
    async def _raw_score(self, task: Task, cand: Candidate) -> float:
        """Backend score for one candidate; higher means more likely correct."""

    async def _score_one(self, task: Task, cand: Candidate) -> float:
        self.ledger.record_call(self.stage, task.task_id)
        return await self._raw_score(task, cand)

    async def raw_scores(self, task: Task, pool: list[Candidate]) -> dict[int, float]:
        """Raw score per cand_idx.

        Raises:
            BackendError: Carrying every cand_idx whose score could not be obtained
        """
        if not pool:
            raise ValueError("cannot score an empty pool")
        results = await asyncio.gather(
            *(self._score_one(task, cand) for cand in pool),
            return_exceptions=True,
        )
        failed = {cand.cand_idx for cand, r in zip(pool, results) if isinstance(r, BaseException)}
        if failed:
            first = next(r for r in results if isinstance(r, BaseException))
            logger.error("[POINTWISE] %s: %d candidates failed: %s", task.task_id, len(failed), first)
            if not isinstance(first, BackendError):
                raise first
            error_type = StubLookupError if isinstance(first, StubLookupError) else BackendError
            raise error_type(self.stage, f"scoring failed for task {task.task_id}: {first}", failed)
        return {cand.cand_idx: float(r) for cand, r in zip(pool, results)}

    async def score_pool(self, task: Task, pool: list[Candidate]) -> list[PointwiseScore]:
        """PointwiseScores aligned with `pool` order."""
        ranks = assign_ranks((await self.raw_scores(task, pool)).items())
        return [ranks[cand.cand_idx] for cand in pool]
