"""Judge role: decides whether a pool likely already holds a correct SQL.

A malformed answer is retried once; after that the decision falls back to
likely_has_correct=True, which keeps the pool unchanged.
"""

import logging
from abc import abstractmethod
from typing import Optional, Sequence

from ..core.models import Candidate, JudgeDecision, Task
from .base_agent import BaseAgent

logger = logging.getLogger(__name__)

_MAX_ATTEMPTS = 2
FALLBACK_TAG = "PARSE_FALLBACK"


def _as_confidence(value) -> float:
    """Clamp to [0, 1]; null, missing or non-numeric confidence reads as 0.0."""
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return 0.0
    return min(1.0, max(0.0, float(value)))


def parse_decision(text: str, pool_ids: Optional[set[int]] = None) -> Optional[JudgeDecision]:
    """Parse the {"decision": {...}} answer; other top-level keys are dropped.

    Returns None when there is no decision object or likely_has_correct is
    not a boolean. Unknown fields may be null.
    """
    data = BaseAgent._extract_json(text)
    if not isinstance(data, dict) or not isinstance(data.get("decision"), dict):
        return None
    decision = data["decision"]

    likely = decision.get("likely_has_correct")
    if not isinstance(likely, bool):
        return None
    confidence = _as_confidence(decision.get("confidence"))

    tags = decision.get("reason_tags") or []
    if not isinstance(tags, list):
        tags = [tags]

    support = decision.get("support") or {}
    if not isinstance(support, dict):
        support = {}
    best = support.get("best_cand_idx")
    if isinstance(best, bool) or not isinstance(best, int):
        best = None
    if best is not None and pool_ids is not None and best not in pool_ids:
        logger.debug("[JUDGE] Dropping best_cand_idx %s outside the pool", best)
        best = None
    notes = support.get("notes")
    notes = str(notes)[:200] if notes else None

    return JudgeDecision(
        likely_has_correct=likely,
        confidence=confidence,
        reason_tags=tuple(str(t) for t in tags),
        best_cand_idx=best,
        notes=notes,
    )


class JudgeAgent(BaseAgent):
    """Audits a candidate pool before ranking."""

    stage = "judge"

    @abstractmethod
    async def _ask(self, task: Task, pool: Sequence[Candidate], attempt: int) -> str:
        """Raw backend answer for the pool, primary candidate first."""

    async def judge_pool(self, task: Task, pool: Sequence[Candidate]) -> JudgeDecision:
        """
        Judge the pool.

        Args:
            task: Task being solved
            pool: Executed candidates; the first one is treated as primary

        Returns:
            Parsed decision, or the flagged likely_has_correct=True fallback

        Raises:
            BackendError: If the backend is unreachable
        """
        pool_ids = {c.cand_idx for c in pool}
        for attempt in range(_MAX_ATTEMPTS):
            self.ledger.record_call(self.stage, task.task_id)
            decision = parse_decision(await self._ask(task, pool, attempt), pool_ids)
            if decision is not None:
                logger.info(
                    "[JUDGE] %s: likely_has_correct=%s confidence=%.2f",
                    task.task_id,
                    decision.likely_has_correct,
                    decision.confidence,
                )
                return decision
            logger.debug("[JUDGE] %s: malformed answer on attempt %d", task.task_id, attempt + 1)

        logger.warning("[JUDGE] %s: no parseable decision, keeping the pool", task.task_id)
        return JudgeDecision(
            likely_has_correct=True,
            confidence=0.0,
            reason_tags=(FALLBACK_TAG,),
            flagged=True,
        )
