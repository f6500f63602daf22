"""Pairwise ranker role: which of two candidates is more likely correct."""

import asyncio
import logging
import re
from abc import abstractmethod
from typing import Optional

from ..core.models import Candidate, OrderPolicy, PairVote, Task
from .base_agent import BaseAgent

logger = logging.getLogger(__name__)

_CHOICE_RE = re.compile(r"\b([AB])\b")
# One retry after an unparseable answer
_MAX_ATTEMPTS = 2


def parse_choice(text: str) -> Optional[str]:
    """"A" or "B" from the answer span, None when the span names neither or both."""
    span = BaseAgent._extract_answer(text)
    if span is None:
        span = (text or "").strip()
        if span.strip("\"'. ") not in ("A", "B"):
            return None
    choices = set(_CHOICE_RE.findall(span))
    if len(choices) != 1:
        return None
    return choices.pop()


class PairwiseAgent(BaseAgent):
    """Compares two candidates shown as A (first) and B (second)."""

    stage = "pairwise"

    @abstractmethod
    async def _ask(self, task: Task, first: Candidate, second: Candidate, attempt: int) -> str:
        """Raw backend answer for `first` shown as A and `second` as B."""

    async def prefer_first(self, task: Task, first: Candidate, second: Candidate) -> Optional[bool]:
        """True if the first-shown candidate wins; None if no attempt parsed."""
        for attempt in range(_MAX_ATTEMPTS):
            self.ledger.record_call(self.stage, task.task_id)
            choice = parse_choice(await self._ask(task, first, second, attempt))
            if choice is not None:
                return choice == "A"
            logger.debug(
                "[PAIRWISE] %s: unparseable answer for (%d, %d), attempt %d",
                task.task_id,
                first.cand_idx,
                second.cand_idx,
                attempt + 1,
            )
        logger.warning("[PAIRWISE] %s: giving up on pair (%d, %d)", task.task_id, first.cand_idx, second.cand_idx)
        return None

    async def compare_pair(
        self,
        task: Task,
        a: Candidate,
        b: Candidate,
        policy: OrderPolicy = "dual",
    ) -> PairVote:
        """Vote that `a` beats `b`.

        single: one call with a shown first; unparseable counts as 0.
        dual: both orders, vote = mean of the a-preferred indicators;
        an unparseable order makes the vote 0.5.
        """
        if a.cand_idx == b.cand_idx:
            raise ValueError("cannot compare a candidate with itself")

        if policy == "single":
            first_wins = await self.prefer_first(task, a, b)
            return PairVote(
                a=a.cand_idx,
                b=b.cand_idx,
                vote=1.0 if first_wins else 0.0,
                order_policy="single",
                flagged=first_wins is None,
            )

        forward, backward = await asyncio.gather(
            self.prefer_first(task, a, b),
            self.prefer_first(task, b, a),
        )
        if forward is None or backward is None:
            return PairVote(a=a.cand_idx, b=b.cand_idx, vote=0.5, order_policy="dual", flagged=True)
        vote = (float(forward) + (1.0 - float(backward))) / 2.0
        return PairVote(a=a.cand_idx, b=b.cand_idx, vote=vote, order_policy="dual")
