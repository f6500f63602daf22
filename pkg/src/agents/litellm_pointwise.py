"""LiteLLM-based pointwise ranker.

Chat endpoints have no scalar reward head, so the model is asked for a
correctness probability inside <answer> tags.
"""

import logging
import re
from typing import Optional

from ..config.settings import settings
from ..core.errors import BackendError
from ..core.models import Candidate, Task
from ..execution.schema import describe_schema
from ._prompt_helpers import pointwise_messages
from .pointwise_agent import PointwiseAgent

logger = logging.getLogger(__name__)

_NUMBER_RE = re.compile(r"[-+]?\d*\.?\d+(?:[eE][-+]?\d+)?")


def parse_score(text: str) -> Optional[float]:
    span = PointwiseAgent._extract_answer(text)
    match = _NUMBER_RE.search(span if span is not None else (text or ""))
    return float(match.group(0)) if match else None


class LiteLLMPointwiseAgent(PointwiseAgent):
    """Pointwise agent using LiteLLM."""

    def __init__(self, *args, preview_rows: Optional[int] = None, **kwargs):
        super().__init__(*args, **kwargs)
        self.preview_rows = preview_rows or settings.judge_preview_rows

    async def _raw_score(self, task: Task, cand: Candidate) -> float:
        messages = pointwise_messages(task, describe_schema(task.db_ref), cand, self.preview_rows)
        for attempt in range(2):
            score = parse_score(await self._complete(messages, attempt=attempt))
            if score is not None:
                return score
            logger.debug("[POINTWISE] %s: unparseable score for %d", task.task_id, cand.cand_idx)
        raise BackendError(self.stage, "no parseable score", {cand.cand_idx})
