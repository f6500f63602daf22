"""LiteLLM-based Judge Agent.

Renders the gatekeeper system and user prompts over the executed pool and
asks an OpenAI-compatible chat endpoint for the JSON decision.
"""

import logging
from typing import Optional, Sequence

from ..config.settings import settings
from ..core.models import Candidate, Task
from ..execution.schema import describe_schema
from ._prompt_helpers import TokenCounter, judge_messages, litellm_token_counter
from .judge_agent import JudgeAgent

logger = logging.getLogger(__name__)


class LiteLLMJudgeAgent(JudgeAgent):
    """Judge agent using LiteLLM."""

    def __init__(
        self,
        *args,
        preview_rows: Optional[int] = None,
        token_budget: Optional[int] = None,
        token_counter: Optional[TokenCounter] = None,
        **kwargs,
    ):
        super().__init__(*args, **kwargs)
        self.preview_rows = preview_rows or settings.judge_preview_rows
        self.token_budget = token_budget or settings.token_budget
        self.token_counter = token_counter or litellm_token_counter(self.spec.model_name)

    async def _ask(self, task: Task, pool: Sequence[Candidate], attempt: int) -> str:
        messages = judge_messages(
            task,
            describe_schema(task.db_ref),
            pool,
            preview_rows=self.preview_rows,
            token_budget=self.token_budget,
            token_counter=self.token_counter,
        )
        logger.info("[JUDGE] %s: calling %s with %d candidates", task.task_id, self.spec.model_name, len(pool))
        return await self._complete(messages, attempt=attempt)
