"""LiteLLM-based pairwise ranker."""

from typing import Optional

from ..config.settings import settings
from ..core.models import Candidate, Task
from ..execution.schema import describe_schema
from ._prompt_helpers import TokenCounter, litellm_token_counter, pairwise_messages
from .pairwise_agent import PairwiseAgent


class LiteLLMPairwiseAgent(PairwiseAgent):
    """Pairwise agent using LiteLLM; the assistant turn is prefilled."""

    def __init__(
        self,
        *args,
        token_budget: Optional[int] = None,
        token_counter: Optional[TokenCounter] = None,
        **kwargs,
    ):
        super().__init__(*args, **kwargs)
        self.token_budget = token_budget or settings.token_budget
        self.token_counter = token_counter or litellm_token_counter(self.spec.model_name)

    async def _ask(self, task: Task, first: Candidate, second: Candidate, attempt: int) -> str:
        messages = pairwise_messages(
            task,
            describe_schema(task.db_ref),
            first,
            second,
            token_budget=self.token_budget,
            token_counter=self.token_counter,
        )
        return await self._complete(messages, attempt=attempt)
