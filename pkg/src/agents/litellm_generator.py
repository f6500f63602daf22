"""LiteLLM-based Generator Agent.

Samples SQL candidates from an OpenAI-compatible chat endpoint using the
generation prompt. Each seq is its own cached request.
"""

import logging

from ..core.models import CandidatePass, Task
from ..execution.schema import describe_schema
from ._prompt_helpers import generation_messages
from .generator_agent import GeneratorAgent, generation_stage

logger = logging.getLogger(__name__)


class LiteLLMGeneratorAgent(GeneratorAgent):
    """Generator agent using LiteLLM."""

    async def _completion(self, task: Task, pass_: CandidatePass, seq: int) -> str:
        messages = generation_messages(task, describe_schema(task.db_ref))
        # Resampled seqs live in their own key space
        key_seq = seq if pass_ == "initial" else 1_000_000 + seq
        text = await self._complete(messages, stage=generation_stage(pass_), seq=key_seq)
        logger.debug("[GENERATE] %s %s#%d: %d chars", task.task_id, pass_, seq, len(text))
        return text
