"""Base agent class shared by every ranker, judge and generator backend.

Holds the backend spec, the per-agent and shared concurrency gates and the
call ledger.
HTTP-backed agents go through `_complete`, which consults the response cache,
retries failed requests and records usage.
"""

import asyncio
import json
import logging
import os
import re
from abc import ABC
from contextlib import nullcontext
from typing import Optional

from ..config.backend_spec import BackendSpec
from ..config.settings import settings
from ..core.errors import BackendError
from ..utils.call_ledger import CallLedger, extract_usage_from_litellm_response
from ..utils.llm_client import get_completion_async, litellm_model_name
from ..utils.response_cache import ResponseCache, cache_key

logger = logging.getLogger(__name__)

_ANSWER_RE = re.compile(r"<answer>([\s\S]*?)(?:</answer>|$)", re.IGNORECASE)


class BaseAgent(ABC):
    """Common plumbing for all agents."""

    stage: str = "backend"

    def __init__(
        self,
        spec: Optional[BackendSpec] = None,
        ledger: Optional[CallLedger] = None,
        cache: Optional[ResponseCache] = None,
        retries: Optional[int] = None,
        gate: Optional[asyncio.Semaphore] = None,
    ):
        """
        Initialize the base agent.

        Args:
            spec: Backend description; defaults to a stub spec
            ledger: Shared call ledger (a private one is created when omitted)
            cache: Response cache for HTTP calls, or None to disable caching
            retries: Extra attempts after a failed HTTP request
            gate: Semaphore shared by every role, capping backend requests globally
        """
        self.spec = spec or BackendSpec()
        self.ledger = ledger if ledger is not None else CallLedger()
        self.cache = cache
        self.retries = settings.backend_retries if retries is None else retries
        self._semaphore = asyncio.Semaphore(self.spec.max_parallel)
        self._gate = gate

    async def _request(self, messages: list[dict]) -> tuple[str, int, int, float]:
        """One live chat-completions request -> (text, input_tokens, output_tokens, cost)."""
        api_key = os.environ.get(self.spec.api_key_env)
        text, response = await get_completion_async(
            model=litellm_model_name(self.spec.model_name or ""),
            messages=messages,
            max_tokens=self.spec.max_tokens,
            temperature=self.spec.temperature,
            api_base=self.spec.endpoint,
            api_key=api_key,
            timeout=settings.request_timeout_s,
            return_full_response=True,
        )
        input_tokens, output_tokens, cost = extract_usage_from_litellm_response(response)
        return text, input_tokens, output_tokens, cost

    async def _complete(
        self,
        messages: list[dict],
        stage: Optional[str] = None,
        seq: int = 0,
        attempt: int = 0,
    ) -> str:
        """Cached, retried, concurrency-limited completion.

        Args:
            messages: Rendered prompt
            stage: Ledger stage (defaults to the agent's stage)
            seq: Sequence number for multi-sample calls
            attempt: Parse-retry counter; part of the cache key so a retry is a fresh sample

        Raises:
            BackendError: If every attempt fails
        """
        stage = stage or self.stage
        key = cache_key(
            self.spec.cache_identity(),
            messages,
            {"temperature": self.spec.temperature, "max_tokens": self.spec.max_tokens},
            seq=seq * 1000 + attempt,
        )
        if self.cache is not None:
            cached = self.cache.get(key)
            if cached is not None:
                self.ledger.record_cache_hit(stage)
                return cached

        last_error: Optional[Exception] = None
        async with self._semaphore, self._gate or nullcontext():
            for try_no in range(self.retries + 1):
                try:
                    text, input_tokens, output_tokens, cost = await self._request(messages)
                except BackendError:
                    raise
                except Exception as e:
                    last_error = e
                    logger.warning(
                        "[%s] Request failed (attempt %d/%d): %s",
                        stage.upper(),
                        try_no + 1,
                        self.retries + 1,
                        e,
                    )
                    continue
                self.ledger.add_usage(stage, self.spec.model_name or "", input_tokens, output_tokens, cost)
                if self.cache is not None:
                    await self.cache.put(key, text)
                return text

        raise BackendError(stage, f"backend unreachable after {self.retries + 1} attempts: {last_error}")

    @staticmethod
    def _extract_answer(text: str) -> Optional[str]:
        """Content of the last <answer> block (an unterminated block runs to the end)."""
        matches = _ANSWER_RE.findall(text or "")
        return matches[-1].strip() if matches else None

    @staticmethod
    def _extract_json(text: str) -> Optional[dict | list]:
        """
        Extract and parse JSON from response text.

        Handles common cases:
        - Pure JSON response
        - JSON wrapped in markdown code blocks
        - JSON embedded in text

        Returns:
            Parsed JSON as dict/list, or None if parsing fails
        """
        if not text:
            return None

        # Try direct parse first
        try:
            return json.loads(text)
        except json.JSONDecodeError:
            pass

        # Try to find JSON in markdown code blocks
        json_patterns = [
            r"```json\s*([\s\S]*?)\s*```",
            r"```\s*([\s\S]*?)\s*```",
            r"\{[\s\S]*\}",
            r"\[[\s\S]*\]",
        ]

        for pattern in json_patterns:
            match = re.search(pattern, text)
            if match:
                try:
                    return json.loads(match.group(1) if "```" in pattern else match.group(0))
                except (json.JSONDecodeError, IndexError):
                    continue

        return None
