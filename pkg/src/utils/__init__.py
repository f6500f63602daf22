"""Utility modules for backend access and accounting."""

from .call_ledger import CallLedger
from .llm_client import get_completion_async
from .response_cache import ResponseCache, cache_key

__all__ = ["CallLedger", "ResponseCache", "cache_key", "get_completion_async"]
