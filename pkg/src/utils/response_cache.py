"""Persistent backend response cache.

An append-only JSONL file of {"key": <sha256 hex>, "response": <text>}
records. The whole file is indexed on open; a line that fails to parse is
logged and ignored, so its key resolves as a miss and the next call appends
a fresh record.
"""

import asyncio
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Optional

logger = logging.getLogger(__name__)

CACHE_FILENAME = "responses.jsonl"


def cache_key(
    backend: dict[str, Any],
    messages: list[dict],
    params: dict[str, Any],
    seq: int = 0,
) -> str:
    """Content key over backend identity, rendered prompt, sampling params and sequence number."""
    payload = {"backend": backend, "messages": messages, "params": params, "seq": seq}
    encoded = json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(encoded.encode("utf-8")).hexdigest()


class ResponseCache:
    """Append-only response store with concurrent reads and serialized appends."""

    def __init__(self, cache_dir: Path):
        self.path = Path(cache_dir) / CACHE_FILENAME
        self._entries: dict[str, str] = {}
        self._lock = asyncio.Lock()
        self.hits = 0
        self.misses = 0
        self._load()

    def _load(self) -> None:
        if not self.path.exists():
            return
        corrupt = 0
        with open(self.path, encoding="utf-8") as f:
            for line_no, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                    key, response = record["key"], record["response"]
                    if not isinstance(key, str) or not isinstance(response, str):
                        raise TypeError("key and response must be strings")
                except (json.JSONDecodeError, KeyError, TypeError) as e:
                    corrupt += 1
                    logger.warning("[CACHE] Ignoring corrupt record at %s:%d (%s)", self.path, line_no, e)
                    continue
                self._entries[key] = response
        logger.debug("[CACHE] Loaded %d records (%d corrupt)", len(self._entries), corrupt)

    def get(self, key: str) -> Optional[str]:
        response = self._entries.get(key)
        if response is None:
            self.misses += 1
        else:
            self.hits += 1
        return response

    async def put(self, key: str, response: str) -> None:
        async with self._lock:
            if key in self._entries:
                return
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(json.dumps({"key": key, "response": response}, ensure_ascii=False) + "\n")
                f.flush()
            self._entries[key] = response

    def __len__(self) -> int:
        return len(self._entries)
