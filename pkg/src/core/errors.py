"""Exception types shared across the selection engine."""

from typing import Iterable, Optional


class GroupSqlError(Exception):
    """Base class for all engine errors."""


class ConfigurationError(GroupSqlError):
    """Invalid configuration, flags, or a database file that cannot be opened."""


class DatasetError(GroupSqlError):
    """One or more dataset records failed validation.

    Every bad record is listed, not just the first.
    """

    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__(f"{len(errors)} invalid dataset record(s):\n" + "\n".join(errors))


class BackendError(GroupSqlError):
    """A ranker/judge/generator backend failed after retries."""

    def __init__(self, stage: str, message: str, failed: Optional[Iterable[int]] = None):
        self.stage = stage
        self.failed = set(failed or ())
        detail = f" (cand_idx {sorted(self.failed)})" if self.failed else ""
        super().__init__(f"[{stage}] {message}{detail}")


class StubLookupError(BackendError):
    """A stub table has no entry for the requested key."""


class MissingVoteError(GroupSqlError):
    """Group aggregation needs a vote that was never collected."""

    def __init__(self, a: int, b: int):
        self.pair = (a, b)
        super().__init__(f"no vote recorded for pair ({a}, {b})")
