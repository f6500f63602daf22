"""Read-only SQLite execution with wall-clock timeouts.

Every call opens its own `mode=ro` connection with `query_only` set, so no
statement can modify the database file. Timeouts are enforced by a progress
handler that aborts the running statement once the deadline passes; row
materialization past `max_rows` is reported as a timeout.
"""

import asyncio
import logging
import sqlite3
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

from ..config.settings import settings
from ..core.errors import ConfigurationError
from ..core.models import Candidate, ExecOutcome, SelectionConfig
from .canon import canonicalize

logger = logging.getLogger(__name__)

# SQLite VM instructions between deadline checks
_PROGRESS_STEPS = 1000
_FETCH_BATCH = 1000


def _connect_read_only(db_ref: Path) -> sqlite3.Connection:
    path = Path(db_ref)
    if not path.is_file():
        raise ConfigurationError(f"database file not found: {path}")
    uri = f"{path.resolve().as_uri()}?mode=ro"
    conn = sqlite3.connect(uri, uri=True, check_same_thread=False)
    conn.execute("PRAGMA query_only = ON")
    return conn


def execute_sql(
    db_ref: Path,
    sql: str,
    timeout_ms: int = 30000,
    float_tol: float = 1e-6,
    max_rows: int = 100000,
    order_sensitive: bool = False,
) -> ExecOutcome:
    """Run one SQL string and canonicalize its result.

    Args:
        db_ref: SQLite database file
        sql: Query text
        timeout_ms: Wall-clock limit
        float_tol: Relative tolerance used by the fingerprint
        max_rows: Materialization cap; exceeding it counts as a timeout
        order_sensitive: Fingerprint rows in order instead of as a multiset

    Returns:
        ExecOutcome with status ok, sql_error or timeout

    Raises:
        ConfigurationError: If the database file does not exist
    """
    conn = _connect_read_only(db_ref)
    start = time.perf_counter()
    deadline = start + timeout_ms / 1000.0
    timed_out = False

    def _watchdog() -> int:
        nonlocal timed_out
        if time.perf_counter() > deadline:
            timed_out = True
            return 1
        return 0

    def _elapsed() -> float:
        return (time.perf_counter() - start) * 1000.0

    conn.set_progress_handler(_watchdog, _PROGRESS_STEPS)
    try:
        if not sql.strip():
            return ExecOutcome(status="sql_error", error_message="empty SQL", elapsed_ms=_elapsed())

        cursor = conn.execute(sql)
        if cursor.description is None:
            return ExecOutcome(
                status="sql_error",
                error_message="statement produced no result set",
                elapsed_ms=_elapsed(),
            )
        column_count = len(cursor.description)

        raw_rows: list[tuple] = []
        while True:
            batch = cursor.fetchmany(_FETCH_BATCH)
            if not batch:
                break
            raw_rows.extend(batch)
            if len(raw_rows) > max_rows:
                logger.debug("[EXEC] Row cap %d exceeded", max_rows)
                return ExecOutcome(
                    status="timeout",
                    error_message=f"row cap of {max_rows} exceeded",
                    elapsed_ms=_elapsed(),
                )
            if time.perf_counter() > deadline:
                timed_out = True
                break

        if timed_out:
            return ExecOutcome(
                status="timeout",
                error_message=f"exceeded {timeout_ms} ms",
                elapsed_ms=_elapsed(),
            )

        rows, digest = canonicalize(column_count, raw_rows, float_tol, order_sensitive)
        return ExecOutcome(
            status="ok",
            column_count=column_count,
            rows=rows,
            fingerprint=digest,
            elapsed_ms=_elapsed(),
        )

    except (sqlite3.Error, sqlite3.Warning) as e:
        if timed_out:
            return ExecOutcome(
                status="timeout",
                error_message=f"exceeded {timeout_ms} ms",
                elapsed_ms=_elapsed(),
            )
        return ExecOutcome(status="sql_error", error_message=str(e), elapsed_ms=_elapsed())
    finally:
        conn.close()


class SqlExecutor:
    """Runs candidate SQL on a bounded thread pool."""

    def __init__(self, config: SelectionConfig, max_workers: Optional[int] = None):
        self.config = config
        self._pool = ThreadPoolExecutor(max_workers=max_workers or settings.exec_workers)

    def run_sync(self, db_ref: Path, sql: str) -> ExecOutcome:
        return execute_sql(
            db_ref,
            sql,
            timeout_ms=self.config.exec_timeout_ms,
            float_tol=self.config.float_tol,
            max_rows=self.config.max_rows,
            order_sensitive=self.config.order_sensitive,
        )

    async def run(self, db_ref: Path, sql: str) -> ExecOutcome:
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(self._pool, self.run_sync, db_ref, sql)

    async def execute_pool(self, db_ref: Path, pool: list[Candidate]) -> list[Candidate]:
        """Attach outcomes to every candidate that lacks one; order is preserved."""
        if not Path(db_ref).is_file():
            raise ConfigurationError(f"database file not found: {db_ref}")

        pending = [c for c in pool if c.outcome is None]
        outcomes = await asyncio.gather(*(self.run(db_ref, c.sql) for c in pending))
        by_idx = {c.cand_idx: o for c, o in zip(pending, outcomes)}

        errors = sum(1 for o in outcomes if not o.ok)
        logger.info("[EXEC] Executed %d candidates (%d failed)", len(pending), errors)

        return [
            c.model_copy(update={"outcome": by_idx[c.cand_idx]}) if c.cand_idx in by_idx else c
            for c in pool
        ]

    def shutdown(self) -> None:
        self._pool.shutdown(wait=False)
