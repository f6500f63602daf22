"""Database schema text for generation prompts."""

import sqlite3
from functools import lru_cache
from pathlib import Path

from ..core.errors import ConfigurationError


@lru_cache(maxsize=64)
def _describe(resolved: str) -> str:
    uri = f"{Path(resolved).as_uri()}?mode=ro"
    conn = sqlite3.connect(uri, uri=True)
    try:
        rows = conn.execute(
            "SELECT sql FROM sqlite_master "
            "WHERE type IN ('table', 'view') AND name NOT LIKE 'sqlite_%' AND sql IS NOT NULL "
            "ORDER BY name"
        ).fetchall()
    finally:
        conn.close()
    return "\n\n".join(row[0].strip() for row in rows)


def describe_schema(db_ref: Path) -> str:
    """CREATE statements of all user tables and views, in name order.

    Raises:
        ConfigurationError: If the database file does not exist
    """
    path = Path(db_ref)
    if not path.is_file():
        raise ConfigurationError(f"database file not found: {path}")
    return _describe(str(path.resolve()))
