"""Benchmark dataset and candidate-pool ingestion.

Datasets use BIRD-style records:
    {"question_id": 0, "db_id": "toxicology", "question": "...",
     "evidence": "...", "SQL": "SELECT ..."}
as a JSON array or one object per line. Databases resolve under a db root as
<root>/<db_id>/<db_id>.sqlite (BIRD layout) or <root>/<db_id>.sqlite, or
through an explicit db_id -> path mapping.
"""

import json
import logging
from pathlib import Path
from typing import Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ..core.errors import ConfigurationError, DatasetError
from ..core.models import Task

logger = logging.getLogger(__name__)

DatasetFormat = Literal["auto", "json", "jsonl"]
_DB_SUFFIXES = (".sqlite", ".db", ".sqlite3")


class DatasetRecord(BaseModel):
    """One raw dataset entry before db resolution."""

    model_config = ConfigDict(extra="ignore", populate_by_name=True)

    question_id: Union[int, str]
    db_id: str = Field(min_length=1)
    question: str = Field(min_length=1)
    evidence: Optional[str] = None
    sql: Optional[str] = Field(default=None, alias="SQL")

    @field_validator("question")
    @classmethod
    def _not_blank(cls, v: str) -> str:
        if not v.strip():
            raise ValueError("question is blank")
        return v


def _read_records(path: Path, fmt: DatasetFormat) -> list:
    if not path.exists():
        raise ConfigurationError(f"dataset not found: {path}")
    text = path.read_text(encoding="utf-8")
    if fmt == "auto":
        fmt = "json" if text.lstrip().startswith("[") else "jsonl"

    if fmt == "json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise DatasetError([f"{path}: not valid JSON ({e})"]) from e
        if not isinstance(data, list):
            raise DatasetError([f"{path}: expected a JSON array of records"])
        return data

    records, errors = [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as e:
            errors.append(f"line {lineno}: not valid JSON ({e.msg})")
    if errors:
        raise DatasetError(errors)
    return records


def load_db_map(path: Path) -> dict[str, Path]:
    """Read a db_id -> SQLite path mapping (YAML or JSON); relative paths resolve against the file."""
    if not path.exists():
        raise ConfigurationError(f"db mapping not found: {path}")
    with open(path) as f:
        data = yaml.safe_load(f) or {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"db mapping {path} must be a mapping of db_id to path")
    return {str(k): (path.parent / str(v)) if not Path(str(v)).is_absolute() else Path(str(v)) for k, v in data.items()}


def resolve_db(db_root: Path, db_id: str) -> Optional[Path]:
    """First existing database file for db_id under db_root."""
    for suffix in _DB_SUFFIXES:
        for candidate in (db_root / db_id / f"{db_id}{suffix}", db_root / f"{db_id}{suffix}"):
            if candidate.is_file():
                return candidate
    return None


def load_dataset(
    path: Path,
    db_root: Optional[Path] = None,
    fmt: DatasetFormat = "auto",
    db_map: Optional[dict[str, Path]] = None,
) -> list[Task]:
    """
    Load benchmark tasks.

    Args:
        path: Dataset file (JSON array or JSONL)
        db_root: Directory holding the databases
        fmt: auto, json or jsonl
        db_map: Explicit db_id -> path mapping, consulted before db_root

    Returns:
        Tasks in file order

    Raises:
        DatasetError: Listing every invalid record (bad fields, unknown
            db_id, missing database file, duplicate question_id)
        ConfigurationError: If the file or db root does not exist
    """
    if db_root is None and not db_map:
        raise ConfigurationError("load_dataset needs a db root or a db mapping")
    if db_root is not None and not db_root.is_dir():
        raise ConfigurationError(f"db root is not a directory: {db_root}")

    raw = _read_records(path, fmt)
    tasks: list[Task] = []
    errors: list[str] = []
    seen: dict[str, int] = {}

    for index, item in enumerate(raw):
        if not isinstance(item, dict):
            errors.append(f"record {index}: expected an object")
            continue
        try:
            record = DatasetRecord.model_validate(item)
        except ValidationError as e:
            fields = ", ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors())
            errors.append(f"record {index}: {fields}")
            continue

        task_id = str(record.question_id)
        if task_id in seen:
            errors.append(f"record {index}: duplicate question_id {task_id!r} (first at record {seen[task_id]})")
            continue
        seen[task_id] = index

        db_path: Optional[Path] = None
        if db_map and record.db_id in db_map:
            db_path = db_map[record.db_id]
            if not db_path.is_file():
                errors.append(f"record {index}: database file for {record.db_id!r} missing: {db_path}")
                continue
        elif db_root is not None:
            db_path = resolve_db(db_root, record.db_id)
        if db_path is None:
            errors.append(f"record {index}: unknown db_id {record.db_id!r}")
            continue

        tasks.append(
            Task(
                task_id=task_id,
                question=record.question,
                evidence=record.evidence or "",
                db_ref=db_path,
                gold_sql=record.sql,
            )
        )

    if errors:
        raise DatasetError(errors)
    logger.info("[EVAL] Loaded %d tasks from %s", len(tasks), path)
    return tasks


def _pool_entries(value, where: str) -> list[str]:
    if not isinstance(value, list):
        raise DatasetError([f"{where}: pool must be a list"])
    sqls = []
    for i, entry in enumerate(value):
        sql = entry.get("sql") if isinstance(entry, dict) else entry
        if not isinstance(sql, str) or not sql.strip():
            raise DatasetError([f"{where}[{i}]: expected a non-empty SQL string"])
        sqls.append(sql)
    return sqls


def load_pools(path: Path) -> dict[str, list[str]]:
    """Pre-built pools: {task_id: [sql, ...]} or JSONL rows {"task_id": ..., "pool": [...]}."""
    if not path.exists():
        raise ConfigurationError(f"pool file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        data = None
    if isinstance(data, dict) and "task_id" not in data:
        return {str(k): _pool_entries(v, f"{path}:{k}") for k, v in data.items()}

    pools: dict[str, list[str]] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            task_id, pool = row["task_id"], row["pool"]
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise DatasetError([f"{path}:{lineno}: expected {{\"task_id\": ..., \"pool\": [...]}} ({e})"]) from e
        pools[str(task_id)] = _pool_entries(pool, f"{path}:{lineno}")
    return pools


def load_pool(path: Path) -> list[str]:
    """A single pool: a JSON list of SQL strings or of {"sql": ...} objects."""
    if not path.exists():
        raise ConfigurationError(f"pool file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DatasetError([f"{path}: not valid JSON ({e})"]) from e
    return _pool_entries(data, str(path))
