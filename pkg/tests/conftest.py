"""Shared fixtures: SQLite databases built from data/fixtures, stub-backed runs."""

import sqlite3
from pathlib import Path

import pytest

from src.agents.factory import build_backends
from src.config.loader import load_run_config
from src.evaluation.dataset import load_dataset, load_pools

FIXTURES = Path(__file__).parent.parent / "data" / "fixtures"
STUB_FILE = FIXTURES / "stubs.json"
DB_NAMES = ("molecule", "shop", "school")


def build_db(script: Path, target: Path) -> Path:
    target.parent.mkdir(parents=True, exist_ok=True)
    conn = sqlite3.connect(target)
    try:
        conn.executescript(script.read_text(encoding="utf-8"))
        conn.commit()
    finally:
        conn.close()
    return target


@pytest.fixture
def db_root(tmp_path: Path) -> Path:
    """BIRD-style layout: <root>/<db_id>/<db_id>.sqlite."""
    root = tmp_path / "dbs"
    for name in DB_NAMES:
        build_db(FIXTURES / "db" / f"{name}.sql", root / name / f"{name}.sqlite")
    return root


@pytest.fixture
def molecule_db(db_root: Path) -> Path:
    return db_root / "molecule" / "molecule.sqlite"


@pytest.fixture
def shop_db(db_root: Path) -> Path:
    return db_root / "shop" / "shop.sqlite"


@pytest.fixture
def tasks(db_root: Path):
    return load_dataset(FIXTURES / "dev.json", db_root)


@pytest.fixture
def task_map(tasks):
    return {t.task_id: t for t in tasks}


@pytest.fixture
def pools():
    return load_pools(FIXTURES / "pools.json")


@pytest.fixture
def stub_config():
    """Factory for a stub-backed RunConfig with selection overrides."""

    def make(**selection):
        selection.setdefault("resampling", "off")
        return load_run_config(selection_overrides=selection, backend_kind="stub", stub_file=STUB_FILE)

    return make


@pytest.fixture
def stub_backends(stub_config):
    """Factory for fresh stub backends (own ledger) for a selection config."""

    def make(selection=None, **overrides):
        config = stub_config(**overrides)
        if selection is not None:
            config = config.model_copy(update={"selection": selection})
        return build_backends(config, use_cache=False)

    return make
