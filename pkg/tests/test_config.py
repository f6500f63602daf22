"""Tests for run configuration loading and merge order."""

import pytest

from src.agents.factory import build_backends
from src.agents.litellm_pairwise import LiteLLMPairwiseAgent
from src.agents.stub_agents import StubPairwiseAgent
from src.config.loader import load_run_config
from src.config.settings import settings
from src.core.errors import ConfigurationError
from tests.conftest import STUB_FILE


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_built_in_defaults():
    config = load_run_config()
    assert config.selection.tau == 0.05
    assert config.selection.n == 32
    assert config.selection.resampling == "agentic"
    assert config.backends["generator"].temperature == 0.8
    assert all(spec.kind == "stub" for spec in config.backends.values())


def test_flags_beat_document_beat_defaults(tmp_path):
    doc = write(tmp_path / "run.yaml", "selection:\n  tau: 0.2\n  n: 8\nbackends:\n  judge:\n    max_parallel: 2\n")
    config = load_run_config(doc, selection_overrides={"tau": 0.3})
    assert config.selection.tau == 0.3
    assert config.selection.n == 8
    assert config.selection.m == 1024
    assert config.backends["judge"].max_parallel == 2
    assert config.backends["judge"].api_key_env == "GROUPSQL_API_KEY"


def test_json_document(tmp_path):
    doc = write(tmp_path / "run.json", '{"selection": {"mode": "fmv"}}')
    assert load_run_config(doc).selection.mode == "fmv"


def test_max_parallel_is_one_run_wide_cap():
    assert load_run_config().max_parallel == settings.max_parallel
    config = load_run_config(max_parallel=3)
    assert config.max_parallel == 3
    assert config.backends["generator"].max_parallel == 16


def test_process_settings_sit_between_defaults_and_document(tmp_path, monkeypatch):
    monkeypatch.setattr(settings, "token_budget", 4096)
    monkeypatch.setattr(settings, "judge_preview_rows", 3)
    config = load_run_config()
    assert (config.selection.token_budget, config.selection.judge_preview_rows) == (4096, 3)
    doc = write(tmp_path / "run.yaml", "selection:\n  token_budget: 2048\n")
    assert load_run_config(doc).selection.token_budget == 2048


@pytest.mark.parametrize(
    "text",
    [
        "selection: [1, 2",
        "- just a list\n",
        "selection:\n  tau: 2.0\n",
        "selection:\n  mode: borda\n",
        "unknown_section: {}\n",
        "backends:\n  judge:\n    kind: http_llm\n",
    ],
)
def test_invalid_documents(tmp_path, text):
    with pytest.raises(ConfigurationError):
        load_run_config(write(tmp_path / "bad.yaml", text))


def test_missing_document(tmp_path):
    with pytest.raises(ConfigurationError):
        load_run_config(tmp_path / "none.yaml")


def test_http_flag_needs_endpoints():
    with pytest.raises(ConfigurationError):
        load_run_config(backend_kind="http")


def test_mixed_backends(tmp_path):
    doc = write(
        tmp_path / "run.yaml",
        "backends:\n  pairwise:\n    kind: http_llm\n    endpoint: http://localhost:8000/v1\n    model_name: ranker\n",
    )
    config = load_run_config(doc, stub_file=STUB_FILE, cache_dir=tmp_path / "cache")
    backends = build_backends(config)
    assert isinstance(backends.pairwise, LiteLLMPairwiseAgent)
    assert backends.cache is not None
    assert backends.cache.path.parent == tmp_path / "cache"
    assert backends.pointwise.ledger is backends.ledger
    assert backends.pairwise._gate is backends.judge._gate


def test_stub_backends_need_a_table():
    with pytest.raises(ConfigurationError):
        build_backends(load_run_config())


def test_stub_backends():
    backends = build_backends(load_run_config(stub_file=STUB_FILE))
    assert isinstance(backends.pairwise, StubPairwiseAgent)
    assert backends.cache is None
