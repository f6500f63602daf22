"""Run configuration loading.

Values are resolved per field: CLI flag > config document > process settings
(GROUPSQL_TOKEN_BUDGET, GROUPSQL_JUDGE_PREVIEW_ROWS) > built-in default
(src/config/defaults.yaml). The document is YAML; JSON works as well.
"""

import logging
from pathlib import Path
from typing import Any, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .backend_spec import ROLES, BackendSpec
from ..core.errors import ConfigurationError
from ..core.models import SelectionConfig
from .settings import settings

logger = logging.getLogger(__name__)


class RunConfig(BaseModel):
    """Selection knobs plus one backend spec per role."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    selection: SelectionConfig = SelectionConfig()
    backends: dict[str, BackendSpec] = {role: BackendSpec() for role in ROLES}
    stub_file: Optional[Path] = None
    cache_dir: Optional[Path] = None
    # in-flight backend requests across all roles
    max_parallel: int = Field(default_factory=lambda: settings.max_parallel, ge=1)


def _read_document(path: Path) -> dict:
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        with open(path) as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigurationError(f"config file {path} is not valid YAML/JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigurationError(f"config file {path} must hold a mapping at the top level")
    return data


def _settings_layer() -> dict:
    """SelectionConfig fields that GROUPSQL_* process settings supply."""
    return {"token_budget": settings.token_budget, "judge_preview_rows": settings.judge_preview_rows}


def _merge(base: dict, override: dict) -> dict:
    """Recursive dict merge; override wins, None values in override are skipped."""
    merged = dict(base)
    for key, value in override.items():
        if value is None and key in merged:
            continue
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_run_config(
    path: Optional[Path] = None,
    selection_overrides: Optional[dict[str, Any]] = None,
    backend_kind: Optional[str] = None,
    stub_file: Optional[Path] = None,
    cache_dir: Optional[Path] = None,
    max_parallel: Optional[int] = None,
) -> RunConfig:
    """Build the effective RunConfig.

    Args:
        path: Optional user config document
        selection_overrides: SelectionConfig fields given as CLI flags (None = unset)
        backend_kind: "stub" or "http" applied to every role when given
        stub_file: Stub table path override
        cache_dir: Cache directory override
        max_parallel: Global cap on in-flight backend requests (all roles together)

    Raises:
        ConfigurationError: If the document or the merged values are invalid
    """
    document = _read_document(settings.defaults_file) if settings.defaults_file.exists() else {}
    document = _merge(document, {"selection": _settings_layer()})
    if path is not None:
        document = _merge(document, _read_document(path))

    flags: dict[str, Any] = {"selection": dict(selection_overrides or {})}
    if stub_file is not None:
        flags["stub_file"] = str(stub_file)
    if cache_dir is not None:
        flags["cache_dir"] = str(cache_dir)
    if max_parallel is not None:
        flags["max_parallel"] = max_parallel
    document = _merge(document, flags)

    backends = dict(document.get("backends") or {})
    for role in ROLES:
        spec = dict(backends.get(role) or {})
        if backend_kind is not None:
            spec["kind"] = "http_llm" if backend_kind == "http" else "stub"
        backends[role] = spec
    document["backends"] = backends

    try:
        config = RunConfig.model_validate(document)
    except ValidationError as e:
        raise ConfigurationError(f"invalid configuration: {e}") from e

    logger.debug("[CONFIG] Effective selection config: %s", config.selection.to_dict())
    return config
