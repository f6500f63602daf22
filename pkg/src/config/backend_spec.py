"""Backend descriptions shared by config loading and agent construction."""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

BackendKind = Literal["http_llm", "stub"]
ROLES = ("pointwise", "pairwise", "judge", "generator")


class BackendSpec(BaseModel):
    """How to reach one ranker/judge/generator backend."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: BackendKind = "stub"
    endpoint: Optional[str] = None  # base URL of an OpenAI-compatible server
    model_name: Optional[str] = None
    temperature: float = 0.0
    max_parallel: int = Field(default=8, ge=1)
    api_key_env: str = "GROUPSQL_API_KEY"
    max_tokens: int = Field(default=4096, ge=1)

    @model_validator(mode="after")
    def _http_needs_target(self) -> "BackendSpec":
        if self.kind == "http_llm" and (not self.endpoint or not self.model_name):
            raise ValueError("http_llm backends need both endpoint and model_name")
        return self

    def cache_identity(self) -> dict:
        """Fields that change a backend's responses (used in cache keys)."""
        return {"kind": self.kind, "endpoint": self.endpoint, "model_name": self.model_name}
