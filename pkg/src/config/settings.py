"""Configuration settings for the selection engine."""

from pathlib import Path

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load .env file
load_dotenv()


class Settings(BaseSettings):
    """Process-level settings loaded from environment variables (GROUPSQL_*)."""

    model_config = SettingsConfigDict(env_prefix="GROUPSQL_", env_file=".env", extra="ignore")

    # Backends
    max_parallel: int = 8
    request_timeout_s: float = 120.0
    backend_retries: int = 2

    # Execution
    exec_workers: int = 8

    # Defaults for SelectionConfig.token_budget / judge_preview_rows
    token_budget: int = 8192
    judge_preview_rows: int = 5

    # Paths
    project_root: Path = Path(__file__).parent.parent.parent
    prompts_dir: Path = project_root / "prompts"
    output_dir: Path = project_root / "output" / "runs"
    cache_dir: Path = project_root / ".cache" / "responses"

    # Config files
    defaults_file: Path = project_root / "src" / "config" / "defaults.yaml"


# Global settings instance
settings = Settings()
