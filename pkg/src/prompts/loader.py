"""Prompt template loader.

Loads prompt templates from the prompts/ directory and renders
them with provided variables using string.Template ($var syntax).

JSON braces in templates are preserved as-is; only $variable
placeholders are substituted. The single trailing newline every
template file ends with is not part of the prompt.
"""

from functools import lru_cache
from pathlib import Path
from string import Template

from ..config.settings import settings


@lru_cache(maxsize=32)
def _load_raw(name: str, prompts_dir: Path) -> str:
    """Load raw template text from file. Cached for performance."""
    path = prompts_dir / f"{name}.txt"
    if not path.exists():
        raise FileNotFoundError(f"Prompt template not found: {path}")
    text = path.read_text(encoding="utf-8")
    return text[:-1] if text.endswith("\n") else text


def render(name: str, **kwargs: str) -> str:
    """Load a prompt template and render it with the given variables.

    Args:
        name: Template filename without extension (e.g. "pairwise_user")
        **kwargs: Template variables to substitute

    Returns:
        Rendered prompt string

    Raises:
        FileNotFoundError: If template file doesn't exist
        KeyError: If a required placeholder has no value provided
    """
    template = Template(_load_raw(name, settings.prompts_dir))
    return template.substitute(**kwargs)
