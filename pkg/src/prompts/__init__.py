"""Generation, ranking and judge prompt templates (prompts/*.txt)."""

from .loader import render

__all__ = ["render"]
