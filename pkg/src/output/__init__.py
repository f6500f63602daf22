"""Output formatting module."""

from .formatter import OutputFormatter, TraceWriter, canonical_json

__all__ = ["canonical_json", "OutputFormatter", "TraceWriter"]
