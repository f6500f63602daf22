"""SQL execution, result fingerprinting and grouping."""

from .canon import canonicalize
from .grouping import compare_results, group_candidates
from .runner import SqlExecutor, execute_sql
from .schema import describe_schema

__all__ = [
    "canonicalize",
    "compare_results",
    "describe_schema",
    "execute_sql",
    "group_candidates",
    "SqlExecutor",
]
