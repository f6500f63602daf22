"""Ranker, judge and generator agents."""

from .factory import Backends, build_backends
from .generator_agent import EMPTY_SQL_MARKER, GeneratorAgent, extract_sql
from .judge_agent import JudgeAgent, parse_decision
from .pairwise_agent import PairwiseAgent, parse_choice
from .pointwise_agent import PointwiseAgent, assign_ranks
from .stub_agents import StubTable

__all__ = [
    "assign_ranks",
    "Backends",
    "build_backends",
    "EMPTY_SQL_MARKER",
    "extract_sql",
    "GeneratorAgent",
    "JudgeAgent",
    "PairwiseAgent",
    "parse_choice",
    "parse_decision",
    "PointwiseAgent",
    "StubTable",
]
