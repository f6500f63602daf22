"""Per-stage accounting of backend calls.

Counts every agent call per stage and per task, and tracks token usage,
cache hits and cost of real HTTP requests using LiteLLM's pricing data.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any

import litellm

logger = logging.getLogger(__name__)

STAGES = ("pointwise", "pairwise", "judge", "generate_initial", "generate_resample")


@dataclass
class StageUsage:
    """Usage data for a single pipeline stage."""

    stage: str
    calls: int = 0
    backend_requests: int = 0
    cache_hits: int = 0
    input_tokens: int = 0
    output_tokens: int = 0
    cost_usd: float = 0.0
    models: set[str] = field(default_factory=set)


@dataclass
class CallLedger:
    """Aggregate call tracking for a whole run."""

    stages: dict[str, StageUsage] = field(default_factory=dict)
    per_task: dict[str, dict[str, int]] = field(default_factory=lambda: defaultdict(dict))

    def _stage(self, stage: str) -> StageUsage:
        if stage not in self.stages:
            self.stages[stage] = StageUsage(stage=stage)
        return self.stages[stage]

    def record_call(self, stage: str, task_id: str, count: int = 1) -> None:
        """Count one logical agent call (stub lookup, cached or live request)."""
        self._stage(stage).calls += count
        task_counts = self.per_task[task_id]
        task_counts[stage] = task_counts.get(stage, 0) + count

    def record_cache_hit(self, stage: str) -> None:
        self._stage(stage).cache_hits += 1

    def add_usage(
        self,
        stage: str,
        model: str,
        input_tokens: int,
        output_tokens: int,
        cost_usd: float,
    ) -> None:
        """Add usage from one HTTP request.

        Args:
            stage: Pipeline stage (e.g. "pairwise", "judge")
            model: Model identifier used for the call
            input_tokens: Number of input/prompt tokens
            output_tokens: Number of output/completion tokens
            cost_usd: Cost in USD for this call
        """
        step = self._stage(stage)
        step.backend_requests += 1
        step.input_tokens += input_tokens
        step.output_tokens += output_tokens
        step.cost_usd += cost_usd
        step.models.add(model)

    def calls(self, stage: str) -> int:
        return self.stages[stage].calls if stage in self.stages else 0

    def backend_requests(self, stage: str) -> int:
        return self.stages[stage].backend_requests if stage in self.stages else 0

    def task_counts(self, task_id: str) -> dict[str, int]:
        return dict(sorted(self.per_task.get(task_id, {}).items()))

    def call_counts(self) -> dict[str, int]:
        return {name: s.calls for name, s in sorted(self.stages.items())}

    def total_cost(self) -> float:
        """Return total cost across all stages."""
        return sum(s.cost_usd for s in self.stages.values())

    def to_dict(self) -> dict:
        """Convert to dict for JSON serialization."""
        return {
            "total_cost_usd": round(self.total_cost(), 6),
            "stages": {
                name: {
                    "calls": s.calls,
                    "backend_requests": s.backend_requests,
                    "cache_hits": s.cache_hits,
                    "input_tokens": s.input_tokens,
                    "output_tokens": s.output_tokens,
                    "cost_usd": round(s.cost_usd, 6),
                    "models": sorted(s.models),
                }
                for name, s in sorted(self.stages.items())
            },
        }


def extract_usage_from_litellm_response(response: Any) -> tuple[int, int, float]:
    """Extract tokens and cost from LiteLLM response object.

    Args:
        response: LiteLLM completion response object

    Returns:
        Tuple of (input_tokens, output_tokens, cost_usd)
    """
    usage = getattr(response, "usage", None)
    input_tokens = getattr(usage, "prompt_tokens", 0) or 0
    output_tokens = getattr(usage, "completion_tokens", 0) or 0

    try:
        cost = litellm.completion_cost(completion_response=response)
        cost = cost if cost else 0.0
    except Exception as e:
        # Self-hosted models have no pricing entry
        logger.debug("No LiteLLM pricing for response: %s", e)
        cost = 0.0

    return input_tokens, output_tokens, cost
