"""Backend construction from a RunConfig."""

import asyncio
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ..config.loader import RunConfig
from ..config.settings import settings
from ..core.errors import ConfigurationError
from ..utils.call_ledger import CallLedger
from ..utils.response_cache import ResponseCache
from .generator_agent import GeneratorAgent
from .judge_agent import JudgeAgent
from .litellm_generator import LiteLLMGeneratorAgent
from .litellm_judge import LiteLLMJudgeAgent
from .litellm_pairwise import LiteLLMPairwiseAgent
from .litellm_pointwise import LiteLLMPointwiseAgent
from .pairwise_agent import PairwiseAgent
from .pointwise_agent import PointwiseAgent
from .stub_agents import (
    StubGeneratorAgent,
    StubJudgeAgent,
    StubPairwiseAgent,
    StubPointwiseAgent,
    StubTable,
)

logger = logging.getLogger(__name__)


@dataclass
class Backends:
    """One agent per role plus the shared ledger and cache."""

    pointwise: PointwiseAgent
    pairwise: PairwiseAgent
    judge: JudgeAgent
    generator: GeneratorAgent
    ledger: CallLedger
    cache: Optional[ResponseCache] = None


def build_backends(
    config: RunConfig,
    use_cache: bool = True,
    ledger: Optional[CallLedger] = None,
) -> Backends:
    """
    Build every role's agent from the run configuration.

    Args:
        config: Effective run configuration
        use_cache: Persist HTTP responses under the cache directory
        ledger: Ledger to record into (a new one when omitted)

    Raises:
        ConfigurationError: If a stub role has no stub file
    """
    ledger = ledger if ledger is not None else CallLedger()
    specs = config.backends
    cache: Optional[ResponseCache] = None
    if use_cache and any(spec.kind == "http_llm" for spec in specs.values()):
        cache = ResponseCache(Path(config.cache_dir or settings.cache_dir))

    table: Optional[StubTable] = None
    if any(spec.kind == "stub" for spec in specs.values()):
        if config.stub_file is None:
            raise ConfigurationError("stub backends need a stub file (--stub-file or stub_file in config)")
        table = StubTable.load(config.stub_file)

    selection = config.selection
    gate = asyncio.Semaphore(config.max_parallel)

    def common(role: str) -> dict:
        return {"spec": specs[role], "ledger": ledger, "cache": cache, "gate": gate}

    if specs["pointwise"].kind == "stub":
        pointwise: PointwiseAgent = StubPointwiseAgent(table, **common("pointwise"))
    else:
        pointwise = LiteLLMPointwiseAgent(preview_rows=selection.judge_preview_rows, **common("pointwise"))

    if specs["pairwise"].kind == "stub":
        pairwise: PairwiseAgent = StubPairwiseAgent(table, **common("pairwise"))
    else:
        pairwise = LiteLLMPairwiseAgent(token_budget=selection.token_budget, **common("pairwise"))

    if specs["judge"].kind == "stub":
        judge: JudgeAgent = StubJudgeAgent(table, **common("judge"))
    else:
        judge = LiteLLMJudgeAgent(
            preview_rows=selection.judge_preview_rows,
            token_budget=selection.token_budget,
            **common("judge"),
        )

    if specs["generator"].kind == "stub":
        generator: GeneratorAgent = StubGeneratorAgent(table, **common("generator"))
    else:
        generator = LiteLLMGeneratorAgent(**common("generator"))

    logger.debug(
        "[CONFIG] Backends: %s (max %d in flight)", {role: spec.kind for role, spec in specs.items()}, config.max_parallel
    )
    return Backends(
        pointwise=pointwise,
        pairwise=pairwise,
        judge=judge,
        generator=generator,
        ledger=ledger,
        cache=cache,
    )
