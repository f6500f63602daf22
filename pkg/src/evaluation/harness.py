"""Execution-accuracy evaluation over a task set.

Per task: execute the gold SQL, exclude the task when the gold result is an
error, a timeout or empty, otherwise run selection and compare the chosen
SQL's result with the gold result. Tasks run concurrently; the report is
assembled in task order so it does not depend on completion order.
"""

import asyncio
import logging
import math
import sys
import time
from collections import Counter
from typing import Any, Callable, Literal, Optional

from pydantic import Field
from tqdm import tqdm

from ..agents.factory import Backends
from ..config.settings import settings
from ..core.errors import BackendError, DatasetError
from ..core.models import Candidate, ExecOutcome, Record, SelectionConfig, SelectionTrace, Task
from ..execution.grouping import compare_results
from ..execution.runner import SqlExecutor
from ..selection.pipeline import select
from ..selection.resample import FLAG_SHORTFALL
from .metrics import (
    execution_accuracy,
    group_score_variance,
    has_correct,
    mean_of,
    ratio,
    raw_score_variance,
    trigger_quality,
)

logger = logging.getLogger(__name__)

REPORT_VERSION = 1
ExclusionReason = Literal["gold_error", "gold_timeout", "gold_empty"]
TraceSink = Callable[[SelectionTrace], None]


class TaskResult(Record):
    """One row of the report."""

    task_id: str
    chosen_sql: Optional[str] = None
    correct: bool = False
    excluded: bool = False
    exclusion_reason: Optional[ExclusionReason] = None
    resampled: bool = False
    resample_attempted: bool = False
    initial_has_correct: Optional[bool] = None
    final_has_correct: Optional[bool] = None
    n_groups: int = 0
    flags: tuple[str, ...] = ()
    call_counts: dict[str, int] = Field(default_factory=dict)


class EvalReport(Record):
    """Versioned evaluation report. Wall-clock timings and backend usage are kept out of the JSON."""

    report_version: Literal[1] = REPORT_VERSION
    complete: bool = True
    seed: int = 0
    config: SelectionConfig
    n_tasks: int
    n_included: int
    n_excluded: int
    n_correct: int
    ex: float = Field(ge=0.0, le=100.0)
    candidate_recall: Optional[float] = None
    initial_recall: Optional[float] = None
    resample_rate: Optional[float] = None
    judge_precision: Optional[float] = None
    judge_recall: Optional[float] = None
    within_group_variance: dict[str, Optional[float]] = Field(default_factory=dict)
    exclusions: dict[str, int] = Field(default_factory=dict)
    flag_counts: dict[str, int] = Field(default_factory=dict)
    call_counts: dict[str, int] = Field(default_factory=dict)
    tasks: tuple[TaskResult, ...] = ()
    timings: dict[str, float] = Field(default_factory=dict, exclude=True)
    usage: dict[str, Any] = Field(default_factory=dict, exclude=True)


def exclusion_reason(gold: ExecOutcome) -> Optional[ExclusionReason]:
    """Why a gold outcome cannot be scored, or None when it can."""
    if gold.status == "sql_error":
        return "gold_error"
    if gold.status == "timeout":
        return "gold_timeout"
    if gold.row_count == 0:
        return "gold_empty"
    return None


def initial_pool(sqls: list[str]) -> list[Candidate]:
    return [Candidate(cand_idx=i, seq=i, sql=sql) for i, sql in enumerate(sqls)]


async def evaluate_task(
    task: Task,
    config: SelectionConfig,
    backends: Backends,
    executor: SqlExecutor,
    seed: int = 0,
    pool: Optional[list[str]] = None,
) -> tuple[TaskResult, Optional[SelectionTrace]]:
    """Evaluate one task; excluded tasks never reach the backends."""
    gold = await executor.run(task.db_ref, task.gold_sql or "")
    reason = exclusion_reason(gold)
    if reason is not None:
        logger.info("[EVAL] %s excluded (%s)", task.task_id, reason)
        return TaskResult(task_id=task.task_id, excluded=True, exclusion_reason=reason), None

    if pool is not None:
        cands = initial_pool(pool)
    else:
        cands = await backends.generator.generate(task, config.n)

    trace = await select(task, cands, config, backends, executor=executor, seed=seed)
    chosen = trace.candidate(trace.final_cand_idx)
    correct = chosen.outcome is not None and compare_results(
        chosen.outcome, gold, config.float_tol, config.order_sensitive
    )
    return (
        TaskResult(
            task_id=task.task_id,
            chosen_sql=trace.chosen_sql,
            correct=correct,
            resampled=trace.resampled,
            resample_attempted=trace.resampled or FLAG_SHORTFALL in trace.flags,
            initial_has_correct=has_correct(trace.pool_before, gold, config.float_tol, config.order_sensitive),
            final_has_correct=has_correct(trace.pool_after, gold, config.float_tol, config.order_sensitive),
            n_groups=len(trace.groups),
            flags=trace.flags,
            call_counts=trace.call_counts,
        ),
        trace,
    )


def _timing_summary(traces: list[SelectionTrace], wall_ms: float) -> dict[str, float]:
    stages = sorted({stage for t in traces for stage in t.timings})
    summary = {"wall_ms": round(wall_ms, 3)}
    for stage in stages:
        values = [t.timings[stage] for t in traces if stage in t.timings]
        summary[f"{stage}_total_ms"] = round(math.fsum(values), 3)
        summary[f"{stage}_mean_ms"] = round(math.fsum(values) / len(values), 3)
    return summary


def build_report(
    results: list[TaskResult],
    traces: list[SelectionTrace],
    config: SelectionConfig,
    backends: Backends,
    seed: int,
    complete: bool,
    wall_ms: float,
) -> EvalReport:
    included = [r for r in results if not r.excluded]
    n_correct = sum(1 for r in included if r.correct)

    judge_precision = judge_recall = resample_rate = None
    if config.resampling != "off" and included:
        judge_precision, judge_recall = trigger_quality(
            [r.resample_attempted for r in included],
            [not r.initial_has_correct for r in included],
        )
        resample_rate = ratio(sum(1 for r in included if r.resampled), len(included))

    variance = {
        "group_score": mean_of(group_score_variance(t) for t in traces),
        "pointwise_raw": mean_of(raw_score_variance(t) for t in traces),
    }

    return EvalReport(
        complete=complete,
        seed=seed,
        config=config,
        n_tasks=len(results),
        n_included=len(included),
        n_excluded=len(results) - len(included),
        n_correct=n_correct,
        ex=execution_accuracy(n_correct, len(included)),
        candidate_recall=ratio(sum(1 for r in included if r.final_has_correct), len(included)),
        initial_recall=ratio(sum(1 for r in included if r.initial_has_correct), len(included)),
        resample_rate=resample_rate,
        judge_precision=judge_precision,
        judge_recall=judge_recall,
        within_group_variance=variance,
        exclusions=dict(sorted(Counter(r.exclusion_reason for r in results if r.excluded).items())),
        flag_counts=dict(sorted(Counter(f for r in results for f in r.flags).items())),
        call_counts=backends.ledger.call_counts(),
        tasks=tuple(results),
        timings=_timing_summary(traces, wall_ms),
        usage=backends.ledger.to_dict(),
    )


async def evaluate(
    tasks: list[Task],
    config: SelectionConfig,
    backends: Backends,
    seed: int = 0,
    pools: Optional[dict[str, list[str]]] = None,
    trace_sink: Optional[TraceSink] = None,
    progress: bool = True,
    max_parallel: Optional[int] = None,
) -> EvalReport:
    """
    Evaluate selection over a task set.

    Args:
        tasks: Tasks with gold SQL
        config: Selection configuration
        backends: Agents for every role
        seed: Seed for every stochastic choice
        pools: Optional pre-built initial pools by task_id; other tasks are
            generated with n samples
        trace_sink: Called with each trace as its task completes
        progress: Show a progress bar on stderr
        max_parallel: Tasks evaluated concurrently

    Returns:
        EvalReport; complete is False when a backend outage aborted the run

    Raises:
        DatasetError: If a task lacks gold SQL
    """
    missing = [t.task_id for t in tasks if not (t.gold_sql or "").strip()]
    if missing:
        raise DatasetError([f"task {task_id}: no gold SQL" for task_id in missing])

    pools = pools or {}
    executor = SqlExecutor(config)
    gate = asyncio.Semaphore(max_parallel or settings.max_parallel)
    results: dict[str, TaskResult] = {}
    traces: dict[str, SelectionTrace] = {}
    complete = True
    started = time.perf_counter()

    async def run(task: Task) -> None:
        async with gate:
            result, trace = await evaluate_task(task, config, backends, executor, seed, pools.get(task.task_id))
        results[task.task_id] = result
        if trace is not None:
            traces[task.task_id] = trace
            if trace_sink is not None:
                trace_sink(trace)
        bar.update(1)

    bar = tqdm(total=len(tasks), desc="Evaluating", unit="task", file=sys.stderr, disable=not progress)
    pending = {asyncio.ensure_future(run(t)) for t in tasks}
    try:
        while pending:
            done, pending = await asyncio.wait(pending, return_when=asyncio.FIRST_EXCEPTION)
            errors = [f.exception() for f in done if f.exception() is not None]
            if not errors:
                continue
            for future in pending:
                future.cancel()
            await asyncio.gather(*pending, return_exceptions=True)
            pending = set()
            backend_errors = [e for e in errors if isinstance(e, BackendError)]
            if len(backend_errors) != len(errors):
                raise next(e for e in errors if not isinstance(e, BackendError))
            logger.error("[EVAL] Backend failure, report is incomplete: %s", backend_errors[0])
            complete = False
    finally:
        bar.close()
        executor.shutdown()

    wall_ms = (time.perf_counter() - started) * 1000.0
    ordered = [results[t.task_id] for t in tasks if t.task_id in results]
    ordered_traces = [traces[t.task_id] for t in tasks if t.task_id in traces]
    report = build_report(ordered, ordered_traces, config, backends, seed, complete, wall_ms)

    logger.info(
        "[EVAL] EX %.2f over %d included tasks (%d excluded)%s",
        report.ex,
        report.n_included,
        report.n_excluded,
        "" if complete else ", incomplete",
    )
    return report
