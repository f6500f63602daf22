"""Shared prompt builders for all ranker, judge and generator agents.

Used by both the LiteLLM agents and the reward exporter so every caller
renders byte-identical messages for the same inputs.
"""

import json
import logging
from typing import Callable, Literal, Optional, Sequence

import litellm

from ..core.models import Candidate, ExecOutcome, Task
from ..prompts import render

logger = logging.getLogger(__name__)

Messages = list[dict]
TokenCounter = Callable[[Messages], int]
PromptKind = Literal["generate", "pairwise", "judge", "pointwise"]

PAIRWISE_PREFILL = "pairwise_prefill"
# Candidate preview rows are kept at multiples of 1/_TRUNCATION_STEPS
_TRUNCATION_STEPS = 64


def litellm_token_counter(model: Optional[str] = None) -> TokenCounter:
    """Token counter backed by LiteLLM's tokenizer for `model`."""
    name = model or "gpt-3.5-turbo"

    def count(messages: Messages) -> int:
        try:
            return litellm.token_counter(model=name, messages=messages)
        except Exception as e:
            # tokenizer unavailable (offline); roughly 4 characters per token
            logger.debug("[PROMPT] token_counter failed for %s: %s", name, e)
            return sum(len(m.get("content") or "") for m in messages) // 4

    return count


def format_preview(outcome: Optional[ExecOutcome], max_rows: Optional[int] = None) -> str:
    """Execution preview as a JSON list of rows; "None" for errors or missing outcomes."""
    if outcome is None or not outcome.ok:
        return "None"
    rows = outcome.rows if max_rows is None else outcome.rows[:max_rows]
    return json.dumps([list(row) for row in rows], ensure_ascii=False)


def generation_messages(task: Task, db_schema: str) -> Messages:
    return [
        {"role": "system", "content": render("generate_system")},
        {
            "role": "user",
            "content": render(
                "generate_user",
                db_schema=db_schema,
                question=task.question_with_evidence,
            ),
        },
    ]


def _pairwise(
    task: Task,
    db_schema: str,
    first: Candidate,
    second: Candidate,
    rows_first: Optional[int],
    rows_second: Optional[int],
) -> Messages:
    return [
        {"role": "system", "content": render("pairwise_system")},
        {
            "role": "user",
            "content": render(
                "pairwise_user",
                db_schema=db_schema,
                question=task.question_with_evidence,
                sql_a=first.sql,
                result_a=format_preview(first.outcome, rows_first),
                sql_b=second.sql,
                result_b=format_preview(second.outcome, rows_second),
            ),
        },
        {"role": "assistant", "content": render(PAIRWISE_PREFILL)},
    ]


def pairwise_messages(
    task: Task,
    db_schema: str,
    first: Candidate,
    second: Candidate,
    token_budget: int = 8192,
    token_counter: Optional[TokenCounter] = None,
) -> Messages:
    """Pairwise prompt with `first` shown as Candidate A.

    When the prompt exceeds token_budget, both execution previews keep the
    same fraction of their rows, shrinking until the prompt fits (or both
    are empty lists).
    """
    counter = token_counter or litellm_token_counter()
    messages = _pairwise(task, db_schema, first, second, None, None)
    if counter(messages) <= token_budget:
        return messages

    len_a = first.outcome.row_count if first.outcome is not None else 0
    len_b = second.outcome.row_count if second.outcome is not None else 0
    for step in range(_TRUNCATION_STEPS - 1, -1, -1):
        keep_a = len_a * step // _TRUNCATION_STEPS
        keep_b = len_b * step // _TRUNCATION_STEPS
        messages = _pairwise(task, db_schema, first, second, keep_a, keep_b)
        if counter(messages) <= token_budget:
            logger.debug("[PAIRWISE] Previews truncated to %d/%d and %d/%d rows", keep_a, len_a, keep_b, len_b)
            return messages
    logger.warning("[PAIRWISE] Prompt exceeds %d tokens even with empty previews", token_budget)
    return messages


def judge_items_block(pool: Sequence[Candidate], preview_rows: int) -> str:
    items = []
    for cand in pool:
        items.append(
            f"- cand_idx: {cand.cand_idx}\n"
            f"  SQL: {cand.sql}\n"
            f"  exec_preview: {format_preview(cand.outcome, preview_rows)}"
        )
    return "\n".join(items)


def _judge(task: Task, db_schema: str, pool: Sequence[Candidate], preview_rows: int) -> Messages:
    return [
        {"role": "system", "content": render("judge_system")},
        {
            "role": "user",
            "content": render(
                "judge_user",
                user_query=task.question_with_evidence,
                db_dialect="SQLite",
                db_schema=db_schema,
                items_block=judge_items_block(pool, preview_rows),
            ),
        },
    ]


def judge_messages(
    task: Task,
    db_schema: str,
    pool: Sequence[Candidate],
    preview_rows: int = 5,
    token_budget: int = 8192,
    token_counter: Optional[TokenCounter] = None,
) -> Messages:
    """Judge prompt over the whole pool; previews shrink uniformly to fit the budget."""
    counter = token_counter or litellm_token_counter()
    for rows in range(preview_rows, -1, -1):
        messages = _judge(task, db_schema, pool, rows)
        if counter(messages) <= token_budget:
            return messages
    logger.warning("[JUDGE] Prompt exceeds %d tokens even with empty previews", token_budget)
    return messages


def pointwise_messages(
    task: Task,
    db_schema: str,
    cand: Candidate,
    preview_rows: int = 5,
) -> Messages:
    return [
        {
            "role": "user",
            "content": render(
                "pointwise",
                db_schema=db_schema,
                question=task.question_with_evidence,
                sql=cand.sql,
                result=format_preview(cand.outcome, preview_rows),
            ),
        }
    ]


def render_prompt(
    kind: PromptKind,
    task: Task,
    db_schema: str,
    candidates: Sequence[Candidate] = (),
    preview_rows: int = 5,
    token_budget: int = 8192,
    token_counter: Optional[TokenCounter] = None,
) -> Messages:
    """Render the message list for one prompt kind.

    Args:
        kind: generate | pairwise | judge | pointwise
        task: Task supplying the question and evidence
        db_schema: Schema text (see describe_schema)
        candidates: Two candidates for pairwise (first is A), the pool for
            judge, one candidate for pointwise, none for generate
        preview_rows: Row cap for judge and pointwise previews
        token_budget: Prompt token budget for truncation
        token_counter: Counts tokens in a message list

    Raises:
        ValueError: If the candidates do not match the kind
    """
    if kind == "generate":
        return generation_messages(task, db_schema)
    if kind == "pairwise":
        if len(candidates) != 2:
            raise ValueError("pairwise prompts need exactly two candidates")
        return pairwise_messages(task, db_schema, candidates[0], candidates[1], token_budget, token_counter)
    if kind == "judge":
        if not candidates:
            raise ValueError("judge prompts need at least one candidate")
        return judge_messages(task, db_schema, candidates, preview_rows, token_budget, token_counter)
    if kind == "pointwise":
        if len(candidates) != 1:
            raise ValueError("pointwise prompts need exactly one candidate")
        return pointwise_messages(task, db_schema, candidates[0], preview_rows)
    raise ValueError(f"unknown prompt kind: {kind}")
