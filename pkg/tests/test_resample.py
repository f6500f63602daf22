"""Tests for judge-gated resampling."""

import pytest

from src.core.models import SelectionConfig, Task
from src.execution.runner import SqlExecutor
from src.selection.pipeline import select
from src.selection.resample import (
    FLAG_JUDGE_BYPASSED,
    FLAG_JUDGE_FALLBACK,
    FLAG_SHORTFALL,
    is_uninformative,
    judge_order,
    prune_top_n,
    run_resampling,
)
from tests.helpers import candidate, make_backends, ok_outcome

LIKELY = '{"decision": {"likely_has_correct": true, "confidence": 0.9}}'
UNLIKELY = '{"decision": {"likely_has_correct": false, "confidence": 0.8, "reason_tags": ["MISMATCH_INTENT"]}}'
RESAMPLED = ["SELECT 7", "SELECT 8", "SELECT 9", "SELECT 10"]
SCORES = {"SELECT 9": 0.9, "SELECT 8": 0.8, "SELECT 7": 0.1, "SELECT 10": 0.2}


def by_sql(c):
    return SCORES.get(c.sql, 0.0)


def config(**overrides) -> SelectionConfig:
    values = {"n": 2, "m": 4, "resampling": "agentic", "mode": "fmv"}
    values.update(overrides)
    return SelectionConfig(**values)


@pytest.fixture
def task(molecule_db) -> Task:
    return Task(task_id="syn", question="Which value?", db_ref=molecule_db)


@pytest.fixture
def executor():
    ex = SqlExecutor(SelectionConfig())
    yield ex
    ex.shutdown()


def informative_pool():
    return [candidate(0, 1), candidate(1, 2)]


class TestGating:
    @pytest.mark.parametrize("mode,expected", [("agentic", 2 * 4), ("always", 5 * 4)])
    async def test_generator_calls_follow_the_judge(self, molecule_db, mode, expected):
        lacking = {"q1", "q3"}
        generated = 0
        judged = 0
        for task_id in ("q0", "q1", "q2", "q3", "q4"):
            task = Task(task_id=task_id, question="q", db_ref=molecule_db)
            backends = make_backends(
                pointwise=by_sql,
                judge_answer=UNLIKELY if task_id in lacking else LIKELY,
                completions={"resampled": RESAMPLED},
            )
            trace = await select(task, informative_pool(), config(resampling=mode), backends)
            assert trace.resampled == (mode == "always" or task_id in lacking)
            generated += backends.ledger.calls("generate_resample")
            judged += backends.ledger.calls("judge")
        assert generated == expected
        assert judged == (5 if mode == "agentic" else 0)

    async def test_off_never_calls_judge_or_generator(self, task, executor):
        backends = make_backends(judge_answer=UNLIKELY)
        result = await run_resampling(task, informative_pool(), config(resampling="off"), backends, executor)
        assert not result.resampled
        assert result.decision is None
        assert backends.ledger.call_counts() == {}

    async def test_judge_decision_is_kept_on_the_trace(self, task):
        backends = make_backends(judge_answer=UNLIKELY, pointwise=by_sql, completions={"resampled": RESAMPLED})
        trace = await select(task, informative_pool(), config(), backends)
        assert trace.judge.likely_has_correct is False
        assert trace.judge.reason_tags == ("MISMATCH_INTENT",)


class TestReplacement:
    async def test_prune_keeps_best_scored(self, task, executor):
        backends = make_backends(judge_answer=UNLIKELY, pointwise=by_sql, completions={"resampled": RESAMPLED})
        result = await run_resampling(task, informative_pool(), config(), backends, executor)
        assert result.resampled
        assert [c.sql for c in result.pool] == ["SELECT 9", "SELECT 8"]
        assert [c.cand_idx for c in result.pool] == [0, 1]
        assert [c.seq for c in result.pool] == [2, 1]
        assert all(c.pass_ == "resampled" for c in result.pool)
        assert backends.ledger.calls("pointwise") == 4

    async def test_no_prune_takes_first_n(self, task, executor):
        backends = make_backends(judge_answer=UNLIKELY, pointwise=by_sql, completions={"resampled": RESAMPLED})
        result = await run_resampling(task, informative_pool(), config(prune=False), backends, executor)
        assert [c.sql for c in result.pool] == ["SELECT 7", "SELECT 8"]
        assert backends.ledger.calls("pointwise") == 0

    async def test_union_appends_after_initial_pool(self, task, executor):
        backends = make_backends(judge_answer=UNLIKELY, pointwise=by_sql, completions={"resampled": RESAMPLED})
        initial = informative_pool()
        result = await run_resampling(task, initial, config(resample_merge="union"), backends, executor)
        assert result.pool[:2] == initial
        assert [c.cand_idx for c in result.pool] == [0, 1, 2, 3]
        assert [c.sql for c in result.pool[2:]] == ["SELECT 9", "SELECT 8"]

    async def test_shortfall_keeps_initial_pool(self, task, executor):
        backends = make_backends(
            judge_answer=UNLIKELY,
            pointwise=by_sql,
            completions={"resampled": [None, None, None, "SELECT 7"]},
        )
        initial = informative_pool()
        result = await run_resampling(task, initial, config(), backends, executor)
        assert not result.resampled
        assert result.pool == initial
        assert FLAG_SHORTFALL in result.flags
        assert backends.ledger.calls("generate_resample") == 4

    async def test_resampled_pool_is_executed(self, task):
        backends = make_backends(judge_answer=UNLIKELY, pointwise=by_sql, completions={"resampled": RESAMPLED})
        trace = await select(task, informative_pool(), config(), backends)
        assert trace.pool_before == tuple(informative_pool())
        assert all(c.outcome is not None and c.outcome.ok for c in trace.pool_after)
        assert trace.chosen_sql == "SELECT 9"


class TestJudgeInput:
    async def test_pool_shown_largest_group_first_errors_last(self, task, executor):
        backends = make_backends()
        pool = [candidate(0, None), candidate(1, 4), candidate(2, 2), candidate(3, 4)]
        await run_resampling(task, pool, config(), backends, executor)
        assert [c.cand_idx for c in backends.judge.pools[0]] == [1, 3, 2, 0]

    def test_judge_order_is_total(self):
        pool = [candidate(0, None), candidate(1, 3), candidate(2, None)]
        assert [c.cand_idx for c in judge_order(pool)] == [1, 0, 2]

    async def test_uninformative_pool_bypasses_the_judge(self, task, executor):
        empty = candidate(1, 0).model_copy(update={"outcome": ok_outcome()})
        pool = [candidate(0, None), empty]
        assert is_uninformative(pool)
        backends = make_backends(pointwise=by_sql, completions={"resampled": RESAMPLED})
        result = await run_resampling(task, pool, config(), backends, executor)
        assert result.resampled
        assert result.decision is None
        assert FLAG_JUDGE_BYPASSED in result.flags
        assert backends.ledger.calls("judge") == 0

    async def test_malformed_judge_answer_keeps_pool(self, task, executor):
        backends = make_backends(judge_answer="I think so", completions={"resampled": RESAMPLED})
        result = await run_resampling(task, informative_pool(), config(), backends, executor)
        assert not result.resampled
        assert result.decision.likely_has_correct
        assert result.decision.confidence == 0.0
        assert result.decision.reason_tags == ("PARSE_FALLBACK",)
        assert FLAG_JUDGE_FALLBACK in result.flags
        assert backends.ledger.calls("judge") == 2
        assert backends.ledger.calls("generate_resample") == 0


def test_prune_top_n_ties_go_to_lower_seq():
    cands = [candidate(i, i, seq=s) for i, s in enumerate([3, 1, 2])]
    kept = prune_top_n(cands, {0: 0.5, 1: 0.5, 2: 0.9}, 2)
    assert [c.cand_idx for c in kept] == [2, 1]
