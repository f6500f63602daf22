"""Selection pipeline on the bundled chlorine-molecule example and synthetic pools."""

import pytest

from src.core.models import Candidate, SelectionConfig, Task
from src.execution.grouping import group_candidates
from src.execution.runner import SqlExecutor
from src.selection.pipeline import FLAG_PAIR_CAP, FLAG_UNPARSEABLE_VOTE, rescore, select, vote_pairs
from tests.helpers import candidate, make_backends


def t01_pool(pools) -> list[Candidate]:
    return [Candidate(cand_idx=i, seq=i, sql=sql) for i, sql in enumerate(pools["t01"])]


@pytest.fixture
def t01(task_map):
    return task_map["t01"]


class TestChlorineExample:
    async def test_r3_picks_the_correct_minority_group(self, t01, pools, stub_backends):
        trace = await select(t01, t01_pool(pools), SelectionConfig(n=6, m=6, resampling="off"), stub_backends())

        assert [g.members for g in sorted(trace.groups, key=lambda g: g.group_id)] == [(0, 2, 5), (1, 3), (4,)]
        assert trace.final_group_id == 1
        assert trace.final_cand_idx == 1
        assert trace.chosen_sql == pools["t01"][1]
        assert {g.group_id: g.r_list for g in trace.groups} == {0: 0, 1: 2, 2: 1}
        assert [g.group_id for g in trace.groups] == [1, 2, 0]

    async def test_r3_call_counts(self, t01, pools, stub_backends):
        backends = stub_backends()
        trace = await select(t01, t01_pool(pools), SelectionConfig(n=6, m=6, resampling="off"), backends)
        assert len(trace.votes) == 11
        assert trace.call_counts == {"pairwise": 22, "pointwise": 6}
        assert backends.ledger.calls("judge") == 0

    async def test_fmv_picks_the_largest_group(self, t01, pools, stub_backends):
        backends = stub_backends()
        trace = await select(t01, t01_pool(pools), SelectionConfig(n=6, m=6, resampling="off", mode="fmv"), backends)
        assert trace.final_cand_idx == 0
        assert trace.final_group_id == 0
        assert trace.call_counts == {}

    @pytest.mark.parametrize(
        "mode,expected",
        [("pointwise", 0), ("pointwise_avg", 4), ("listwise", 1)],
    )
    async def test_other_modes(self, t01, pools, stub_backends, mode, expected):
        config = SelectionConfig(n=6, m=6, resampling="off", mode=mode)
        trace = await select(t01, t01_pool(pools), config, stub_backends())
        assert trace.final_cand_idx == expected

    async def test_generated_pool_matches_bundled_pool(self, t01, pools, stub_backends):
        backends = stub_backends()
        generated = await backends.generator.generate(t01, 6)
        assert [c.sql for c in generated] == pools["t01"]
        trace = await select(t01, generated, SelectionConfig(n=6, m=6, resampling="off"), backends)
        assert trace.final_cand_idx == 1

    async def test_rescore_replays_without_backend_calls(self, t01, pools, stub_backends):
        backends = stub_backends()
        trace = await select(t01, t01_pool(pools), SelectionConfig(n=6, m=6, resampling="off"), backends)
        before = backends.ledger.call_counts()

        fmv = rescore(trace, SelectionConfig(n=6, m=6, resampling="off", mode="fmv"))
        strict = rescore(trace, SelectionConfig(n=6, m=6, resampling="off", tau=1.0))

        assert fmv.final_cand_idx == 0
        assert strict.final_cand_idx == 1
        assert backends.ledger.call_counts() == before

    async def test_trace_round_trips_through_json(self, t01, pools, stub_backends):
        trace = await select(t01, t01_pool(pools), SelectionConfig(n=6, m=6, resampling="off"), stub_backends())
        restored = type(trace).from_json(trace.to_json())
        assert restored == trace


@pytest.fixture
def synthetic_task(molecule_db) -> Task:
    return Task(task_id="syn", question="Which value?", db_ref=molecule_db)


async def test_single_group_needs_no_votes(synthetic_task):
    backends = make_backends(pointwise=lambda c: float(c.cand_idx))
    pool = [candidate(0, 5), candidate(1, 5), candidate(2, 5)]
    trace = await select(synthetic_task, pool, SelectionConfig(n=3, m=3, resampling="off"), backends)
    assert trace.votes == ()
    assert backends.ledger.calls("pairwise") == 0
    assert trace.final_cand_idx == 2


async def test_all_errors_flags_and_returns_first(synthetic_task):
    backends = make_backends()
    pool = [candidate(0, None), candidate(1, None)]
    trace = await select(synthetic_task, pool, SelectionConfig(n=2, m=2, resampling="off"), backends)
    assert trace.final_cand_idx == 0
    assert trace.final_group_id is None
    assert "no_valid_group" in trace.flags
    assert backends.ledger.calls("pointwise") == 0


async def test_unparseable_votes_are_neutral_and_flagged(synthetic_task):
    backends = make_backends(answers=lambda first, second, attempt: "no idea")
    pool = [candidate(0, 1), candidate(1, 2)]
    config = SelectionConfig(n=2, m=2, resampling="off", pointwise_enabled=False)
    trace = await select(synthetic_task, pool, config, backends)
    assert [v.vote for v in trace.votes] == [0.5]
    assert trace.votes[0].flagged
    assert FLAG_UNPARSEABLE_VOTE in trace.flags
    # two orders, one retry each
    assert backends.ledger.calls("pairwise") == 4
    # P = 0.5 on both sides: the runner-up wins the final comparison
    assert trace.final_cand_idx == 1


async def test_retry_recovers_a_malformed_answer(synthetic_task):
    def answers(first, second, attempt):
        if attempt == 0:
            return "A or B"
        return "<answer>A</answer>" if first.cand_idx == 1 else "<answer>B</answer>"

    backends = make_backends(answers=answers)
    pool = [candidate(0, 1), candidate(1, 2)]
    config = SelectionConfig(n=2, m=2, resampling="off", pointwise_enabled=False)
    trace = await select(synthetic_task, pool, config, backends)
    assert trace.votes[0].vote == 0.0
    assert not trace.votes[0].flagged
    assert trace.final_cand_idx == 1


async def test_single_order_policy_queries_once(synthetic_task):
    backends = make_backends(utility=lambda c: -c.cand_idx)
    pool = [candidate(0, 1), candidate(1, 2), candidate(2, 3)]
    config = SelectionConfig(n=3, m=3, resampling="off", order_policy="single", pointwise_enabled=False)
    trace = await select(synthetic_task, pool, config, backends)
    assert backends.ledger.calls("pairwise") == 3
    assert all(v.order_policy == "single" for v in trace.votes)
    assert trace.final_cand_idx == 0


async def test_dual_votes_are_complementary_for_antisymmetric_ranker(synthetic_task):
    backends = make_backends(utility=lambda c: [0.3, 0.9, 0.1][c.cand_idx])
    pool = [candidate(0, 1), candidate(1, 2), candidate(2, 3)]
    a, b = pool[0], pool[1]
    forward = await backends.pairwise.compare_pair(synthetic_task, a, b)
    backward = await backends.pairwise.compare_pair(synthetic_task, b, a)
    assert forward.vote + backward.vote == 1.0


def test_vote_pairs_cap_is_seeded():
    pool = [candidate(i, 1 if i < 4 else 2) for i in range(8)]
    groups = group_candidates(pool)
    config = SelectionConfig(n=8, m=8, max_pairs_per_group_pair=5)
    pairs, capped = vote_pairs("syn", groups, config, seed=3)
    again, _ = vote_pairs("syn", groups, config, seed=3)
    assert capped
    assert len(pairs) == 5
    assert pairs == again
    assert all(a < 4 <= b for a, b in pairs)


async def test_pair_cap_flag(synthetic_task):
    backends = make_backends(utility=lambda c: 1.0 if c.cand_idx >= 4 else 0.0)
    pool = [candidate(i, 1 if i < 4 else 2) for i in range(8)]
    config = SelectionConfig(n=8, m=8, resampling="off", pointwise_enabled=False, max_pairs_per_group_pair=5)
    trace = await select(synthetic_task, pool, config, backends)
    assert FLAG_PAIR_CAP in trace.flags
    assert len(trace.votes) == 5
    assert trace.final_cand_idx == 4


async def test_shared_executor_is_not_shut_down(synthetic_task):
    executor = SqlExecutor(SelectionConfig())
    try:
        pool = [Candidate(cand_idx=0, sql="SELECT 1"), Candidate(cand_idx=1, sql="SELECT 1")]
        await select(synthetic_task, pool, SelectionConfig(n=2, m=2, resampling="off", mode="fmv"), make_backends(), executor)
        outcome = await executor.run(synthetic_task.db_ref, "SELECT 2")
        assert outcome.rows == ((2,),)
    finally:
        executor.shutdown()


async def test_empty_pool_rejected(synthetic_task):
    with pytest.raises(ValueError):
        await select(synthetic_task, [], SelectionConfig(), make_backends())
