"""In-test agents and synthetic pools for pipeline and property tests."""

from typing import Callable, Optional, Sequence

from src.agents.factory import Backends
from src.agents.generator_agent import GeneratorAgent
from src.agents.judge_agent import JudgeAgent
from src.agents.pairwise_agent import PairwiseAgent
from src.agents.pointwise_agent import PointwiseAgent
from src.core.errors import BackendError
from src.core.models import Candidate, ExecOutcome, Task
from src.execution.canon import canonicalize
from src.utils.call_ledger import CallLedger


def ok_outcome(*values) -> ExecOutcome:
    """A one-column result holding `values` as rows."""
    rows, fp = canonicalize(1, [(v,) for v in values])
    return ExecOutcome(status="ok", column_count=1, rows=rows, fingerprint=fp)


def error_outcome(message: str = "no such column: x") -> ExecOutcome:
    return ExecOutcome(status="sql_error", error_message=message)


def candidate(idx: int, result: Optional[int], sql: Optional[str] = None, seq: Optional[int] = None) -> Candidate:
    """Candidate with a synthetic outcome; result None means a SQL error."""
    outcome = error_outcome() if result is None else ok_outcome(result)
    return Candidate(
        cand_idx=idx,
        seq=idx if seq is None else seq,
        sql=sql or f"SELECT {result} -- {idx}",
        outcome=outcome,
    )


class ScorePointwise(PointwiseAgent):
    """Raw score looked up by SQL text."""

    def __init__(self, score: Callable[[Candidate], float], **kwargs):
        super().__init__(**kwargs)
        self.score = score

    async def _raw_score(self, task: Task, cand: Candidate) -> float:
        return self.score(cand)


class UtilityPairwise(PairwiseAgent):
    """Prefers the higher utility; the first shown wins on equal utility."""

    def __init__(self, utility: Callable[[Candidate], float], **kwargs):
        super().__init__(**kwargs)
        self.utility = utility

    async def _ask(self, task: Task, first: Candidate, second: Candidate, attempt: int) -> str:
        return "<answer>A</answer>" if self.utility(first) >= self.utility(second) else "<answer>B</answer>"


class ScriptedPairwise(PairwiseAgent):
    """Returns the scripted raw answer for (first sql, second sql)."""

    def __init__(self, answers: Callable[[Candidate, Candidate, int], str], **kwargs):
        super().__init__(**kwargs)
        self.answers = answers

    async def _ask(self, task: Task, first: Candidate, second: Candidate, attempt: int) -> str:
        return self.answers(first, second, attempt)


class FixedJudge(JudgeAgent):
    def __init__(self, answer: str, **kwargs):
        super().__init__(**kwargs)
        self.answer = answer
        self.pools: list[Sequence[Candidate]] = []

    async def _ask(self, task: Task, pool: Sequence[Candidate], attempt: int) -> str:
        self.pools.append(pool)
        return self.answer


class ListGenerator(GeneratorAgent):
    """Completion per (pass, seq) from lists; None simulates a failed sample."""

    def __init__(self, completions: dict[str, list[Optional[str]]], **kwargs):
        super().__init__(**kwargs)
        self.completions = completions

    async def _completion(self, task: Task, pass_, seq: int) -> str:
        value = self.completions[pass_][seq]
        if value is None:
            raise BackendError("generate", f"failed sample {seq}")
        return value


def make_backends(
    pointwise: Optional[Callable[[Candidate], float]] = None,
    utility: Optional[Callable[[Candidate], float]] = None,
    judge_answer: str = '{"decision": {"likely_has_correct": true, "confidence": 1.0}}',
    completions: Optional[dict[str, list[Optional[str]]]] = None,
    answers: Optional[Callable[[Candidate, Candidate, int], str]] = None,
) -> Backends:
    ledger = CallLedger()
    return Backends(
        pointwise=ScorePointwise(pointwise or (lambda c: 0.0), ledger=ledger),
        pairwise=(
            ScriptedPairwise(answers, ledger=ledger)
            if answers is not None
            else UtilityPairwise(utility or (lambda c: 0.0), ledger=ledger)
        ),
        judge=FixedJudge(judge_answer, ledger=ledger),
        generator=ListGenerator(completions or {"initial": [], "resampled": []}, ledger=ledger),
        ledger=ledger,
    )
