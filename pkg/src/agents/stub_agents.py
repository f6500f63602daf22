"""Deterministic offline backends replaying JSON fixture tables.

Table layout (every level keyed by task_id first):

    {
      "pointwise": {"<task>": {"initial": [raw, ...], "resampled": [raw, ...]}},
      "pairwise":  {"<task>": {"votes": {"0,1": 1, "r2,0": 0},
                               "utility": {"initial": [...], "resampled": [...]}}},
      "judge":     {"<task>": {"<pool digest>" | "*": decision | raw text | [attempts]}},
      "generator": {"<task>": {"initial": [completion, ...], "resampled": [...]}}
    }

Candidates are addressed by (pass, seq), written "<seq>" for initial and
"r<seq>" for resampled candidates, so lookups survive pruning and
re-indexing. A vote entry "x,y" is 1 when x (shown first) wins; the reverse
order is derived as 1 - vote. Without an entry, the candidate with the
higher utility wins (the first shown on equal utility). A null pointwise
score or completion simulates a backend failure. Any missing key raises
StubLookupError.
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Optional, Sequence

from ..core.errors import BackendError, ConfigurationError, StubLookupError
from ..core.models import Candidate, CandidatePass, Task
from .generator_agent import GeneratorAgent, generation_stage
from .judge_agent import JudgeAgent
from .pairwise_agent import PairwiseAgent
from .pointwise_agent import PointwiseAgent

logger = logging.getLogger(__name__)

SECTIONS = ("pointwise", "pairwise", "judge", "generator")


def candidate_token(cand: Candidate) -> str:
    return str(cand.seq) if cand.pass_ == "initial" else f"r{cand.seq}"


def pool_digest(pool: Sequence[Candidate]) -> str:
    """Order-independent digest of a pool's SQL texts."""
    joined = "\x1f".join(c.sql for c in sorted(pool, key=lambda c: (c.pass_, c.seq)))
    return hashlib.sha256(joined.encode("utf-8")).hexdigest()[:16]


class StubTable:
    """Read-only lookup tables loaded from one JSON document."""

    def __init__(self, data: dict[str, Any]):
        unknown = set(data) - set(SECTIONS)
        if unknown:
            raise ConfigurationError(f"unknown stub table sections: {sorted(unknown)}")
        self.data = {section: data.get(section) or {} for section in SECTIONS}

    @classmethod
    def load(cls, path: Path) -> "StubTable":
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"stub file not found: {path}")
        try:
            with open(path, encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"stub file {path} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ConfigurationError(f"stub file {path} must hold a JSON object")
        logger.debug("[STUB] Loaded %s", path)
        return cls(data)

    def _task(self, section: str, task_id: str) -> dict:
        entry = self.data[section].get(task_id)
        if entry is None:
            raise StubLookupError(section, f"stub table has no {section} entry for task {task_id!r}")
        return entry

    def _by_pass(self, section: str, task_id: str, pass_: CandidatePass, seq: int) -> Any:
        values = self._task(section, task_id).get(pass_)
        if values is None or seq >= len(values):
            raise StubLookupError(section, f"stub table has no {section} value for {task_id!r} {pass_}#{seq}")
        return values[seq]

    def pointwise_score(self, task_id: str, cand: Candidate) -> Optional[float]:
        return self._by_pass("pointwise", task_id, cand.pass_, cand.seq)

    def completion(self, task_id: str, pass_: CandidatePass, seq: int) -> Optional[str]:
        return self._by_pass("generator", task_id, pass_, seq)

    def prefers_first(self, task_id: str, first: Candidate, second: Candidate) -> Any:
        """1/0 (or True/False) for a table verdict; a string entry is returned verbatim."""
        entry = self._task("pairwise", task_id)
        votes = entry.get("votes") or {}
        a, b = candidate_token(first), candidate_token(second)
        if f"{a},{b}" in votes:
            return votes[f"{a},{b}"]
        if f"{b},{a}" in votes:
            reverse = votes[f"{b},{a}"]
            return reverse if isinstance(reverse, str) else 1 - int(reverse)
        utility = entry.get("utility")
        if utility is not None:
            try:
                u_first = utility[first.pass_][first.seq]
                u_second = utility[second.pass_][second.seq]
            except (KeyError, IndexError, TypeError):
                raise StubLookupError("pairwise", f"stub utility missing for {task_id!r} {a} or {b}") from None
            return 1 if u_first >= u_second else 0
        raise StubLookupError("pairwise", f"stub table has no vote for {task_id!r} ({a}, {b})")

    def judge_entry(self, task_id: str, digest: str) -> Any:
        entry = self._task("judge", task_id)
        if digest in entry:
            return entry[digest]
        if "*" in entry:
            return entry["*"]
        raise StubLookupError("judge", f"stub table has no judge decision for {task_id!r} pool {digest}")


class StubPointwiseAgent(PointwiseAgent):
    def __init__(self, table: StubTable, **kwargs):
        super().__init__(**kwargs)
        self.table = table

    async def _raw_score(self, task: Task, cand: Candidate) -> float:
        score = self.table.pointwise_score(task.task_id, cand)
        if score is None:
            raise BackendError(self.stage, f"simulated failure for {task.task_id} {candidate_token(cand)}")
        return float(score)


class StubPairwiseAgent(PairwiseAgent):
    def __init__(self, table: StubTable, **kwargs):
        super().__init__(**kwargs)
        self.table = table

    async def _ask(self, task: Task, first: Candidate, second: Candidate, attempt: int) -> str:
        verdict = self.table.prefers_first(task.task_id, first, second)
        if isinstance(verdict, str):
            return verdict
        return "<answer>A</answer>" if verdict else "<answer>B</answer>"


class StubJudgeAgent(JudgeAgent):
    def __init__(self, table: StubTable, **kwargs):
        super().__init__(**kwargs)
        self.table = table

    async def _ask(self, task: Task, pool: Sequence[Candidate], attempt: int) -> str:
        entry = self.table.judge_entry(task.task_id, pool_digest(pool))
        if isinstance(entry, list):
            entry = entry[min(attempt, len(entry) - 1)]
        if isinstance(entry, dict):
            if "decision" not in entry:
                entry = {"decision": entry}
            return json.dumps(entry)
        return str(entry)


class StubGeneratorAgent(GeneratorAgent):
    def __init__(self, table: StubTable, **kwargs):
        super().__init__(**kwargs)
        self.table = table

    async def _completion(self, task: Task, pass_: CandidatePass, seq: int) -> str:
        completion = self.table.completion(task.task_id, pass_, seq)
        if completion is None:
            raise BackendError(generation_stage(pass_), f"simulated failure for {task.task_id} {pass_}#{seq}")
        return completion
