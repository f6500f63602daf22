"""Shared domain types for candidate selection.

Every type is an immutable pydantic model; JSON field names are snake_case
and traces are written one object per line. Candidate pools are ordered
tuples so index-based tie-breaking stays deterministic.
"""

from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

CandidatePass = Literal["initial", "resampled"]
ExecStatus = Literal["ok", "sql_error", "timeout"]
OrderPolicy = Literal["single", "dual"]
ResamplingMode = Literal["off", "always", "agentic"]
ResampleMerge = Literal["replace", "union"]
SelectionMode = Literal["r3", "fmv", "pointwise", "pointwise_avg", "listwise"]

# A normalized result cell. Blobs are carried as "blob:<sha256 hex>".
Cell = Union[None, bool, int, float, str]
Row = tuple[Cell, ...]


class Record(BaseModel):
    """Frozen base with alias-aware JSON helpers."""

    # non-finite reals are written as Infinity/NaN, not null
    model_config = ConfigDict(frozen=True, populate_by_name=True, extra="forbid", ser_json_inf_nan="constants")

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True)

    def to_dict(self) -> dict:
        return self.model_dump(mode="json", by_alias=True)

    @classmethod
    def from_json(cls, text: str):
        return cls.model_validate_json(text)


class Task(Record):
    """One benchmark item."""

    task_id: str
    question: str
    evidence: str = ""
    db_ref: Path
    gold_sql: Optional[str] = None
    dialect: Literal["sqlite"] = "sqlite"

    @property
    def question_with_evidence(self) -> str:
        if self.evidence.strip():
            return f"{self.evidence.strip()}\n{self.question}"
        return self.question


class ExecOutcome(Record):
    """Result of running one SQL string against a read-only database."""

    status: ExecStatus
    column_count: int = 0
    rows: tuple[Row, ...] = ()
    fingerprint: Optional[str] = None  # lowercase hex sha256
    error_message: Optional[str] = None
    elapsed_ms: float = 0.0

    @model_validator(mode="after")
    def _check_status(self) -> "ExecOutcome":
        if self.status == "ok":
            if not self.fingerprint or self.error_message is not None:
                raise ValueError("ok outcome needs a fingerprint and no error message")
        elif self.rows or self.fingerprint is not None:
            raise ValueError(f"{self.status} outcome must not carry rows or a fingerprint")
        return self

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def row_count(self) -> int:
        return len(self.rows)


class PointwiseScore(Record):
    """Pointwise ranker output for one candidate."""

    raw: float
    rank: int = Field(ge=1)
    rr: float

    @model_validator(mode="after")
    def _check_rr(self) -> "PointwiseScore":
        if self.rr != 1.0 / self.rank:
            raise ValueError("rr must equal 1/rank")
        return self

    @classmethod
    def at_rank(cls, raw: float, rank: int) -> "PointwiseScore":
        return cls(raw=raw, rank=rank, rr=1.0 / rank)


class Candidate(Record):
    """One generated SQL string with its provenance and evaluation state."""

    cand_idx: int = Field(ge=0)
    seq: int = Field(default=0, ge=0)
    sql: str
    pass_: CandidatePass = Field(default="initial", alias="pass")
    outcome: Optional[ExecOutcome] = None
    pointwise: Optional[PointwiseScore] = None

    @field_validator("sql")
    @classmethod
    def _non_empty(cls, v: str) -> str:
        if not v.strip():
            raise ValueError("candidate SQL is empty")
        return v


class ExecGroup(Record):
    """An execution-equivalence class of candidates and its scores."""

    group_id: int = Field(ge=0)
    fingerprint: str
    members: tuple[int, ...]
    size: int
    representative: int
    r_list: int = 0
    r_point: float = 0.0
    score_avg: Optional[float] = None  # mean member raw score, pointwise_avg mode

    @model_validator(mode="after")
    def _check_members(self) -> "ExecGroup":
        if not self.members or self.size != len(self.members):
            raise ValueError("size must equal the (non-zero) member count")
        if self.representative not in self.members:
            raise ValueError("representative must be a member")
        return self

    @property
    def smallest_member(self) -> int:
        return min(self.members)


class PairVote(Record):
    """Aggregated ranker vote that candidate `a` beats candidate `b`."""

    a: int
    b: int
    vote: float = Field(ge=0.0, le=1.0)
    order_policy: OrderPolicy
    flagged: bool = False  # at least one backend answer was unparseable

    @model_validator(mode="after")
    def _distinct(self) -> "PairVote":
        if self.a == self.b:
            raise ValueError("a vote needs two distinct candidates")
        return self


class GroupPreference(Record):
    """P(g_i > g_j) and whether it clears the decisive threshold."""

    i: int
    j: int
    p: float = Field(ge=0.0, le=1.0)
    decisive: Literal[0, 1]

    @model_validator(mode="after")
    def _distinct(self) -> "GroupPreference":
        if self.i == self.j:
            raise ValueError("a preference needs two distinct groups")
        return self


class JudgeDecision(Record):
    """Gatekeeper verdict on whether a pool likely holds a correct SQL."""

    likely_has_correct: bool
    confidence: float = Field(ge=0.0, le=1.0)
    reason_tags: tuple[str, ...] = ()
    best_cand_idx: Optional[int] = None
    notes: Optional[str] = Field(default=None, max_length=200)
    flagged: bool = False  # parse fallback was used


class SelectionConfig(Record):
    """All knobs of one selection run."""

    tau: float = Field(default=0.05, ge=0.0, le=1.0)
    n: int = Field(default=32, ge=1)
    m: int = Field(default=1024, ge=1)
    lambda_c: float = Field(default=0.5, ge=0.0)
    order_policy: OrderPolicy = "dual"
    float_tol: float = Field(default=1e-6, ge=0.0)
    exec_timeout_ms: int = Field(default=30000, ge=1)
    resampling: ResamplingMode = "agentic"
    mode: SelectionMode = "r3"
    order_sensitive: bool = False
    max_rows: int = Field(default=100000, ge=1)
    max_pairs_per_group_pair: Optional[int] = Field(default=None, ge=1)
    resample_merge: ResampleMerge = "replace"
    prune: bool = True
    pointwise_enabled: bool = True
    final_tie_to_prime: bool = False
    judge_preview_rows: int = Field(default=5, ge=1)
    token_budget: int = Field(default=8192, ge=256)

    @model_validator(mode="after")
    def _check_pool_sizes(self) -> "SelectionConfig":
        if self.m < self.n:
            raise ValueError("resample budget m must be >= pool size n")
        return self


class SelectionTrace(Record):
    """Audit record of one pipeline run."""

    task_id: str
    mode: SelectionMode = "r3"
    pool_before: tuple[Candidate, ...]
    pool_after: tuple[Candidate, ...]
    judge: Optional[JudgeDecision] = None
    resampled: bool = False
    groups: tuple[ExecGroup, ...] = ()  # final lexicographic order
    preferences: tuple[GroupPreference, ...] = ()
    votes: tuple[PairVote, ...] = ()
    final_group_id: Optional[int] = None
    final_cand_idx: int
    chosen_sql: str
    timings: dict[str, float] = Field(default_factory=dict)
    flags: tuple[str, ...] = ()
    call_counts: dict[str, int] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _final_in_group(self) -> "SelectionTrace":
        if self.final_group_id is not None:
            group = next((g for g in self.groups if g.group_id == self.final_group_id), None)
            if group is None or self.final_cand_idx not in group.members:
                raise ValueError("final candidate must belong to the final group")
        return self

    def candidate(self, cand_idx: int) -> Candidate:
        return next(c for c in self.pool_after if c.cand_idx == cand_idx)

    def group(self, group_id: int) -> ExecGroup:
        return next(g for g in self.groups if g.group_id == group_id)
