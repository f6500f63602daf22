"""Generator role: samples SQL candidates for a task."""

import asyncio
import logging
import re
from abc import abstractmethod

from ..core.errors import BackendError, StubLookupError
from ..core.models import Candidate, CandidatePass, Task
from .base_agent import BaseAgent

logger = logging.getLogger(__name__)

EMPTY_SQL_MARKER = "-- <empty completion>"

_ANSWER_BLOCK_RE = re.compile(r"<answer>([\s\S]*?)</answer>", re.IGNORECASE)
_SQL_FENCE_RE = re.compile(r"```sql\s*([\s\S]*?)\s*```", re.IGNORECASE)


def extract_sql(completion: str) -> str:
    """SQL from a completion.

    Precedence: last ```sql fence inside the last <answer> block, then the
    last ```sql fence anywhere, then the whole completion trimmed. An empty
    result becomes EMPTY_SQL_MARKER, which executes to sql_error.
    """
    text = completion or ""
    sql = ""
    answers = _ANSWER_BLOCK_RE.findall(text)
    if answers:
        fences = _SQL_FENCE_RE.findall(answers[-1])
        if fences:
            sql = fences[-1]
    if not sql:
        fences = _SQL_FENCE_RE.findall(text)
        sql = fences[-1] if fences else text
    sql = sql.strip()
    return sql if sql else EMPTY_SQL_MARKER


def generation_stage(pass_: CandidatePass) -> str:
    return "generate_initial" if pass_ == "initial" else "generate_resample"


class GeneratorAgent(BaseAgent):
    """Produces candidate SQL strings; seq identifies a sample within its pass."""

    stage = "generate_initial"

    @abstractmethod
    async def _completion(self, task: Task, pass_: CandidatePass, seq: int) -> str:
        """Raw completion for sample `seq` of `pass_`."""

    async def _one(self, task: Task, pass_: CandidatePass, seq: int) -> str:
        self.ledger.record_call(generation_stage(pass_), task.task_id)
        return await self._completion(task, pass_, seq)

    async def generate(
        self,
        task: Task,
        count: int,
        pass_: CandidatePass = "initial",
        allow_partial: bool = False,
    ) -> list[Candidate]:
        """
        Generate `count` candidates with seq 0..count-1.

        Args:
            task: Task to solve
            count: Number of samples
            pass_: initial or resampled
            allow_partial: Return the successful samples instead of raising

        Returns:
            Candidates in seq order, cand_idx dense from 0

        Raises:
            BackendError: If a sample fails and allow_partial is False
        """
        if count < 1:
            raise ValueError("count must be >= 1")

        results = await asyncio.gather(
            *(self._one(task, pass_, seq) for seq in range(count)),
            return_exceptions=True,
        )

        failed = {seq for seq, r in enumerate(results) if isinstance(r, BaseException)}
        if failed:
            first = next(r for r in results if isinstance(r, BaseException))
            logger.warning(
                "[GENERATE] %s: %d of %d %s samples failed: %s",
                task.task_id,
                len(failed),
                count,
                pass_,
                first,
            )
            for error in results:
                if isinstance(error, BaseException) and (
                    isinstance(error, StubLookupError) or not isinstance(error, BackendError)
                ):
                    raise error
            if not allow_partial:
                raise BackendError(generation_stage(pass_), f"generation failed for task {task.task_id}: {first}", failed)

        candidates = []
        for seq, completion in enumerate(results):
            if isinstance(completion, BaseException):
                continue
            candidates.append(
                Candidate(
                    cand_idx=len(candidates),
                    seq=seq,
                    sql=extract_sql(completion),
                    pass_=pass_,
                )
            )
        logger.info("[GENERATE] %s: %d %s candidates", task.task_id, len(candidates), pass_)
        return candidates
