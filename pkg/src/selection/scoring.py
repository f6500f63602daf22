"""Group scoring and final selection.

Everything here is pure: given an executed pool (with pointwise scores where
the mode needs them) and the cross-group votes, the ranking and the final
pick are fully determined by the SelectionConfig.

Score tuple per mode (all descending, then larger size, then smaller
smallest member):
    r3             (r_list, r_point), refined by one top-2 comparison
    listwise       (r_list,)
    fmv            ()
    pointwise_avg  (mean member raw score,)
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from ..core.errors import MissingVoteError
from ..core.models import Candidate, ExecGroup, GroupPreference, PairVote, PointwiseScore, SelectionConfig
from ..execution.grouping import group_candidates

logger = logging.getLogger(__name__)

VoteLookup = Mapping[tuple[int, int], float]


def vote_lookup(votes: Iterable[PairVote]) -> dict[tuple[int, int], float]:
    """v(a, b) for every recorded vote plus the complementary v(b, a) = 1 - v(a, b)."""
    lookup: dict[tuple[int, int], float] = {}
    for v in votes:
        lookup[(v.a, v.b)] = v.vote
    for (a, b), vote in list(lookup.items()):
        lookup.setdefault((b, a), 1.0 - vote)
    return lookup


def group_preference(
    gi: ExecGroup,
    gj: ExecGroup,
    votes: VoteLookup,
    sampled: bool = False,
) -> float:
    """P(g_i > g_j): mean vote over the cross pairs.

    Args:
        gi: Preferred-side group
        gj: Other group
        votes: v(a, b) lookup
        sampled: Average over the recorded pairs only (pair cap in effect)

    Raises:
        MissingVoteError: If a required vote is absent
    """
    if gi.group_id == gj.group_id:
        raise ValueError("a group is not compared with itself")
    values = []
    for a in gi.members:
        for b in gj.members:
            vote = votes.get((a, b))
            if vote is None:
                if sampled:
                    continue
                raise MissingVoteError(a, b)
            values.append(vote)
    if not values:
        raise MissingVoteError(gi.members[0], gj.members[0])
    # fsum keeps the mean independent of member order
    return math.fsum(values) / len(values)


def decisive(p: float, tau: float) -> int:
    """1 iff p >= tau."""
    return 1 if p >= tau else 0


def listwise_scores(groups: Sequence[ExecGroup], prefs: Iterable[GroupPreference]) -> dict[int, int]:
    """r_list per group_id: the number of decisive wins."""
    scores = {g.group_id: 0 for g in groups}
    seen: set[tuple[int, int]] = set()
    for pref in prefs:
        scores[pref.i] += pref.decisive
        seen.add((pref.i, pref.j))
    expected = len(groups) * (len(groups) - 1)
    if len(seen) != expected:
        raise ValueError(f"preferences cover {len(seen)} of {expected} ordered group pairs")
    return scores


def pick_representative(group: ExecGroup, scores: Optional[Mapping[int, PointwiseScore]]) -> int:
    """Member with the highest rr; ties and missing scores go to the lower cand_idx."""
    if not scores:
        return group.smallest_member
    return min(group.members, key=lambda idx: (-scores[idx].rr, idx))


def pointwise_utility(group: ExecGroup, scores: Optional[Mapping[int, PointwiseScore]]) -> tuple[float, int]:
    """(r_point, representative) with r_point = size * max member rr.

    Without scores every member has utility 1, so r_point = size.
    """
    representative = pick_representative(group, scores)
    utility = scores[representative].rr if scores else 1.0
    return group.size * utility, representative


def _tiebreak(group: ExecGroup) -> tuple:
    return (-group.size, group.smallest_member)


_SORT_KEYS = {
    "r3": lambda g: (-g.r_list, -g.r_point) + _tiebreak(g),
    "listwise": lambda g: (-g.r_list,) + _tiebreak(g),
    "pointwise_avg": lambda g: (-(g.score_avg or 0.0),) + _tiebreak(g),
    "fmv": _tiebreak,
}


def lexicographic_sort(groups: Iterable[ExecGroup], mode: str = "r3") -> list[ExecGroup]:
    """Order groups by the mode's score tuple, then by size and smallest member."""
    if mode not in _SORT_KEYS:
        raise ValueError(f"mode {mode!r} does not rank groups")
    return sorted(groups, key=_SORT_KEYS[mode])


def final_select(
    g_prime: ExecGroup,
    g_dprime: Optional[ExecGroup],
    votes: VoteLookup,
    sampled: bool = False,
    tie_to_prime: bool = False,
) -> ExecGroup:
    """Keep g' iff P(g' > g'') > 1/2 (>= 1/2 with tie_to_prime); else g''."""
    if g_dprime is None:
        return g_prime
    p = group_preference(g_prime, g_dprime, votes, sampled)
    if p > 0.5 or (tie_to_prime and p == 0.5):
        return g_prime
    logger.debug("[SELECT] Top-2 refinement swapped group %d for %d (P=%.3f)", g_prime.group_id, g_dprime.group_id, p)
    return g_dprime


def cross_group_pairs(groups: Sequence[ExecGroup]) -> list[tuple[ExecGroup, ExecGroup]]:
    """Unordered group pairs, lower group_id first."""
    ordered = sorted(groups, key=lambda g: g.group_id)
    return [(gi, gj) for x, gi in enumerate(ordered) for gj in ordered[x + 1 :]]


def is_capped(gi: ExecGroup, gj: ExecGroup, config: SelectionConfig) -> bool:
    cap = config.max_pairs_per_group_pair
    return cap is not None and gi.size * gj.size > cap


@dataclass
class Ranking:
    """Outcome of scoring one pool."""

    groups: list[ExecGroup]  # final lexicographic order
    preferences: list[GroupPreference]
    final_group_id: Optional[int]
    final_cand_idx: int


def score_map(pool: Iterable[Candidate]) -> dict[int, PointwiseScore]:
    return {c.cand_idx: c.pointwise for c in pool if c.pointwise is not None}


def _pointwise_pick(pool: Sequence[Candidate]) -> int:
    scored = [c for c in pool if c.pointwise is not None]
    if len(scored) != len(pool):
        raise ValueError("pointwise mode needs a score for every candidate")
    return min(scored, key=lambda c: (-c.pointwise.raw, c.cand_idx)).cand_idx


def rank_pool(
    pool: Sequence[Candidate],
    votes: Iterable[PairVote],
    config: SelectionConfig,
    groups: Optional[Sequence[ExecGroup]] = None,
) -> Ranking:
    """
    Score and order the execution groups of an executed pool and pick the final SQL.

    Args:
        pool: Executed candidates; pointwise scores are required by the
            pointwise, pointwise_avg and (when pointwise_enabled) r3 modes
        votes: Cross-group pair votes (r3 and listwise modes)
        config: Mode, tau and Eq. 8 override
        groups: Precomputed grouping of `pool` (recomputed when omitted)

    Returns:
        Ranking; final_group_id is None when no candidate executed
    """
    mode = config.mode
    if not pool:
        raise ValueError("cannot rank an empty pool")

    if mode == "pointwise":
        final = _pointwise_pick(pool)
        return Ranking(groups=[], preferences=[], final_group_id=None, final_cand_idx=final)

    groups = list(groups) if groups is not None else group_candidates(list(pool), config.float_tol)
    if not groups:
        return Ranking(groups=[], preferences=[], final_group_id=None, final_cand_idx=pool[0].cand_idx)

    use_scores = mode == "pointwise_avg" or (mode == "r3" and config.pointwise_enabled)
    scores = score_map(pool) if use_scores else None
    if use_scores:
        missing = [idx for g in groups for idx in g.members if idx not in scores]
        if missing:
            raise ValueError(f"mode {mode} needs pointwise scores for candidates {missing}")

    lookup = vote_lookup(votes)
    preferences: list[GroupPreference] = []
    if mode in ("r3", "listwise"):
        for gi, gj in cross_group_pairs(groups):
            sampled = is_capped(gi, gj, config)
            for left, right in ((gi, gj), (gj, gi)):
                p = group_preference(left, right, lookup, sampled)
                preferences.append(
                    GroupPreference(i=left.group_id, j=right.group_id, p=p, decisive=decisive(p, config.tau))
                )
        r_list = listwise_scores(groups, preferences)
    else:
        r_list = {g.group_id: 0 for g in groups}

    scored_groups = []
    for g in groups:
        r_point, representative = pointwise_utility(g, scores)
        score_avg = None
        if mode == "pointwise_avg":
            score_avg = math.fsum(scores[idx].raw for idx in g.members) / g.size
        scored_groups.append(
            g.model_copy(
                update={
                    "r_list": r_list[g.group_id],
                    "r_point": r_point if mode == "r3" else float(g.size),
                    "representative": representative,
                    "score_avg": score_avg,
                }
            )
        )

    ordered = lexicographic_sort(scored_groups, mode)
    winner = ordered[0]
    if mode == "r3" and len(ordered) > 1:
        runner_up = ordered[1]
        winner = final_select(
            winner,
            runner_up,
            lookup,
            sampled=is_capped(winner, runner_up, config),
            tie_to_prime=config.final_tie_to_prime,
        )

    return Ranking(
        groups=ordered,
        preferences=preferences,
        final_group_id=winner.group_id,
        final_cand_idx=winner.representative,
    )
