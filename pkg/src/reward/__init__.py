"""Position-consistency reward and training-pair export."""

from .consistency import PairScoreSummary, RewardRecord, compute_reward, score_pairs
from .pairs import PairRecord, build_pairs, prepare_pools

__all__ = [
    "build_pairs",
    "compute_reward",
    "PairRecord",
    "PairScoreSummary",
    "prepare_pools",
    "RewardRecord",
    "score_pairs",
]
