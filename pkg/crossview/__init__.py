"""首帧跨视角身份匹配"""

from crossview.matching import (CandidatePose, GlobalIdentityMap, MatchingConfig, agglomerate,
                                build_identity_map, candidate_poses, carry_over_ids, greedy_match,
                                pose_distance)

__all__ = [
    "CandidatePose", "GlobalIdentityMap", "MatchingConfig", "agglomerate", "build_identity_map",
    "candidate_poses", "carry_over_ids", "greedy_match", "pose_distance",
]
