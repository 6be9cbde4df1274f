"""姿态精度与跟踪评估"""

from metrics.hota_metric import ALPHAS, hota
from metrics.interpolation import interpolate_gaps, interpolate_tracks
from metrics.mot_metrics import ClearMotResult, IdentityResult, accumulate, clearmot, idf1, identity_metrics
from metrics.pose_metrics import concat_pairs, instance_threshold, pair_instances, pck, pose_errors
from metrics.reports import (MotReport, PoseReport, combine_mot, evaluate_mot, evaluate_pose, mot_table,
                             pair_for_evaluation, pose_report_from_pairs, pose_table)
from metrics.tracks import EvalMode, PoseInstance, load_instances, tracks_from_instances, tracks_from_poses

__all__ = [
    "ALPHAS", "hota", "interpolate_gaps", "interpolate_tracks", "ClearMotResult", "IdentityResult",
    "accumulate", "clearmot", "idf1", "identity_metrics", "concat_pairs", "instance_threshold", "pair_instances", "pck", "pose_errors",
    "MotReport", "PoseReport", "combine_mot", "evaluate_mot", "evaluate_pose", "mot_table",
    "pair_for_evaluation", "pose_report_from_pairs", "pose_table",
    "EvalMode", "PoseInstance", "load_instances", "tracks_from_instances", "tracks_from_poses",
]
