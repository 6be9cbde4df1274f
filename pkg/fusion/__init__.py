"""多视角三角化融合、时间平滑与端到端流水线"""

from fusion.fuse import FusionConfig, fuse_frame, triangulate_views
from fusion.pipeline import Pipeline, PipelineConfig, align_streams, run_pipeline
from fusion.pose import Pose3D, read_poses, write_poses
from fusion.smoother import Smoother3D, SmootherConfig, smooth_step

__all__ = [
    "FusionConfig", "fuse_frame", "triangulate_views", "Pipeline", "PipelineConfig", "align_streams",
    "run_pipeline", "Pose3D", "read_poses", "write_poses", "Smoother3D", "SmootherConfig", "smooth_step",
]
