"""相机模型、三角化与关键点模式"""

from geometry.camera import (CameraModel, in_image, project, project_points, reprojection_error,
                             undistort, undistort_points)
from geometry.schema import BOTTOM_KEEL, DEFAULT_SCHEMA, KeypointSchema
from geometry.triangulation import (RefineResult, refine_point, reprojection_rms, triangulate_dlt,
                                    triangulate_point)

__all__ = [
    "CameraModel", "in_image", "project", "project_points", "reprojection_error", "undistort",
    "undistort_points", "BOTTOM_KEEL", "DEFAULT_SCHEMA", "KeypointSchema", "RefineResult",
    "refine_point", "reprojection_rms", "triangulate_dlt", "triangulate_point",
]
