"""单视角二维跟踪：检测记录、IoU/匈牙利分配、SORT"""

from tracking.assignment import hungarian, iou, iou_matrix
from tracking.detection import Detection2D, read_detections, write_detections
from tracking.sort_tracker import SortTracker, TrackerConfig, Tracklet2D, predict, update

__all__ = [
    "hungarian", "iou", "iou_matrix", "Detection2D", "read_detections", "write_detections",
    "SortTracker", "TrackerConfig", "Tracklet2D", "predict", "update",
]
