#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
SORT 单视角在线多目标跟踪
=========================

恒速卡尔曼滤波（包围盒状态）+ IoU 匈牙利关联。
关键点作为检测的附带数据随包围盒一起关联。
每个视角一个跟踪器实例；单个实例只能顺序处理帧。
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from filterpy.kalman import KalmanFilter
from pydantic import BaseModel, ConfigDict, Field

from tracking.assignment import hungarian, iou_matrix
from tracking.detection import Detection2D

logger = logging.getLogger(__name__)


class TrackerConfig(BaseModel):
    """SORT 参数"""

    model_config = ConfigDict(extra="forbid")

    max_age: int = Field(10, ge=1, description="未匹配多少帧后删除轨迹")
    min_hits: int = Field(3, ge=0, description="轨迹输出所需的匹配次数")
    iou_threshold: float = Field(0.3, ge=0.0, le=1.0)
    score_threshold: float = Field(0.5, ge=0.0, le=1.0)
    recover_from_last_observation: bool = Field(True, description="第二轮用最后观测框关联未匹配的轨迹")


def bbox_to_z(bbox: np.ndarray) -> np.ndarray:
    """(x, y, w, h) -> (cx, cy, 面积, 宽高比)"""
    x, y, w, h = bbox
    return np.array([x + w / 2.0, y + h / 2.0, w * h, w / float(h)])


def x_to_bbox(x: np.ndarray) -> np.ndarray:
    """卡尔曼状态 -> (x, y, w, h)；面积先截断为正"""
    cx, cy, s, r = np.asarray(x, dtype=np.float64).reshape(-1)[:4]
    s = max(s, 1e-6)
    r = max(r, 1e-6)
    w = np.sqrt(s * r)
    h = s / w
    return np.array([cx - w / 2.0, cy - h / 2.0, w, h])


class Tracklet2D:
    """
    单视角内身份稳定的检测链。

    状态 (cx, cy, s, r, vcx, vcy, vs)，宽高比 r 视为常量。
    """

    def __init__(self, detection: Detection2D, local_track_id: int):
        self.view_id = detection.view_id
        self.local_track_id = local_track_id

        self.kf = KalmanFilter(dim_x=7, dim_z=4)
        self.kf.F = np.array([
            [1, 0, 0, 0, 1, 0, 0],
            [0, 1, 0, 0, 0, 1, 0],
            [0, 0, 1, 0, 0, 0, 1],
            [0, 0, 0, 1, 0, 0, 0],
            [0, 0, 0, 0, 1, 0, 0],
            [0, 0, 0, 0, 0, 1, 0],
            [0, 0, 0, 0, 0, 0, 1],
        ], dtype=np.float64)
        self.kf.H = np.zeros((4, 7))
        self.kf.H[:, :4] = np.eye(4)
        self.kf.R = np.diag([1.0, 1.0, 10.0, 10.0])
        # 速度初始不可观，给大方差
        self.kf.P = np.diag([10.0, 10.0, 10.0, 10.0, 1e4, 1e4, 1e4])
        self.kf.Q = np.diag([1.0, 1.0, 1.0, 1.0, 1e-2, 1e-2, 1e-4])
        self.kf.x[:4, 0] = bbox_to_z(detection.bbox)

        self.age = 0
        self.hits = 1
        self.time_since_update = 0
        self.last_detection = detection
        self.last_keypoints = detection.keypoints

    @property
    def kalman_state(self) -> np.ndarray:
        return self.kf.x[:, 0].copy()

    @property
    def covariance(self) -> np.ndarray:
        return self.kf.P.copy()

    def get_state(self) -> np.ndarray:
        """当前状态对应的包围盒"""
        return x_to_bbox(self.kf.x[:, 0])

    def predict(self) -> np.ndarray:
        """推进一帧并返回预测包围盒"""
        # 面积速度会把面积推成负数时置零
        if self.kf.x[2, 0] + self.kf.x[6, 0] <= 0:
            self.kf.x[6, 0] = 0.0
        self.kf.predict()
        self.kf.P = 0.5 * (self.kf.P + self.kf.P.T)
        self.age += 1
        self.time_since_update += 1
        return self.get_state()

    def update(self, detection: Detection2D) -> "Tracklet2D":
        """卡尔曼量测更新"""
        self.kf.update(bbox_to_z(detection.bbox))
        self.kf.P = 0.5 * (self.kf.P + self.kf.P.T)
        self.hits += 1
        self.time_since_update = 0
        self.last_detection = detection
        self.last_keypoints = detection.keypoints
        return self


def predict(tracklet: Tracklet2D) -> np.ndarray:
    """轨迹预测一帧，返回预测包围盒"""
    return tracklet.predict()


def update(tracklet: Tracklet2D, detection: Detection2D) -> Tracklet2D:
    """用检测更新轨迹"""
    if detection.view_id != tracklet.view_id:
        raise ValueError(f"检测视角 {detection.view_id} 与轨迹视角 {tracklet.view_id} 不一致")
    return tracklet.update(detection)


class SortTracker:
    """单视角 SORT 跟踪器"""

    def __init__(self, view_id: str, config: Optional[TrackerConfig] = None):
        self.view_id = view_id
        self.config = config or TrackerConfig()
        self.tracklets: List[Tracklet2D] = []
        self.frame_count = 0
        self._next_id = 1

    def reset(self):
        """清空状态，局部 ID 重新从 1 开始"""
        self.tracklets = []
        self.frame_count = 0
        self._next_id = 1

    def _spawn(self, detection: Detection2D) -> Tracklet2D:
        tracklet = Tracklet2D(detection, self._next_id)
        self._next_id += 1
        self.tracklets.append(tracklet)
        logger.debug(f"视角 {self.view_id}: 新建轨迹 {tracklet.local_track_id} (帧 {detection.frame})")
        return tracklet

    def _recover(self, dets: Sequence[Detection2D], matched_dets: set, matched_trks: set):
        """
        第二轮关联：未匹配轨迹的最后一次观测框 vs 未匹配检测。

        漏检后预测框会沿旧速度漂移，最后观测框不受影响。
        """
        left_dets = [i for i in range(len(dets)) if i not in matched_dets]
        left_trks = [i for i in range(len(self.tracklets)) if i not in matched_trks]
        if not left_dets or not left_trks:
            return
        last_boxes = np.array([self.tracklets[i].last_detection.bbox for i in left_trks])
        ious = iou_matrix(np.array([dets[i].bbox for i in left_dets]), last_boxes)
        for row, col in hungarian(1.0 - ious):
            if ious[row, col] >= self.config.iou_threshold:
                d_idx, t_idx = left_dets[row], left_trks[col]
                self.tracklets[t_idx].update(dets[d_idx])
                matched_dets.add(d_idx)
                matched_trks.add(t_idx)
                logger.debug(f"视角 {self.view_id}: 轨迹 {self.tracklets[t_idx].local_track_id} 按最后观测恢复")

    def step(self, detections: Sequence[Detection2D]) -> List[Tuple[int, Detection2D]]:
        """
        处理一帧检测。

        Args:
            detections: 本视角同一帧的全部检测

        Returns:
            [(局部轨迹 ID, 检测)]，按 ID 升序；只包含本帧已匹配且达到 min_hits
            （或处于前 min_hits 帧的预热期）的轨迹
        """
        cfg = self.config
        self.frame_count += 1

        frames = {d.frame for d in detections}
        if len(frames) > 1:
            raise ValueError(f"视角 {self.view_id}: 一次 step 只能处理同一帧，收到 {sorted(frames)}")
        for det in detections:
            if det.view_id != self.view_id:
                raise ValueError(f"检测视角 {det.view_id} 与跟踪器视角 {self.view_id} 不一致")

        dets = [d for d in detections if d.score >= cfg.score_threshold]

        predicted = []
        alive = []
        for tracklet in self.tracklets:
            box = tracklet.predict()
            if np.all(np.isfinite(box)):
                predicted.append(box)
                alive.append(tracklet)
            else:
                logger.warning(f"视角 {self.view_id}: 轨迹 {tracklet.local_track_id} 状态发散，已删除")
        self.tracklets = alive

        matched_dets = set()
        matched_trks = set()
        if dets and self.tracklets:
            ious = iou_matrix(np.array([d.bbox for d in dets]), np.array(predicted))
            for d_idx, t_idx in hungarian(1.0 - ious):
                if ious[d_idx, t_idx] >= cfg.iou_threshold:
                    self.tracklets[t_idx].update(dets[d_idx])
                    matched_dets.add(d_idx)
                    matched_trks.add(t_idx)

        if cfg.recover_from_last_observation:
            self._recover(dets, matched_dets, matched_trks)

        for d_idx, det in enumerate(dets):
            if d_idx not in matched_dets:
                self._spawn(det)

        self.tracklets = [t for t in self.tracklets if t.time_since_update <= cfg.max_age]

        warm_up = self.frame_count <= cfg.min_hits
        outputs = [
            (t.local_track_id, t.last_detection)
            for t in self.tracklets
            if t.time_since_update == 0 and (t.hits >= cfg.min_hits or warm_up)
        ]
        return sorted(outputs, key=lambda item: item[0])
