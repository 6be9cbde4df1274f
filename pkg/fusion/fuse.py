#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
逐帧多视角融合
==============

按全局身份收集各视角的检测，对每个关键点做 DLT + LM 三角化。
少于 2 个视角的关键点无效；某视角本帧没有对应轨迹时不参与。

视角一致性检查：参与视角 ≥ 3 时，若某视角的重投影误差中位数超过
view_reproj_gate_px（该视角的二维轨迹丢失或发生身份交换），
跳过这个视角并重新三角化，直到只剩 2 个视角或没有超限视角。
"""

import logging
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from crossview.matching import GlobalIdentityMap
from fusion.pose import Pose3D
from geometry.camera import CameraModel
from geometry.triangulation import reprojection_errors, triangulate_point
from tracking.detection import Detection2D
from utils.errors import GeometryError

logger = logging.getLogger(__name__)

# {视角: {局部 ID: 检测}}
FrameAssociations = Mapping[str, Mapping[int, Detection2D]]


class FusionConfig(BaseModel):
    """融合参数"""

    model_config = ConfigDict(extra="forbid")

    keypoint_conf_threshold: float = Field(0.0, ge=0.0, le=1.0)
    view_check: bool = True
    view_reproj_gate_px: float = Field(40.0, gt=0.0)


def triangulate_views(
    detections: Mapping[str, Detection2D],
    calib: Mapping[str, CameraModel],
    conf_threshold: float = 0.0,
) -> Tuple[np.ndarray, np.ndarray, Dict[str, List[float]]]:
    """
    对一个个体的多视角检测逐关键点三角化。

    Returns:
        (points (K, 3), valid (K,), {视角: 该视角在有效关键点上的重投影误差列表})
    """
    views = sorted(detections)
    n_kp = detections[views[0]].keypoints.shape[0] if views else 0
    points = np.zeros((n_kp, 3))
    valid = np.zeros(n_kp, dtype=bool)
    per_view_errors: Dict[str, List[float]] = {v: [] for v in views}
    if len(views) < 2:
        return points, valid, per_view_errors

    usable = np.array([detections[v].usable_keypoints(conf_threshold) for v in views])
    for k in range(n_kp):
        seen = [v for v, ok in zip(views, usable[:, k]) if ok]
        if len(seen) < 2:
            continue
        cams = [calib[v] for v in seen]
        obs = [detections[v].keypoints[k, :2] for v in seen]
        try:
            result = triangulate_point(cams, obs)
        except GeometryError as e:
            logger.debug(f"关键点 {k} 三角化失败 (视角 {seen}): {e}")
            continue
        points[k] = result.point
        valid[k] = True
        for v, err in zip(seen, reprojection_errors(cams, obs, result.point)):
            per_view_errors[v].append(float(err))
    return points, valid, per_view_errors


def _fuse_individual(
    detections: Dict[str, Detection2D],
    calib: Mapping[str, CameraModel],
    config: FusionConfig,
) -> Tuple[np.ndarray, np.ndarray, Tuple[str, ...]]:
    dets = dict(detections)
    while True:
        points, valid, errors = triangulate_views(dets, calib, config.keypoint_conf_threshold)
        if not config.view_check or len(dets) < 3:
            break
        medians = {v: float(np.median(e)) for v, e in errors.items() if e}
        if not medians:
            break
        worst = max(sorted(medians), key=lambda v: medians[v])
        if medians[worst] <= config.view_reproj_gate_px:
            break
        logger.debug(f"视角 {worst} 重投影误差中位数 {medians[worst]:.1f}px 超限，跳过该视角")
        del dets[worst]

    views = tuple(v for v, e in sorted(errors.items()) if e)
    return points, valid, views


def fuse_frame(
    frame_associations: FrameAssociations,
    id_map: GlobalIdentityMap,
    calib: Mapping[str, CameraModel],
    config: Optional[FusionConfig] = None,
    frame: Optional[int] = None,
) -> List[Pose3D]:
    """
    一帧的全部全局身份 -> 三维姿态。

    Args:
        frame_associations: {视角: {局部 ID: 检测}}，来自各视角跟踪器
        id_map: 首帧建立的身份映射
        calib: {视角: 相机}
        frame: 帧号；None 时从检测推断

    Returns:
        按全局 ID 升序，映射中的每个全局 ID 一个 Pose3D；
        本帧少于 2 个视角的个体全部关键点无效
    """
    config = config or FusionConfig()

    by_global: Dict[int, Dict[str, Detection2D]] = {}
    n_kp = None
    for view in sorted(frame_associations):
        for local_id, det in frame_associations[view].items():
            if frame is None:
                frame = det.frame
            n_kp = det.keypoints.shape[0]
            gid = id_map.global_of(view, local_id)
            if gid is not None:
                by_global.setdefault(gid, {})[view] = det
    frame = 0 if frame is None else frame

    poses = []
    for gid in id_map.global_ids():
        dets = by_global.get(gid, {})
        if len(dets) < 2:
            poses.append(Pose3D.invalid(frame, gid, n_kp) if n_kp else Pose3D.invalid(frame, gid))
            continue
        points, valid, views = _fuse_individual(dets, calib, config)
        poses.append(Pose3D(frame, gid, points, valid, views))
    return poses
