#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
评估用轨迹容器
==============

Tracks = {身份: {帧号: 观测}}，观测是 2D 包围盒 (x, y, w, h) 或 3D 点 (x, y, z)。
PoseInstance 是一帧中一个个体的全部关键点，用于姿态精度评估。
"""

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

from fusion.pose import Pose3D
from geometry.schema import BOTTOM_KEEL, DEFAULT_SCHEMA
from tracking.assignment import iou_matrix
from utils.atomic_io import read_jsonl
from utils.errors import SchemaError

logger = logging.getLogger(__name__)

Tracks = Dict[int, Dict[int, np.ndarray]]

# 3D 跟踪的距离门限 (mm) 与 2D 的 IoU 门限
GATE_3D_MM = 30.0
GATE_2D_IOU = 0.5


class EvalMode(Enum):
    """评估空间"""
    TWO_D = "2d"
    THREE_D = "3d"

    @classmethod
    def parse(cls, value: Union[str, "EvalMode"]) -> "EvalMode":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


def default_gate(mode: EvalMode) -> float:
    """距离门限：2D 为 1 - IoU 的上限，3D 为 mm"""
    return 1.0 - GATE_2D_IOU if mode is EvalMode.TWO_D else GATE_3D_MM


def distance_matrix(gt_obs: np.ndarray, pred_obs: np.ndarray, mode: EvalMode) -> np.ndarray:
    """2D: 1 - IoU；3D: 欧氏距离 (mm)"""
    gt_obs = np.asarray(gt_obs, dtype=np.float64)
    pred_obs = np.asarray(pred_obs, dtype=np.float64)
    if len(gt_obs) == 0 or len(pred_obs) == 0:
        return np.zeros((len(gt_obs), len(pred_obs)))
    if mode is EvalMode.TWO_D:
        return 1.0 - iou_matrix(gt_obs, pred_obs)
    return np.linalg.norm(gt_obs[:, None, :] - pred_obs[None, :, :], axis=2)


def similarity_from_distance(dist: np.ndarray, mode: EvalMode, gate: float) -> np.ndarray:
    """2D: IoU；3D: 1 - d / gate，截断到 [0, 1]"""
    if mode is EvalMode.TWO_D:
        return 1.0 - dist
    return np.clip(1.0 - dist / gate, 0.0, 1.0)


@dataclass
class FrameData:
    """一帧的真值与预测"""
    frame: int
    gt_ids: np.ndarray
    pred_ids: np.ndarray
    dist: np.ndarray


def frames_of(tracks: Tracks) -> set:
    return {f for obs in tracks.values() for f in obs}


def build_frames(gt_tracks: Tracks, pred_tracks: Tracks, mode: EvalMode) -> List[FrameData]:
    """按帧展开真值与预测，帧范围取两者并集"""
    frames = sorted(frames_of(gt_tracks) | frames_of(pred_tracks))
    by_frame_gt: Dict[int, List[Tuple[int, np.ndarray]]] = {f: [] for f in frames}
    by_frame_pred: Dict[int, List[Tuple[int, np.ndarray]]] = {f: [] for f in frames}
    for tid in sorted(gt_tracks):
        for f, obs in gt_tracks[tid].items():
            by_frame_gt[f].append((tid, obs))
    for tid in sorted(pred_tracks):
        for f, obs in pred_tracks[tid].items():
            by_frame_pred[f].append((tid, obs))

    out = []
    for f in frames:
        gt = by_frame_gt[f]
        pred = by_frame_pred[f]
        out.append(FrameData(
            frame=f,
            gt_ids=np.array([t for t, _ in gt], dtype=np.int64),
            pred_ids=np.array([t for t, _ in pred], dtype=np.int64),
            dist=distance_matrix([o for _, o in gt], [o for _, o in pred], mode),
        ))
    return out


def tracks_from_poses(poses: Iterable[Pose3D], keypoint: str = BOTTOM_KEEL) -> Tracks:
    """三维姿态 -> 单关键点轨迹，跳过该关键点无效的帧"""
    k = DEFAULT_SCHEMA.index(keypoint)
    tracks: Tracks = {}
    for pose in poses:
        if pose.valid[k]:
            tracks.setdefault(pose.global_id, {})[pose.frame] = pose.points[k].copy()
    return tracks


def tracks_from_box_records(records: Iterable[dict]) -> Tracks:
    """2D 轨迹记录 {frame, id | gt_id, bbox} -> 包围盒轨迹；id < 0 (杂波) 的记录跳过"""
    tracks: Tracks = {}
    for rec in records:
        tid = int(rec["id"] if "id" in rec else rec["gt_id"])
        if tid < 0:
            continue
        tracks.setdefault(tid, {})[int(rec["frame"])] = np.asarray(rec["bbox"], dtype=np.float64)
    return tracks


@dataclass
class PoseInstance:
    """
    一帧中一个个体的关键点。

    Attributes:
        points: (K, D)，D 为 2 或 3
        valid: (K,)
        bbox: 2D 时的真值包围盒 (x, y, w, h)
    """
    frame: int
    identity: int
    points: np.ndarray
    valid: np.ndarray
    bbox: Optional[np.ndarray] = None


def instance_from_record(record: dict, mode: EvalMode) -> PoseInstance:
    """
    解析姿态文件、二维轨迹、检测或 2D 真值边车文件中的一行。
    检测记录没有身份，记为 -1。
    """
    try:
        if mode is EvalMode.THREE_D:
            pose = Pose3D.from_record(record)
            return PoseInstance(pose.frame, pose.global_id, pose.points, pose.valid)
        kp = np.asarray(record["kp"], dtype=np.float64)
        identity = int(record.get("id", record.get("gt_id", -1)))
        return PoseInstance(int(record["frame"]), identity, kp[:, :2], kp[:, 3] > 0,
                            np.asarray(record["bbox"], dtype=np.float64))
    except (KeyError, TypeError, ValueError, IndexError) as e:
        raise SchemaError(f"评估记录格式错误: {e}") from e


def load_instances(path: Union[str, Path], mode: EvalMode) -> List[PoseInstance]:
    """读取评估文件；2D 真值边车中 det = -1 (漏检) 的行同样保留为真值"""
    instances = []
    try:
        for lineno, record in read_jsonl(path):
            try:
                instances.append(instance_from_record(record, mode))
            except SchemaError as e:
                raise SchemaError(f"{path}:{lineno}: {e}") from e
    except ValueError as e:
        raise SchemaError(f"{path}: JSON 解析失败: {e}") from e
    return instances


def tracks_from_instances(instances: Iterable[PoseInstance], mode: EvalMode) -> Tracks:
    """评估实例 -> 跟踪轨迹：3D 取 bottom_keel，2D 取包围盒"""
    if mode is EvalMode.THREE_D:
        k = DEFAULT_SCHEMA.index(BOTTOM_KEEL)
        tracks: Tracks = {}
        for inst in instances:
            if inst.valid[k]:
                tracks.setdefault(inst.identity, {})[inst.frame] = inst.points[k].copy()
        return tracks
    return tracks_from_box_records(
        {"frame": inst.frame, "id": inst.identity, "bbox": inst.bbox} for inst in instances)
