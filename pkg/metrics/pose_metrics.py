#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
姿态精度：RMSE、中位数误差、PCK
================================

PCK 阈值按个体按帧计算：
- 2D：真值包围盒较长边 × fraction
- 3D：真值关键点两两最大距离 × fraction
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import pdist

from metrics.tracks import EvalMode, PoseInstance
from tracking.assignment import hungarian
from utils.errors import DegenerateThreshold, EmptyMatchSet

logger = logging.getLogger(__name__)

PCK_FRACTIONS = (0.05, 0.10)


def pose_errors(pred: np.ndarray, gt: np.ndarray) -> Tuple[float, float]:
    """
    已配对关键点的 RMSE 与中位数欧氏误差。

    Args:
        pred, gt: (N, D) 同序配对，均有效

    Raises:
        EmptyMatchSet: N = 0
    """
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ValueError(f"预测形状 {pred.shape} 与真值形状 {gt.shape} 不一致")
    if pred.size == 0:
        raise EmptyMatchSet("没有可比较的关键点对")
    d = np.linalg.norm((pred - gt).reshape(-1, pred.shape[-1]), axis=1)
    return float(np.sqrt(np.mean(d ** 2))), float(np.median(d))


def instance_threshold(gt_points: np.ndarray, gt_valid: np.ndarray, mode: EvalMode,
                       bbox: Optional[np.ndarray] = None) -> float:
    """
    单个实例的 PCK 基准长度。

    Raises:
        DegenerateThreshold: 包围盒尺寸为 0、有效关键点少于 2 个或全部重合
    """
    if mode is EvalMode.TWO_D:
        if bbox is None:
            raise DegenerateThreshold("2D PCK 需要真值包围盒")
        size = float(max(bbox[2], bbox[3]))
    else:
        pts = np.asarray(gt_points)[np.asarray(gt_valid, dtype=bool)]
        if len(pts) < 2:
            raise DegenerateThreshold("3D PCK 需要至少 2 个有效真值关键点")
        size = float(pdist(pts).max())
    if size <= 0:
        raise DegenerateThreshold(f"PCK 基准长度为 {size}")
    return size


def pck(pred: np.ndarray, gt: np.ndarray, fraction: float, mode: EvalMode,
        valid: Optional[np.ndarray] = None, gt_valid: Optional[np.ndarray] = None,
        bboxes: Optional[np.ndarray] = None) -> float:
    """
    正确关键点百分比。

    Args:
        pred, gt: (N, K, D) 已配对的实例
        fraction: 阈值比例，如 0.05 / 0.1
        valid: (N, K) 参与评估的关键点对，默认全部
        gt_valid: (N, K) 用于 3D 基准长度的真值有效掩码，默认同 valid
        bboxes: (N, 4) 2D 真值包围盒

    Returns:
        百分比 [0, 100]
    """
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if valid is None:
        valid = np.ones(gt.shape[:2], dtype=bool)
    valid = np.asarray(valid, dtype=bool)
    gt_valid = valid if gt_valid is None else np.asarray(gt_valid, dtype=bool)

    correct = 0
    total = 0
    for i in range(gt.shape[0]):
        if not valid[i].any():
            continue
        bbox = None if bboxes is None else bboxes[i]
        thr = fraction * instance_threshold(gt[i], gt_valid[i], mode, bbox)
        d = np.linalg.norm(pred[i][valid[i]] - gt[i][valid[i]], axis=1)
        correct += int(np.sum(d <= thr))
        total += int(valid[i].sum())
    if total == 0:
        raise EmptyMatchSet("没有可比较的关键点对")
    return 100.0 * correct / total


@dataclass
class KeypointPairs:
    """配对后的实例集合"""
    pred: np.ndarray
    gt: np.ndarray
    valid: np.ndarray
    gt_valid: np.ndarray
    bboxes: Optional[np.ndarray]
    n_unmatched_gt: int

    @property
    def n_instances(self) -> int:
        return self.gt.shape[0]

    def flat(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.pred[self.valid], self.gt[self.valid]


def _instance_distance(a: PoseInstance, b: PoseInstance) -> float:
    shared = a.valid & b.valid
    if not shared.any():
        return np.inf
    return float(np.linalg.norm(a.points[shared] - b.points[shared], axis=1).mean())


def _by_frame(instances: Sequence[PoseInstance]) -> Dict[int, List[PoseInstance]]:
    out: Dict[int, List[PoseInstance]] = {}
    for inst in instances:
        out.setdefault(inst.frame, []).append(inst)
    return out


def pair_instances(pred: Sequence[PoseInstance], gt: Sequence[PoseInstance], mode: EvalMode,
                   match_by: str = "nearest") -> KeypointPairs:
    """
    逐帧配对预测与真值实例。

    match_by="id"：身份相同即配对；
    match_by="nearest"：按平均关键点距离做匈牙利分配，距离须不超过该真值实例的 PCK 基准长度。
    真值身份为负（杂波）的实例不参与评估。
    """
    if match_by not in ("id", "nearest"):
        raise ValueError(f"未知的配对方式: {match_by}")
    gt = [g for g in gt if g.identity >= 0]
    pred_frames = _by_frame(pred)

    pairs: List[Tuple[PoseInstance, PoseInstance]] = []
    unmatched = 0
    for frame, gts in sorted(_by_frame(gt).items()):
        preds = pred_frames.get(frame, [])
        matched = []
        if match_by == "id":
            lookup = {p.identity: p for p in preds}
            matched = [(lookup[g.identity], g) for g in gts if g.identity in lookup]
        elif preds:
            cost = np.array([[_instance_distance(p, g) for p in preds] for g in gts])
            gates = []
            for g in gts:
                try:
                    gates.append(instance_threshold(g.points, g.valid, mode, g.bbox))
                except DegenerateThreshold:
                    gates.append(0.0)
            finite = np.where(np.isfinite(cost), cost, 1e12)
            for gi, pi in hungarian(finite):
                if cost[gi, pi] <= gates[gi]:
                    matched.append((preds[pi], gts[gi]))
        pairs.extend(matched)
        unmatched += len(gts) - len(matched)

    if not pairs:
        raise EmptyMatchSet("预测与真值之间没有任何配对实例")

    pred_arr = np.stack([p.points for p, _ in pairs])
    gt_arr = np.stack([g.points for _, g in pairs])
    valid = np.stack([p.valid & g.valid for p, g in pairs])
    gt_valid = np.stack([g.valid for _, g in pairs])
    bboxes = np.stack([g.bbox for _, g in pairs]) if mode is EvalMode.TWO_D else None
    logger.debug(f"配对实例 {len(pairs)} 个，未配对真值 {unmatched} 个")
    return KeypointPairs(pred_arr, gt_arr, valid, gt_valid, bboxes, unmatched)


def concat_pairs(parts: Sequence[KeypointPairs]) -> KeypointPairs:
    """多序列的配对结果拼接（Combined 行）"""
    if not parts:
        raise EmptyMatchSet("没有可拼接的配对结果")
    bboxes = None
    if all(p.bboxes is not None for p in parts):
        bboxes = np.concatenate([p.bboxes for p in parts])
    return KeypointPairs(
        pred=np.concatenate([p.pred for p in parts]),
        gt=np.concatenate([p.gt for p in parts]),
        valid=np.concatenate([p.valid for p in parts]),
        gt_valid=np.concatenate([p.gt_valid for p in parts]),
        bboxes=bboxes,
        n_unmatched_gt=sum(p.n_unmatched_gt for p in parts),
    )
