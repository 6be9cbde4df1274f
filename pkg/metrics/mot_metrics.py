#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
CLEAR-MOT 与身份指标 (IDF1)
===========================

逐帧把真值与预测送入 motmetrics 的 MOTAccumulator，门限外的配对记为 NaN：
2D 为 1 - IoU ≤ 0.5，3D 为欧氏距离 ≤ 30 mm。
累加器先延续上一帧的匹配，再对剩余配对做最大匹配数、最小距离和的指派；
IDS 在真值当前匹配的预测 ID 与其上一次匹配的预测 ID 不同时计数。
IDF1 由 motmetrics 在整段序列上做一次全局一对一身份分配。

MOTP 归一化到 [0, 1]：2D 为匹配对的平均 IoU，3D 为平均 1 - d / 门限。
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Union

import motmetrics as mm
import numpy as np

from metrics.tracks import EvalMode, FrameData, Tracks, build_frames, default_gate, similarity_from_distance

logger = logging.getLogger(__name__)

CLEAR_METRICS = [
    "num_frames", "num_unique_objects", "num_detections", "num_false_positives", "num_misses",
    "num_switches", "num_fragmentations", "mostly_tracked", "partially_tracked", "mostly_lost",
    "mota", "recall", "precision",
]
IDENTITY_METRICS = ["idf1", "idp", "idr", "idtp", "idfp", "idfn"]
MATCH_EVENTS = ("MATCH", "SWITCH")


@dataclass
class ClearMotResult:
    mota: float
    motp: float
    recall: float
    precision: float
    mt: float
    ml: float
    fpf: float
    ids: int
    frag: int
    # 原始计数，合并多序列时使用
    tp: int = 0
    fp: int = 0
    fn: int = 0
    num_gt_dets: int = 0
    n_frames: int = 0
    n_gt_ids: int = 0
    mt_count: int = 0
    ml_count: int = 0
    pt_count: int = 0
    motp_sum: float = 0.0


@dataclass
class IdentityResult:
    idf1: float
    idp: float
    idr: float
    idtp: int
    idfp: int
    idfn: int


def _ratio(num: float, den: float) -> float:
    return float(num) / float(den) if den > 0 else 0.0


def _finite(value) -> float:
    """motmetrics 在分母为 0 时给出 NaN 或 inf，这里统一记为 0"""
    value = float(value)
    return value if np.isfinite(value) else 0.0


def accumulate(frames: List[FrameData], gate: float) -> mm.MOTAccumulator:
    """
    逐帧填充 motmetrics 累加器。

    Args:
        frames: build_frames 的输出
        gate: 距离门限（含），门限外的配对记为 NaN
    """
    acc = mm.MOTAccumulator(auto_id=False)
    for fd in frames:
        dist = np.where(fd.dist <= gate, fd.dist, np.nan) if fd.dist.size else fd.dist
        acc.update(fd.gt_ids.tolist(), fd.pred_ids.tolist(), dist, frameid=int(fd.frame))
    return acc


def _compute(acc: mm.MOTAccumulator, metrics: List[str]) -> Dict[str, float]:
    mh = mm.metrics.create()
    summary = mh.compute(acc, metrics=metrics, name="seq")
    return {name: summary.loc["seq", name] for name in metrics}


def _matched_distances(acc: mm.MOTAccumulator) -> np.ndarray:
    events = acc.mot_events
    if events.empty:
        return np.zeros(0)
    return events.loc[events["Type"].isin(MATCH_EVENTS), "D"].to_numpy(dtype=np.float64)


def _empty_clear() -> ClearMotResult:
    return ClearMotResult(mota=0.0, motp=0.0, recall=0.0, precision=0.0, mt=0.0, ml=0.0, fpf=0.0, ids=0, frag=0)


def clearmot(gt_tracks: Tracks, pred_tracks: Tracks, dist: Union[str, EvalMode] = EvalMode.THREE_D,
             gate: Optional[float] = None, frames: Optional[List[FrameData]] = None,
             acc: Optional[mm.MOTAccumulator] = None) -> ClearMotResult:
    """
    CLEAR-MOT 指标。

    Args:
        gt_tracks, pred_tracks: {身份: {帧号: 观测}}
        dist: 2d (1 - IoU) 或 3d (欧氏距离 mm)
        gate: 距离门限；默认 2D 为 0.5 (IoU ≥ 0.5)，3D 为 30 mm
        acc: 已填充的累加器，与 identity_metrics 共用时传入

    Returns:
        ClearMotResult；MOTA 不截断，可为负
    """
    mode = EvalMode.parse(dist)
    gate = default_gate(mode) if gate is None else gate
    frames = build_frames(gt_tracks, pred_tracks, mode) if frames is None else frames
    if not frames:
        return _empty_clear()
    acc = accumulate(frames, gate) if acc is None else acc

    row = _compute(acc, CLEAR_METRICS)
    tp, fp, fn = int(row["num_detections"]), int(row["num_false_positives"]), int(row["num_misses"])
    n_gt_ids = int(row["num_unique_objects"])
    mt_count, ml_count = int(row["mostly_tracked"]), int(row["mostly_lost"])
    n_frames = int(row["num_frames"])
    motp_sum = float(similarity_from_distance(_matched_distances(acc), mode, gate).sum())

    return ClearMotResult(
        mota=_finite(row["mota"]) if tp + fn > 0 else 0.0,
        motp=_ratio(motp_sum, tp),
        recall=_finite(row["recall"]),
        precision=_finite(row["precision"]),
        mt=_ratio(mt_count, n_gt_ids),
        ml=_ratio(ml_count, n_gt_ids),
        fpf=_ratio(fp, n_frames),
        ids=int(row["num_switches"]),
        frag=int(row["num_fragmentations"]),
        tp=tp, fp=fp, fn=fn, num_gt_dets=tp + fn, n_frames=n_frames, n_gt_ids=n_gt_ids,
        mt_count=mt_count, ml_count=ml_count, pt_count=int(row["partially_tracked"]),
        motp_sum=motp_sum,
    )


def identity_metrics(gt_tracks: Tracks, pred_tracks: Tracks, dist: Union[str, EvalMode] = EvalMode.THREE_D,
                     gate: Optional[float] = None, frames: Optional[List[FrameData]] = None,
                     acc: Optional[mm.MOTAccumulator] = None) -> IdentityResult:
    """IDF1 / IDP / IDR，全局一对一分配最大化 IDTP"""
    mode = EvalMode.parse(dist)
    gate = default_gate(mode) if gate is None else gate
    frames = build_frames(gt_tracks, pred_tracks, mode) if frames is None else frames
    if not frames:
        return IdentityResult(idf1=0.0, idp=0.0, idr=0.0, idtp=0, idfp=0, idfn=0)
    acc = accumulate(frames, gate) if acc is None else acc

    row = _compute(acc, IDENTITY_METRICS)
    return IdentityResult(
        idf1=_finite(row["idf1"]),
        idp=_finite(row["idp"]),
        idr=_finite(row["idr"]),
        idtp=int(round(row["idtp"])),
        idfp=int(round(row["idfp"])),
        idfn=int(round(row["idfn"])),
    )


def idf1(gt_tracks: Tracks, pred_tracks: Tracks, dist: Union[str, EvalMode] = EvalMode.THREE_D,
         gate: Optional[float] = None) -> float:
    return identity_metrics(gt_tracks, pred_tracks, dist, gate).idf1
