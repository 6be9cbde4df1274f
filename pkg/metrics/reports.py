#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
评估报告
========

PoseReport 列顺序: RMSE | Median | PCK05 | PCK10
MotReport 列顺序: HOTA | MOTA | MOTP | Rcll | Prcn | MT | ML | FPF | IDS | Frag | IDF1
多序列合并时计数相加、比例重新计算（Combined 行）。
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from metrics.hota_metric import HotaParts, hota_parts
from metrics.interpolation import interpolate_tracks
from metrics.mot_metrics import ClearMotResult, accumulate, clearmot, identity_metrics
from metrics.pose_metrics import PCK_FRACTIONS, KeypointPairs, pair_instances, pck, pose_errors
from metrics.tracks import EvalMode, PoseInstance, Tracks, build_frames, default_gate, frames_of
from utils.errors import EvalMismatch
from utils.report_table import render_table

logger = logging.getLogger(__name__)

POSE_HEADERS = ["RMSE", "Median", "PCK05", "PCK10"]
MOT_HEADERS = ["HOTA", "MOTA", "MOTP", "Rcll", "Prcn", "MT", "ML", "FPF", "IDS", "Frag", "IDF1"]


@dataclass
class PoseReport:
    rmse: float
    median: float
    pck05: float
    pck10: float
    n_keypoints: int
    n_unmatched_gt: int = 0

    def row(self) -> List[Any]:
        return [self.rmse, self.median, self.pck05, self.pck10]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class MotReport:
    hota: float
    mota: float
    motp: float
    recall: float
    precision: float
    mt: float
    ml: float
    fpf: float
    ids: int
    frag: int
    idf1: float
    idp: float = 0.0
    idr: float = 0.0
    clear: Optional[ClearMotResult] = field(default=None, repr=False)
    identity_counts: Tuple[int, int, int] = field(default=(0, 0, 0), repr=False)
    hota_parts: Optional[HotaParts] = field(default=None, repr=False)

    def row(self) -> List[Any]:
        return [self.hota, self.mota, self.motp, self.recall, self.precision, self.mt, self.ml,
                self.fpf, self.ids, self.frag, self.idf1]

    def to_dict(self) -> Dict[str, Any]:
        out = {k: getattr(self, k) for k in
               ("hota", "mota", "motp", "recall", "precision", "mt", "ml", "fpf", "ids", "frag",
                "idf1", "idp", "idr")}
        if self.clear is not None:
            c = self.clear
            out.update(tp=c.tp, fp=c.fp, fn=c.fn, num_gt_dets=c.num_gt_dets, n_frames=c.n_frames,
                       n_gt_ids=c.n_gt_ids, mt_count=c.mt_count, ml_count=c.ml_count, pt_count=c.pt_count)
        return out


def pose_report_from_pairs(pairs: KeypointPairs, mode: Union[str, EvalMode]) -> PoseReport:
    mode = EvalMode.parse(mode)
    flat_pred, flat_gt = pairs.flat()
    rmse, median = pose_errors(flat_pred, flat_gt)
    pcks = [pck(pairs.pred, pairs.gt, f, mode, pairs.valid, pairs.gt_valid, pairs.bboxes)
            for f in PCK_FRACTIONS]
    return PoseReport(rmse, median, pcks[0], pcks[1], int(pairs.valid.sum()), pairs.n_unmatched_gt)


def pair_for_evaluation(pred: Sequence[PoseInstance], gt: Sequence[PoseInstance],
                        mode: Union[str, EvalMode], match_by: str = "nearest") -> KeypointPairs:
    """检查帧重叠后配对"""
    mode = EvalMode.parse(mode)
    if not ({p.frame for p in pred} & {g.frame for g in gt}):
        raise EvalMismatch("预测与真值没有重叠帧")
    return pair_instances(pred, gt, mode, match_by)


def evaluate_pose(pred: Sequence[PoseInstance], gt: Sequence[PoseInstance],
                  mode: Union[str, EvalMode], match_by: str = "nearest") -> PoseReport:
    """配对后计算 RMSE、中位数与 PCK05/PCK10"""
    return pose_report_from_pairs(pair_for_evaluation(pred, gt, mode, match_by), mode)


def evaluate_mot(gt_tracks: Tracks, pred_tracks: Tracks, mode: Union[str, EvalMode],
                 gate: Optional[float] = None, interpolate_gt: bool = True) -> MotReport:
    """
    一条序列的全部跟踪指标。

    Args:
        interpolate_gt: 先对真值轨迹做缺口线性插值

    Raises:
        EvalMismatch: 预测与真值没有重叠帧
    """
    mode = EvalMode.parse(mode)
    gate = default_gate(mode) if gate is None else gate
    if pred_tracks and not (frames_of(gt_tracks) & frames_of(pred_tracks)):
        raise EvalMismatch("预测与真值没有重叠帧")
    if interpolate_gt:
        gt_tracks = interpolate_tracks(gt_tracks)

    frames = build_frames(gt_tracks, pred_tracks, mode)
    acc = accumulate(frames, gate) if frames else None
    clear = clearmot(gt_tracks, pred_tracks, mode, gate, frames, acc)
    ident = identity_metrics(gt_tracks, pred_tracks, mode, gate, frames, acc)
    parts = hota_parts(frames, mode, gate)
    return MotReport(
        hota=parts.hota, mota=clear.mota, motp=clear.motp, recall=clear.recall,
        precision=clear.precision, mt=clear.mt, ml=clear.ml, fpf=clear.fpf, ids=clear.ids,
        frag=clear.frag, idf1=ident.idf1, idp=ident.idp, idr=ident.idr,
        clear=clear, identity_counts=(ident.idtp, ident.idfp, ident.idfn), hota_parts=parts,
    )


def _ratio(num: float, den: float) -> float:
    return float(num) / float(den) if den > 0 else 0.0


def combine_mot(reports: Sequence[MotReport]) -> MotReport:
    """多序列合并：计数相加后重新计算比例"""
    if not reports:
        raise ValueError("没有可合并的报告")
    tp = sum(r.clear.tp for r in reports)
    fp = sum(r.clear.fp for r in reports)
    fn = sum(r.clear.fn for r in reports)
    ids = sum(r.clear.ids for r in reports)
    frag = sum(r.clear.frag for r in reports)
    n_frames = sum(r.clear.n_frames for r in reports)
    n_gt_ids = sum(r.clear.n_gt_ids for r in reports)
    mt_count = sum(r.clear.mt_count for r in reports)
    ml_count = sum(r.clear.ml_count for r in reports)
    motp_sum = sum(r.clear.motp_sum for r in reports)
    idtp, idfp, idfn = (sum(r.identity_counts[i] for r in reports) for i in range(3))
    parts = reports[0].hota_parts
    for r in reports[1:]:
        parts = parts + r.hota_parts

    num_gt = tp + fn
    clear = ClearMotResult(
        mota=1.0 - _ratio(fn + fp + ids, num_gt) if num_gt > 0 else 0.0,
        motp=_ratio(motp_sum, tp), recall=_ratio(tp, tp + fn), precision=_ratio(tp, tp + fp),
        mt=_ratio(mt_count, n_gt_ids), ml=_ratio(ml_count, n_gt_ids), fpf=_ratio(fp, n_frames),
        ids=ids, frag=frag, tp=tp, fp=fp, fn=fn, num_gt_dets=num_gt, n_frames=n_frames,
        n_gt_ids=n_gt_ids, mt_count=mt_count, ml_count=ml_count,
        pt_count=n_gt_ids - mt_count - ml_count, motp_sum=motp_sum,
    )
    return MotReport(
        hota=parts.hota, mota=clear.mota, motp=clear.motp, recall=clear.recall,
        precision=clear.precision, mt=clear.mt, ml=clear.ml, fpf=clear.fpf, ids=ids, frag=frag,
        idf1=_ratio(2 * idtp, 2 * idtp + idfp + idfn), idp=_ratio(idtp, idtp + idfp),
        idr=_ratio(idtp, idtp + idfn), clear=clear, identity_counts=(idtp, idfp, idfn), hota_parts=parts,
    )


def _clean(row: List[Any]) -> List[Any]:
    out = []
    for v in row:
        if isinstance(v, (np.integer,)):
            v = int(v)
        elif isinstance(v, (np.floating,)):
            v = float(v)
        out.append(v)
    return out


def pose_table(reports: Sequence[Tuple[str, PoseReport]], title: Optional[str] = None,
               color: Optional[bool] = None) -> str:
    rows = [[name] + _clean(r.row()) for name, r in reports]
    return render_table(["Sequence"] + POSE_HEADERS, rows, title=title, precision=2, color=color)


def mot_table(reports: Sequence[Tuple[str, MotReport]], title: Optional[str] = None,
              color: Optional[bool] = None) -> str:
    rows = [[name] + _clean(r.row()) for name, r in reports]
    return render_table(["Sequence"] + MOT_HEADERS, rows, title=title, precision=3, color=color)
