#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
HOTA
====

相似度阈值 α ∈ {0.05, 0.10, ..., 0.95}。先用全局对齐分数加权的相似度逐帧匈牙利匹配，
再在每个 α 下统计 TP/FN/FP 与身份对的匹配次数：
DetA = TP / (TP + FN + FP)
AssA = Σ_匹配 A(c) / TP，A(c) = TPA / (TPA + FNA + FPA)
HOTA_α = sqrt(DetA · AssA)，最终取 19 个 α 的平均。
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Union

import numpy as np
from scipy.optimize import linear_sum_assignment

from metrics.tracks import EvalMode, FrameData, Tracks, build_frames, default_gate, similarity_from_distance

logger = logging.getLogger(__name__)

ALPHAS = np.arange(0.05, 0.99, 0.05)
EPS = np.finfo(float).eps


@dataclass
class HotaParts:
    """每个 α 的计数，合并多序列时逐项相加"""
    tp: np.ndarray
    fn: np.ndarray
    fp: np.ndarray
    ass_sum: np.ndarray

    def scores(self) -> np.ndarray:
        det_a = self.tp / np.maximum(1.0, self.tp + self.fn + self.fp)
        ass_a = self.ass_sum / np.maximum(1.0, self.tp)
        return np.sqrt(det_a * ass_a)

    @property
    def hota(self) -> float:
        return float(np.mean(self.scores()))

    def __add__(self, other: "HotaParts") -> "HotaParts":
        return HotaParts(self.tp + other.tp, self.fn + other.fn, self.fp + other.fp,
                         self.ass_sum + other.ass_sum)


def hota_parts(frames: List[FrameData], mode: EvalMode, gate: float) -> HotaParts:
    n_alpha = len(ALPHAS)
    gt_list = sorted({int(g) for fd in frames for g in fd.gt_ids})
    pred_list = sorted({int(p) for fd in frames for p in fd.pred_ids})
    gi = {g: i for i, g in enumerate(gt_list)}
    pi = {p: i for i, p in enumerate(pred_list)}

    tp = np.zeros(n_alpha)
    fn = np.zeros(n_alpha)
    fp = np.zeros(n_alpha)
    n_gt_total = sum(len(fd.gt_ids) for fd in frames)
    n_pred_total = sum(len(fd.pred_ids) for fd in frames)
    if n_pred_total == 0 or n_gt_total == 0:
        fn[:] = n_gt_total
        fp[:] = n_pred_total
        return HotaParts(tp, fn, fp, np.zeros(n_alpha))

    # 全局对齐分数
    potential = np.zeros((len(gt_list), len(pred_list)))
    gt_count = np.zeros((len(gt_list), 1))
    pred_count = np.zeros((1, len(pred_list)))
    sims = []
    for fd in frames:
        g_idx = np.array([gi[int(g)] for g in fd.gt_ids], dtype=np.int64)
        p_idx = np.array([pi[int(p)] for p in fd.pred_ids], dtype=np.int64)
        sim = similarity_from_distance(fd.dist, mode, gate) if fd.dist.size else fd.dist
        sims.append((g_idx, p_idx, sim))
        gt_count[g_idx] += 1
        pred_count[0, p_idx] += 1
        if sim.size == 0:
            continue
        denom = sim.sum(0)[None, :] + sim.sum(1)[:, None] - sim
        sim_iou = np.zeros_like(sim)
        mask = denom > EPS
        sim_iou[mask] = sim[mask] / denom[mask]
        potential[g_idx[:, None], p_idx[None, :]] += sim_iou
    alignment = potential / (gt_count + pred_count - potential)

    matches_count = np.zeros((n_alpha, len(gt_list), len(pred_list)))
    for g_idx, p_idx, sim in sims:
        n_gt, n_pred = len(g_idx), len(p_idx)
        if n_gt == 0 or n_pred == 0:
            fn += n_gt
            fp += n_pred
            continue
        score = alignment[g_idx[:, None], p_idx[None, :]] * sim
        rows, cols = linear_sum_assignment(-score)
        matched_sim = sim[rows, cols]
        for a, alpha in enumerate(ALPHAS):
            ok = matched_sim >= alpha - EPS
            n = int(ok.sum())
            tp[a] += n
            fn[a] += n_gt - n
            fp[a] += n_pred - n
            matches_count[a, g_idx[rows[ok]], p_idx[cols[ok]]] += 1

    ass_sum = np.zeros(n_alpha)
    for a in range(n_alpha):
        mc = matches_count[a]
        ass_acc = mc / np.maximum(1.0, gt_count + pred_count - mc)
        ass_sum[a] = float(np.sum(mc * ass_acc))
    return HotaParts(tp, fn, fp, ass_sum)


def hota(gt_tracks: Tracks, pred_tracks: Tracks, dist_similarity: Union[str, EvalMode] = EvalMode.THREE_D,
         gate: Optional[float] = None, frames: Optional[List[FrameData]] = None) -> float:
    """
    HOTA 分数 [0, 1]。

    Args:
        dist_similarity: 2d 相似度为 IoU；3d 为 1 - d / gate
        gate: 3D 相似度归一化距离，默认 30 mm
    """
    mode = EvalMode.parse(dist_similarity)
    gate = default_gate(mode) if gate is None else gate
    frames = build_frames(gt_tracks, pred_tracks, mode) if frames is None else frames
    return hota_parts(frames, mode, gate).hota
