#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
IoU 与匈牙利分配
"""

from typing import List, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment


def iou(a: Sequence[float], b: Sequence[float]) -> float:
    """两个 (x, y, w, h) 包围盒的交并比"""
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    iw = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    ih = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = iw * ih
    union = aw * ah + bw * bh - inter
    return float(inter / union) if union > 0 else 0.0


def iou_matrix(boxes_a: np.ndarray, boxes_b: np.ndarray) -> np.ndarray:
    """
    批量 IoU。

    Args:
        boxes_a: (N, 4) xywh
        boxes_b: (M, 4) xywh

    Returns:
        (N, M) IoU 矩阵
    """
    boxes_a = np.asarray(boxes_a, dtype=np.float64).reshape(-1, 4)
    boxes_b = np.asarray(boxes_b, dtype=np.float64).reshape(-1, 4)
    if boxes_a.shape[0] == 0 or boxes_b.shape[0] == 0:
        return np.zeros((boxes_a.shape[0], boxes_b.shape[0]))

    ax1, ay1 = boxes_a[:, 0:1], boxes_a[:, 1:2]
    ax2, ay2 = ax1 + boxes_a[:, 2:3], ay1 + boxes_a[:, 3:4]
    bx1, by1 = boxes_b[None, :, 0], boxes_b[None, :, 1]
    bx2, by2 = bx1 + boxes_b[None, :, 2], by1 + boxes_b[None, :, 3]

    iw = np.maximum(0.0, np.minimum(ax2, bx2) - np.maximum(ax1, bx1))
    ih = np.maximum(0.0, np.minimum(ay2, by2) - np.maximum(ay1, by1))
    inter = iw * ih
    union = (boxes_a[:, 2:3] * boxes_a[:, 3:4]) + (boxes_b[None, :, 2] * boxes_b[None, :, 3]) - inter
    return np.where(union > 0, inter / np.maximum(union, 1e-12), 0.0)


def hungarian(cost: np.ndarray) -> List[Tuple[int, int]]:
    """
    最小总代价的最大匹配（支持矩形矩阵）。

    Returns:
        按行号排序的 (row, col) 列表
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.size == 0:
        return []
    rows, cols = linear_sum_assignment(cost)
    return sorted(zip(rows.tolist(), cols.tolist()))
