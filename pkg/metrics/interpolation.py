#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""真值轨迹的缺口线性插值"""

import logging
from typing import Dict, Mapping, Union

import numpy as np

logger = logging.getLogger(__name__)


def interpolate_array(values: np.ndarray) -> np.ndarray:
    """
    (T, ...) 数组中缺失值为 NaN，逐坐标线性插值内部缺口；首尾缺口保持 NaN。
    """
    values = np.asarray(values, dtype=np.float64)
    flat = values.reshape(values.shape[0], -1).copy()
    t = np.arange(flat.shape[0])
    for c in range(flat.shape[1]):
        col = flat[:, c]
        present = ~np.isnan(col)
        if present.sum() < 2:
            continue
        first, last = t[present][0], t[present][-1]
        inner = (t > first) & (t < last) & ~present
        col[inner] = np.interp(t[inner], t[present], col[present])
    return flat.reshape(values.shape)


def interpolate_gaps(track: Union[Mapping[int, np.ndarray], np.ndarray]) -> Union[Dict[int, np.ndarray], np.ndarray]:
    """
    填补轨迹内部缺口。

    Args:
        track: {帧号: 观测} 或以 NaN 表示缺失的 (T, ...) 数组

    Returns:
        同类型的轨迹；字典形式下补齐首帧到末帧之间的全部帧
    """
    if not isinstance(track, Mapping):
        return interpolate_array(track)
    if not track:
        return {}
    frames = sorted(track)
    first, last = frames[0], frames[-1]
    shape = np.asarray(track[first]).shape
    dense = np.full((last - first + 1,) + shape, np.nan)
    for f in frames:
        dense[f - first] = track[f]
    filled = interpolate_array(dense)
    n_filled = (last - first + 1) - len(frames)
    if n_filled:
        logger.debug(f"插值补齐 {n_filled} 帧")
    return {first + i: filled[i] for i in range(filled.shape[0])}


def interpolate_tracks(tracks: Mapping[int, Mapping[int, np.ndarray]]) -> Dict[int, Dict[int, np.ndarray]]:
    return {tid: interpolate_gaps(obs) for tid, obs in tracks.items()}
