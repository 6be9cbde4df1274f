#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
刚体骨架模板
============

身体坐标系: x 朝前, y 朝左, z 朝上, 原点在地面上的身体中心。
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist

from utils.errors import ConfigError

# 9 个关键点的默认偏移 (mm)，顺序同 DEFAULT_KEYPOINT_NAMES
DEFAULT_OFFSETS_MM = np.array([
    [120.0, 0.0, 150.0],    # beak
    [95.0, 0.0, 160.0],     # nose
    [85.0, 15.0, 165.0],    # left_eye
    [85.0, -15.0, 165.0],   # right_eye
    [30.0, 35.0, 120.0],    # left_shoulder
    [30.0, -35.0, 120.0],   # right_shoulder
    [0.0, 0.0, 130.0],      # top_keel
    [10.0, 0.0, 60.0],      # bottom_keel
    [-130.0, 0.0, 90.0],    # tail
])

BODY_LENGTH_RANGE_MM = (150.0, 350.0)


def heading_rotation(heading: float) -> np.ndarray:
    c, s = np.cos(heading), np.sin(heading)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass
class SkeletonTemplate:
    offsets: np.ndarray = field(default_factory=lambda: DEFAULT_OFFSETS_MM.copy())
    scale: float = 1.0

    def __post_init__(self):
        self.offsets = np.asarray(self.offsets, dtype=np.float64) * self.scale
        lo, hi = BODY_LENGTH_RANGE_MM
        if not lo <= self.body_length <= hi:
            raise ConfigError(f"骨架尺寸 {self.body_length:.1f}mm 不在 [{lo}, {hi}] 内")

    @property
    def body_length(self) -> float:
        """关键点两两最大距离"""
        return float(pdist(self.offsets).max())

    @property
    def horizontal_radius(self) -> float:
        return float(np.linalg.norm(self.offsets[:, :2], axis=1).max())

    @property
    def height(self) -> float:
        return float(self.offsets[:, 2].max())

    def place(self, position: np.ndarray, heading: float, jitter: np.ndarray = None) -> np.ndarray:
        """
        世界坐标下的关键点。

        Args:
            position: 地面位置 (x, y) 或 (x, y, z)
            heading: 朝向 (rad)，绕 z 轴
            jitter: (K, 3) 身体坐标系下的关键点扰动

        Returns:
            (K, 3) mm
        """
        offsets = self.offsets if jitter is None else self.offsets + jitter
        origin = np.zeros(3)
        origin[:len(position)] = position
        return offsets @ heading_rotation(heading).T + origin
