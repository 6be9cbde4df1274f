#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
三维关键点时间平滑
==================

每个 (全局 ID, 关键点) 一个独立的恒速卡尔曼滤波器，
状态 (x, y, z, vx, vy, vz)，单位 mm 与 mm/帧。
测量缺失时输出预测值，连续缺失超过 gap_limit 帧后输出无效并丢弃该滤波器。
"""

import logging
from dataclasses import replace
from typing import Dict, List, Sequence, Tuple

import numpy as np
from filterpy.common import Q_discrete_white_noise
from filterpy.kalman import KalmanFilter
from pydantic import BaseModel, ConfigDict, Field

from fusion.pose import Pose3D

logger = logging.getLogger(__name__)

# 初始化时速度的先验方差 (mm/帧)^2
INITIAL_VELOCITY_VAR = 100.0


class SmootherConfig(BaseModel):
    """平滑参数"""

    model_config = ConfigDict(extra="forbid")

    enabled: bool = True
    measurement_sigma_mm: float = Field(5.0, gt=0.0)
    accel_sigma_mm: float = Field(2.0, gt=0.0, description="过程噪声加速度标准差 (mm/帧^2)")
    gap_limit: int = Field(10, ge=0, description="只输出预测值的最大连续帧数")


def make_keypoint_filter(position: np.ndarray, config: SmootherConfig) -> KalmanFilter:
    """以测量位置、零速度初始化的恒速滤波器"""
    kf = KalmanFilter(dim_x=6, dim_z=3)
    kf.F = np.eye(6)
    kf.F[:3, 3:] = np.eye(3)
    kf.H = np.hstack([np.eye(3), np.zeros((3, 3))])
    kf.R = np.eye(3) * config.measurement_sigma_mm ** 2
    kf.Q = Q_discrete_white_noise(dim=2, dt=1.0, var=config.accel_sigma_mm ** 2, block_size=3,
                                  order_by_dim=False)
    kf.P = np.diag([config.measurement_sigma_mm ** 2] * 3 + [INITIAL_VELOCITY_VAR] * 3)
    kf.x = np.concatenate([np.asarray(position, dtype=np.float64), np.zeros(3)]).reshape(6, 1)
    return kf


class Smoother3D:
    """全部全局身份的关键点滤波器集合"""

    def __init__(self, config: SmootherConfig = None):
        self.config = config or SmootherConfig()
        self.filters: Dict[Tuple[int, int], KalmanFilter] = {}
        self.gaps: Dict[Tuple[int, int], int] = {}

    def reset(self):
        self.filters.clear()
        self.gaps.clear()

    def state(self, global_id: int, keypoint: int) -> np.ndarray:
        """(6,) 状态；没有滤波器时抛出 KeyError"""
        return self.filters[(global_id, keypoint)].x.reshape(6).copy()

    def covariance(self, global_id: int, keypoint: int) -> np.ndarray:
        return self.filters[(global_id, keypoint)].P.copy()

    def step_pose(self, pose: Pose3D) -> Pose3D:
        points = pose.points.copy()
        valid = pose.valid.copy()
        for k in range(points.shape[0]):
            key = (pose.global_id, k)
            kf = self.filters.get(key)
            if kf is None:
                if pose.valid[k]:
                    self.filters[key] = make_keypoint_filter(pose.points[k], self.config)
                    self.gaps[key] = 0
                continue

            kf.predict()
            if pose.valid[k]:
                kf.update(pose.points[k])
                self.gaps[key] = 0
            else:
                self.gaps[key] += 1
                if self.gaps[key] > self.config.gap_limit:
                    del self.filters[key]
                    del self.gaps[key]
                    valid[k] = False
                    continue
            kf.P = 0.5 * (kf.P + kf.P.T)
            points[k] = kf.x[:3, 0]
            valid[k] = True
        return replace(pose, points=points, valid=valid, smoothed=True)


def smooth_step(smoother: Smoother3D, poses: Sequence[Pose3D]) -> List[Pose3D]:
    """
    对一帧的姿态做一步平滑。

    每个关键点先预测；有测量时更新并输出滤波位置；无测量时输出预测位置，
    只在连续缺失不超过 gap_limit 帧时有效。平滑关闭时原样返回。
    """
    if not smoother.config.enabled:
        return list(poses)
    return [smoother.step_pose(pose) for pose in poses]
