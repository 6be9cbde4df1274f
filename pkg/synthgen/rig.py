#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
相机阵列：场地外围矩形上的相机朝向场地中心，焦距使整个场地落在每个视场内。
"""

import logging
from typing import List, Optional

import numpy as np

from geometry.camera import CameraModel
from synthgen.config import ScenarioConfig
from synthgen.skeleton import SkeletonTemplate

logger = logging.getLogger(__name__)

# 场地角点投影到半幅图像的比例上限
FRAME_FILL = 0.9


def camera_positions(config: ScenarioConfig) -> np.ndarray:
    """(n, 3) 相机位置；4 台时恰好位于矩形四角"""
    hx = config.arena_size_mm[0] / 2.0 + config.camera_margin_mm
    hy = config.arena_size_mm[1] / 2.0 + config.camera_margin_mm
    out = []
    for i in range(config.n_cameras):
        theta = np.pi / 4.0 + 2.0 * np.pi * i / config.n_cameras
        d = np.array([np.cos(theta), np.sin(theta)])
        s = min(hx / max(abs(d[0]), 1e-12), hy / max(abs(d[1]), 1e-12))
        out.append([s * d[0], s * d[1], config.camera_height_mm])
    return np.array(out)


def arena_corners(config: ScenarioConfig, skeleton: SkeletonTemplate) -> np.ndarray:
    """包含骨架外延的场地包围盒 8 个角点"""
    hx = config.arena_size_mm[0] / 2.0 + skeleton.horizontal_radius
    hy = config.arena_size_mm[1] / 2.0 + skeleton.horizontal_radius
    return np.array([[sx * hx, sy * hy, z] for sx in (-1, 1) for sy in (-1, 1)
                     for z in (0.0, skeleton.height)])


def build_rig(config: ScenarioConfig, skeleton: Optional[SkeletonTemplate] = None) -> List[CameraModel]:
    """
    构造相机阵列。

    Returns:
        按 camera_ids 顺序的相机列表；与随机种子无关
    """
    skeleton = skeleton or SkeletonTemplate(scale=config.body_scale)
    target = np.array([0.0, 0.0, skeleton.height / 2.0])
    corners = arena_corners(config, skeleton)
    w, h = config.image_size

    cameras = []
    for cam_id, pos in zip(config.camera_ids(), camera_positions(config)):
        unit_cam = CameraModel.look_at(cam_id, pos, target, 1.0, config.image_size)
        pc = corners @ unit_cam.R.T + unit_cam.t
        xn = np.abs(pc[:, 0] / pc[:, 2]).max()
        yn = np.abs(pc[:, 1] / pc[:, 2]).max()
        focal = FRAME_FILL * min(w / 2.0 / xn, h / 2.0 / yn)
        cameras.append(CameraModel.look_at(cam_id, pos, target, focal, config.image_size, config.distortion))
        logger.debug(f"相机 {cam_id}: 位置 {pos.tolist()}, 焦距 {focal:.1f}px")
    return cameras
