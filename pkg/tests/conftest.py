#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
测试公共夹具
"""

import os
import sys
from pathlib import Path

import numpy as np
import pytest

project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from geometry.camera import CameraModel, project_points
from geometry.schema import DEFAULT_SCHEMA
from synthgen.config import ScenarioConfig
from synthgen.writer import generate_scene
from tracking.detection import Detection2D


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: 完整规模的端到端验收测试")
    config.addinivalue_line("markers", "benchmark: 吞吐量测试，需要 MUPPET_BENCH=1")


def pytest_collection_modifyitems(config, items):
    if os.getenv("MUPPET_BENCH") == "1":
        return
    skip = pytest.mark.skip(reason="设置 MUPPET_BENCH=1 以运行吞吐量测试")
    for item in items:
        if "benchmark" in item.keywords:
            item.add_marker(skip)


def make_rig(distortion=(0.0, 0.0, 0.0, 0.0), radius=2500.0, height=1800.0, focal=2000.0):
    """四个相机围绕原点，看向场地中心"""
    cams = []
    for i, angle in enumerate(np.deg2rad([45.0, 135.0, 225.0, 315.0])):
        position = (radius * np.cos(angle), radius * np.sin(angle), height)
        cams.append(CameraModel.look_at(f"cam{i}", position, (0.0, 0.0, 0.0), focal,
                                        image_size=(3840, 2160), dist=distortion))
    return cams


def detection_from_points(cam: CameraModel, points: np.ndarray, frame: int = 0, score: float = 0.9) -> Detection2D:
    """无噪声投影 -> 检测，包围盒取关键点范围"""
    uv = project_points(cam, points)
    lo, hi = uv.min(axis=0) - 10.0, uv.max(axis=0) + 10.0
    kp = np.column_stack([uv, np.ones(len(uv)), np.ones(len(uv))])
    return Detection2D(cam.camera_id, frame, [lo[0], lo[1], hi[0] - lo[0], hi[1] - lo[1]], kp, score)


def skeleton_at(center, rng=None, spread=60.0) -> np.ndarray:
    """在 center 附近生成一个 9 关键点的姿态"""
    rng = rng or np.random.default_rng(0)
    offsets = rng.uniform(-spread, spread, size=(len(DEFAULT_SCHEMA), 3))
    offsets[:, 2] = np.abs(offsets[:, 2]) + 20.0
    return np.asarray(center, dtype=np.float64) + offsets


@pytest.fixture
def toy_camera():
    """单位旋转、零平移、fx=fy=1000、cx=cy=0、无畸变"""
    K = np.array([[1000.0, 0.0, 0.0], [0.0, 1000.0, 0.0], [0.0, 0.0, 1.0]])
    return CameraModel("toy", K)


@pytest.fixture
def rig():
    return make_rig()


@pytest.fixture
def distorted_rig():
    return make_rig(distortion=(-0.02, 0.005, 0.0005, -0.0003))


@pytest.fixture(scope="session")
def small_scene():
    """3 个个体、60 帧、无噪声"""
    return generate_scene(ScenarioConfig(n_individuals=3, n_frames=60, seed=3))
