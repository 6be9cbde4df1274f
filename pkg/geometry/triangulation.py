#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
多视角三角化
============

DLT 线性初始化 + 逐点 Levenberg-Marquardt 精化（相机固定，只优化三维点）。
"""

import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence, Tuple

import numpy as np

from geometry.camera import (CameraModel, camera_depths, project_points,
                             project_with_jacobian, undistort_normalized)
from utils.errors import DegenerateGeometry, InsufficientViews, NonPositiveDepth

logger = logging.getLogger(__name__)

DEGENERATE_SINGULAR_RATIO = 0.99
MIN_BASELINE_MM = 1e-6

LM_INITIAL_DAMPING = 1e-3
LM_MAX_ITER = 50
LM_STEP_TOL_MM = 1e-8
LM_MAX_DAMPING = 1e12


@dataclass
class RefineResult:
    """逐点精化结果"""

    point: np.ndarray
    converged: bool
    iterations: int
    initial_cost: float
    final_cost: float
    n_observations: int

    @property
    def rms(self) -> float:
        """重投影误差 RMS (px)"""
        return float(np.sqrt(self.final_cost / max(self.n_observations, 1)))


def triangulate_dlt(observations: Sequence[Tuple[CameraModel, np.ndarray]]) -> np.ndarray:
    """
    DLT 三角化。

    Args:
        observations: [(相机, 畸变像素 (2,))]，至少 2 个

    Returns:
        (3,) 世界坐标 (mm)

    Raises:
        InsufficientViews: 观测少于 2 个
        DegenerateGeometry: 共光心、射线近似平行或解不在所有相机前方
    """
    if len(observations) < 2:
        raise InsufficientViews(f"三角化需要至少 2 个视角，实际 {len(observations)}")

    centers = [cam.center for cam, _ in observations]
    baseline = max(np.linalg.norm(a - b) for a, b in combinations(centers, 2))
    if baseline < MIN_BASELINE_MM:
        raise DegenerateGeometry("所有相机光心重合，无法三角化")

    rows = []
    for cam, q in observations:
        x, y = undistort_normalized(cam, np.asarray(q, dtype=np.float64).reshape(1, 2))[0]
        P = cam.extrinsic
        rows.append(x * P[2] - P[0])
        rows.append(y * P[2] - P[1])
    A = np.asarray(rows)
    A /= np.linalg.norm(A, axis=1, keepdims=True)

    _, s, vt = np.linalg.svd(A)
    if s[-2] <= 0 or s[-1] / s[-2] > DEGENERATE_SINGULAR_RATIO:
        raise DegenerateGeometry(f"设计矩阵秩亏 (奇异值比 {s[-1] / max(s[-2], 1e-300):.3f})")

    X = vt[-1]
    if abs(X[3]) < 1e-12 * np.linalg.norm(X):
        raise DegenerateGeometry("三角化结果位于无穷远")
    point = X[:3] / X[3]

    depths = np.array([camera_depths(cam, point)[0] for cam, _ in observations])
    if np.any(depths <= 0):
        raise DegenerateGeometry("三角化结果位于部分相机后方")
    return point


def _residuals(cams: Sequence[CameraModel], obs: np.ndarray, p: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    r = np.empty(2 * len(cams))
    J = np.empty((2 * len(cams), 3))
    for i, cam in enumerate(cams):
        uv, jac = project_with_jacobian(cam, p)
        r[2 * i:2 * i + 2] = uv - obs[i]
        J[2 * i:2 * i + 2] = jac
    return r, J


def refine_point(
    cams: Sequence[CameraModel],
    obs: Sequence[np.ndarray],
    init: np.ndarray,
    max_iter: int = LM_MAX_ITER,
    step_tol: float = LM_STEP_TOL_MM,
) -> RefineResult:
    """
    Levenberg-Marquardt 最小化重投影误差平方和。

    未收敛不是错误：达到最大迭代次数时返回当前最优点，converged=False。
    返回点的代价永远不大于初始点的代价。
    """
    if len(cams) < 2 or len(cams) != len(obs):
        raise InsufficientViews(f"精化需要至少 2 个观测，实际 {len(obs)}")

    obs = np.asarray(obs, dtype=np.float64).reshape(len(cams), 2)
    p = np.asarray(init, dtype=np.float64).reshape(3).copy()
    if not np.all(np.isfinite(p)):
        raise DegenerateGeometry("初始点含有非有限值")

    r, J = _residuals(cams, obs, p)
    cost = float(r @ r)
    initial_cost = cost
    damping = LM_INITIAL_DAMPING
    converged = False
    iterations = 0

    while iterations < max_iter:
        iterations += 1
        H = J.T @ J
        g = J.T @ r
        A = H + damping * np.diag(np.diag(H) + 1e-12)
        try:
            delta = np.linalg.solve(A, -g)
        except np.linalg.LinAlgError:
            damping *= 10.0
            continue

        if np.linalg.norm(delta) < step_tol:
            converged = True
            break

        candidate = p + delta
        try:
            r_new, J_new = _residuals(cams, obs, candidate)
            new_cost = float(r_new @ r_new)
        except NonPositiveDepth:
            new_cost = np.inf

        if new_cost < cost:
            p, r, J, cost = candidate, r_new, J_new, new_cost
            damping /= 10.0
        else:
            damping *= 10.0
            if damping > LM_MAX_DAMPING:
                # 阻尼已经大到步长可以忽略，当前点即局部最优
                converged = True
                break

    return RefineResult(
        point=p,
        converged=converged,
        iterations=iterations,
        initial_cost=initial_cost,
        final_cost=cost,
        n_observations=len(cams),
    )


def triangulate_point(cams: Sequence[CameraModel], obs: Sequence[np.ndarray]) -> RefineResult:
    """DLT 初始化后做 LM 精化"""
    init = triangulate_dlt(list(zip(cams, obs)))
    return refine_point(cams, obs, init)


def reprojection_errors(cams: Sequence[CameraModel], obs: Sequence[np.ndarray], p: np.ndarray) -> np.ndarray:
    """每个视角的重投影误差 (px)"""
    return np.array([
        float(np.linalg.norm(project_points(cam, p.reshape(1, 3))[0] - np.asarray(q)))
        for cam, q in zip(cams, obs)
    ])


def reprojection_rms(cams: Sequence[CameraModel], obs: Sequence[np.ndarray], p: np.ndarray) -> float:
    """重投影误差 RMS (px)"""
    errs = reprojection_errors(cams, obs, p)
    return float(np.sqrt(np.mean(errs ** 2)))
