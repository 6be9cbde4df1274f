#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
针孔相机模型
============

世界坐标 (mm) -> 相机坐标 -> 归一化平面 -> 畸变 -> 像素。
畸变为 2 个径向 (k1, k2) + 2 个切向 (p1, p2) 系数，与常见标定工具的输出一致。
所有函数都是纯函数，CameraModel 不可变，可在多线程间共享。
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Sequence, Tuple

import numpy as np

from utils.errors import CalibrationError, NoConvergence, NonPositiveDepth

logger = logging.getLogger(__name__)

MIN_DEPTH_MM = 1e-9
UNDISTORT_MAX_ITER = 20
UNDISTORT_TOL_PX = 1e-6


def _frozen(a: Any, shape: Tuple[int, ...], name: str) -> np.ndarray:
    arr = np.array(a, dtype=np.float64).reshape(shape)
    if not np.all(np.isfinite(arr)):
        raise CalibrationError(f"相机参数 {name} 含有非有限值")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class CameraModel:
    """
    已标定的针孔相机。

    Attributes:
        camera_id: 视角名称
        K: 3x3 内参 (px)
        dist: (k1, k2, p1, p2)
        R: 3x3 世界->相机旋转
        t: 世界->相机平移 (mm)
        image_size: (宽, 高) px
    """

    camera_id: str
    K: np.ndarray
    dist: np.ndarray = field(default_factory=lambda: np.zeros(4))
    R: np.ndarray = field(default_factory=lambda: np.eye(3))
    t: np.ndarray = field(default_factory=lambda: np.zeros(3))
    image_size: Tuple[int, int] = (3840, 2160)

    def __post_init__(self):
        object.__setattr__(self, "K", _frozen(self.K, (3, 3), "K"))
        object.__setattr__(self, "dist", _frozen(self.dist, (4,), "dist"))
        object.__setattr__(self, "R", _frozen(self.R, (3, 3), "R"))
        object.__setattr__(self, "t", _frozen(self.t, (3,), "t"))
        object.__setattr__(self, "image_size", (int(self.image_size[0]), int(self.image_size[1])))

        if self.fx <= 0 or self.fy <= 0:
            raise CalibrationError(f"相机 {self.camera_id}: fx/fy 必须为正")
        if self.image_size[0] <= 0 or self.image_size[1] <= 0:
            raise CalibrationError(f"相机 {self.camera_id}: 图像尺寸必须为正")
        if np.max(np.abs(self.R @ self.R.T - np.eye(3))) > 1e-9 or abs(np.linalg.det(self.R) - 1.0) > 1e-9:
            raise CalibrationError(f"相机 {self.camera_id}: R 不是行列式为 +1 的正交矩阵")

    # ---- 基本属性 ----

    @property
    def fx(self) -> float:
        return float(self.K[0, 0])

    @property
    def fy(self) -> float:
        return float(self.K[1, 1])

    @property
    def cx(self) -> float:
        return float(self.K[0, 2])

    @property
    def cy(self) -> float:
        return float(self.K[1, 2])

    @property
    def has_distortion(self) -> bool:
        return bool(np.any(self.dist != 0.0))

    @property
    def center(self) -> np.ndarray:
        """光心的世界坐标 (mm)"""
        return -self.R.T @ self.t

    @property
    def extrinsic(self) -> np.ndarray:
        """3x4 [R|t]"""
        return np.hstack([self.R, self.t[:, None]])

    @property
    def projection_matrix(self) -> np.ndarray:
        """3x4 K[R|t]（不含畸变）"""
        return self.K @ self.extrinsic

    # ---- 构造与序列化 ----

    @classmethod
    def look_at(
        cls,
        camera_id: str,
        position: Sequence[float],
        target: Sequence[float],
        focal_px: float,
        image_size: Tuple[int, int] = (3840, 2160),
        dist: Sequence[float] = (0.0, 0.0, 0.0, 0.0),
        up: Sequence[float] = (0.0, 0.0, 1.0),
    ) -> "CameraModel":
        """按位置和注视点构造相机（x 向右，y 向下，z 朝前）"""
        position = np.asarray(position, dtype=np.float64)
        forward = np.asarray(target, dtype=np.float64) - position
        forward /= np.linalg.norm(forward)
        right = np.cross(forward, np.asarray(up, dtype=np.float64))
        right /= np.linalg.norm(right)
        down = np.cross(forward, right)
        R = np.vstack([right, down, forward])
        # 重新正交化，保证 R R^T = I 达到机器精度
        u, _, vt = np.linalg.svd(R)
        R = u @ vt
        K = np.array([
            [focal_px, 0.0, image_size[0] / 2.0],
            [0.0, focal_px, image_size[1] / 2.0],
            [0.0, 0.0, 1.0],
        ])
        return cls(camera_id=camera_id, K=K, dist=dist, R=R, t=-R @ position, image_size=image_size)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.camera_id,
            "K": self.K.reshape(-1).tolist(),
            "dist": self.dist.tolist(),
            "R": self.R.reshape(-1).tolist(),
            "t": self.t.tolist(),
            "size": list(self.image_size),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CameraModel":
        try:
            return cls(
                camera_id=str(data["id"]),
                K=data["K"],
                dist=data.get("dist", [0.0, 0.0, 0.0, 0.0]),
                R=data["R"],
                t=data["t"],
                image_size=tuple(data["size"]),
            )
        except (KeyError, ValueError, TypeError) as e:
            raise CalibrationError(f"相机条目格式错误: {e}") from e


# ---- 畸变 ----

def distort_normalized(xy: np.ndarray, dist: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    对归一化坐标施加畸变。

    Args:
        xy: (N, 2) 理想归一化坐标
        dist: (k1, k2, p1, p2)

    Returns:
        (N, 2) 畸变后坐标, (N, 2, 2) 对 xy 的雅可比
    """
    k1, k2, p1, p2 = dist
    x, y = xy[:, 0], xy[:, 1]
    r2 = x * x + y * y
    radial = 1.0 + k1 * r2 + k2 * r2 * r2
    xd = x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x)
    yd = y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y

    dradial = 2.0 * (k1 + 2.0 * k2 * r2)
    jac = np.empty((xy.shape[0], 2, 2))
    jac[:, 0, 0] = radial + x * x * dradial + 2.0 * p1 * y + 6.0 * p2 * x
    jac[:, 0, 1] = x * y * dradial + 2.0 * p1 * x + 2.0 * p2 * y
    jac[:, 1, 0] = x * y * dradial + 2.0 * p1 * x + 2.0 * p2 * y
    jac[:, 1, 1] = radial + y * y * dradial + 6.0 * p1 * y + 2.0 * p2 * x
    return np.stack([xd, yd], axis=1), jac


def _normalized_to_pixels(cam: CameraModel, xy: np.ndarray) -> np.ndarray:
    K = cam.K
    u = K[0, 0] * xy[:, 0] + K[0, 1] * xy[:, 1] + K[0, 2]
    v = K[1, 1] * xy[:, 1] + K[1, 2]
    return np.stack([u, v], axis=1)


def _pixels_to_normalized(cam: CameraModel, uv: np.ndarray) -> np.ndarray:
    K = cam.K
    y = (uv[:, 1] - K[1, 2]) / K[1, 1]
    x = (uv[:, 0] - K[0, 2] - K[0, 1] * y) / K[0, 0]
    return np.stack([x, y], axis=1)


# ---- 投影 ----

def camera_depths(cam: CameraModel, points: np.ndarray) -> np.ndarray:
    """(N, 3) 世界点在相机坐标系下的深度"""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    return points @ cam.R[2] + cam.t[2]


def project_points(cam: CameraModel, points: np.ndarray) -> np.ndarray:
    """
    批量投影。

    Args:
        points: (N, 3) 世界坐标 (mm)

    Returns:
        (N, 2) 畸变后像素坐标

    Raises:
        NonPositiveDepth: 任一点深度 <= 1e-9 mm
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    pc = points @ cam.R.T + cam.t
    if np.any(pc[:, 2] <= MIN_DEPTH_MM):
        raise NonPositiveDepth(f"相机 {cam.camera_id}: 点位于相机后方")
    xy = pc[:, :2] / pc[:, 2:3]
    if cam.has_distortion:
        xy, _ = distort_normalized(xy, cam.dist)
    return _normalized_to_pixels(cam, xy)


def project(cam: CameraModel, p: np.ndarray) -> np.ndarray:
    """单点投影，返回 (2,) 像素坐标"""
    return project_points(cam, np.asarray(p, dtype=np.float64).reshape(1, 3))[0]


def project_with_jacobian(cam: CameraModel, p: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    单点投影及其对世界坐标的雅可比。

    Returns:
        (2,) 像素坐标, (2, 3) d(uv)/d(p)
    """
    pc = cam.R @ p + cam.t
    z = pc[2]
    if z <= MIN_DEPTH_MM:
        raise NonPositiveDepth(f"相机 {cam.camera_id}: 点位于相机后方")
    xy = (pc[:2] / z).reshape(1, 2)
    # d(xy)/d(pc)
    d_norm = np.array([
        [1.0 / z, 0.0, -pc[0] / (z * z)],
        [0.0, 1.0 / z, -pc[1] / (z * z)],
    ])
    if cam.has_distortion:
        xy, jd = distort_normalized(xy, cam.dist)
        d_norm = jd[0] @ d_norm
    uv = _normalized_to_pixels(cam, xy)[0]
    jac = cam.K[:2, :2] @ d_norm @ cam.R
    return uv, jac


# ---- 去畸变 ----

def undistort_normalized(cam: CameraModel, uv: np.ndarray) -> np.ndarray:
    """
    像素 -> 去畸变后的归一化坐标（牛顿迭代，最多 20 次）。

    Args:
        uv: (N, 2) 畸变像素坐标

    Returns:
        (N, 2) 理想归一化坐标

    Raises:
        NoConvergence: 迭代结束后残差仍大于 1e-6 px
    """
    uv = np.atleast_2d(np.asarray(uv, dtype=np.float64))
    target = _pixels_to_normalized(cam, uv)
    if not cam.has_distortion:
        return target

    scale = cam.K[:2, :2]
    xy = target.copy()
    for _ in range(UNDISTORT_MAX_ITER):
        distorted, jac = distort_normalized(xy, cam.dist)
        residual = distorted - target
        residual_px = np.linalg.norm(residual @ scale.T, axis=1)
        if np.all(residual_px <= UNDISTORT_TOL_PX):
            return xy
        xy = xy - np.linalg.solve(jac, residual[:, :, None])[:, :, 0]

    distorted, _ = distort_normalized(xy, cam.dist)
    residual_px = np.linalg.norm((distorted - target) @ scale.T, axis=1)
    if np.all(residual_px <= UNDISTORT_TOL_PX):
        return xy
    raise NoConvergence(f"相机 {cam.camera_id}: 去畸变未收敛 (残差 {residual_px.max():.3g} px)")


def undistort_points(cam: CameraModel, uv: np.ndarray) -> np.ndarray:
    """(N, 2) 畸变像素 -> (N, 2) 理想针孔像素"""
    uv = np.atleast_2d(np.asarray(uv, dtype=np.float64))
    if not cam.has_distortion:
        return uv.copy()
    return _normalized_to_pixels(cam, undistort_normalized(cam, uv))


def undistort(cam: CameraModel, q: np.ndarray) -> np.ndarray:
    """单点去畸变，返回 (2,) 理想像素"""
    return undistort_points(cam, np.asarray(q, dtype=np.float64).reshape(1, 2))[0]


def reprojection_error(cam: CameraModel, p3: np.ndarray, q: np.ndarray) -> float:
    """投影点与观测点之间的像素距离"""
    return float(np.linalg.norm(project(cam, p3) - np.asarray(q, dtype=np.float64)))


def in_image(cam: CameraModel, uv: np.ndarray) -> np.ndarray:
    """(N, 2) 像素是否落在图像内"""
    uv = np.atleast_2d(uv)
    w, h = cam.image_size
    return (uv[:, 0] >= 0) & (uv[:, 0] < w) & (uv[:, 1] >= 0) & (uv[:, 1] < h)
