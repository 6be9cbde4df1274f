#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
地面行走的相关随机游走
======================

每帧速度与转向率做 AR(1) 更新，朝向每帧最多改变 MAX_TURN_RAD。若提议的一步会离开
场地或距离其他个体不足 1 个身长，则在该范围内依次尝试偏转后的方向，全部失败时原地
转身。因此每帧位移不超过最大速度，任意两个体中心距离始终不小于 1 个身长。
"""

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from fusion.pose import Pose3D
from synthgen.config import ScenarioConfig
from synthgen.skeleton import SkeletonTemplate
from utils.errors import ConfigError

logger = logging.getLogger(__name__)

PLACEMENT_ATTEMPTS = 10000
# 每帧朝向变化上限
MAX_TURN_RAD = np.pi / 18.0
# 受阻时依次尝试的偏转角，叠加后仍截断到 ±MAX_TURN_RAD
DETOURS = np.array([0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0]) * MAX_TURN_RAD
TURN_SIGMA_RAD = 0.3
JITTER_PERSISTENCE = 0.9


@dataclass
class GroundTruth:
    """
    Attributes:
        ids: (N,) 全局身份，从 1 开始
        positions: (T, N, 2) 地面位置 mm
        headings: (T, N) rad
        keypoints: (T, N, K, 3) mm
    """
    ids: np.ndarray
    positions: np.ndarray
    headings: np.ndarray
    keypoints: np.ndarray
    body_length: float

    @property
    def n_frames(self) -> int:
        return self.keypoints.shape[0]

    def poses(self, frame: int) -> List[Pose3D]:
        n_kp = self.keypoints.shape[2]
        return [Pose3D(frame, int(gid), self.keypoints[frame, n], np.ones(n_kp, dtype=bool))
                for n, gid in enumerate(self.ids)]

    def all_poses(self):
        for frame in range(self.n_frames):
            yield from self.poses(frame)


def _inset(config: ScenarioConfig, skeleton: SkeletonTemplate) -> np.ndarray:
    half = np.array(config.arena_size_mm) / 2.0
    return np.maximum(half - skeleton.horizontal_radius, 0.0)


def initial_positions(config: ScenarioConfig, skeleton: SkeletonTemplate, rng: np.random.Generator) -> np.ndarray:
    """均匀采样初始位置，两两距离不小于 2 个身长"""
    half = _inset(config, skeleton)
    min_sep = 2.0 * skeleton.body_length
    placed: List[np.ndarray] = []
    for _ in range(PLACEMENT_ATTEMPTS):
        if len(placed) == config.n_individuals:
            break
        p = rng.uniform(-half, half)
        if all(np.linalg.norm(p - q) >= min_sep for q in placed):
            placed.append(p)
    if len(placed) < config.n_individuals:
        raise ConfigError(
            f"arena_size_mm: 场地太小，无法以 {min_sep:.0f}mm 间隔放下 {config.n_individuals} 个个体")
    return np.array(placed)


def simulate(config: ScenarioConfig, skeleton: Optional[SkeletonTemplate] = None,
             rng: Optional[np.random.Generator] = None) -> GroundTruth:
    """
    生成真值轨迹与关键点。

    Args:
        rng: 运动随机源；None 时由 config.seed 派生

    Returns:
        GroundTruth；给定种子时完全确定
    """
    skeleton = skeleton or SkeletonTemplate(scale=config.body_scale)
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(1)[0])
    n, T, K = config.n_individuals, config.n_frames, skeleton.offsets.shape[0]
    body = skeleton.body_length
    half = _inset(config, skeleton)

    pos = initial_positions(config, skeleton, rng)
    heading = rng.uniform(-np.pi, np.pi, n)
    speed = rng.uniform(config.speed_min_mm, config.speed_max_mm, n)
    turn = np.zeros(n)
    jitter = np.zeros((n, K, 3))
    jitter_innov = config.articulation_mm * np.sqrt(1.0 - JITTER_PERSISTENCE ** 2)
    speed_sigma = 0.1 * (config.speed_max_mm - config.speed_min_mm)
    persistence = config.heading_persistence

    positions = np.zeros((T, n, 2))
    headings = np.zeros((T, n))
    keypoints = np.zeros((T, n, K, 3))

    for t in range(T):
        if t > 0:
            speed = np.clip(speed + rng.normal(0.0, 1.0, n) * speed_sigma,
                            config.speed_min_mm, config.speed_max_mm)
            turn = persistence * turn + (1.0 - persistence) * rng.normal(0.0, TURN_SIGMA_RAD, n)
            jitter = JITTER_PERSISTENCE * jitter + rng.normal(0.0, 1.0, jitter.shape) * jitter_innov
            for i in range(n):
                if speed[i] <= 0.0:
                    continue
                others = np.delete(pos, i, axis=0)
                base = np.clip(turn[i], -MAX_TURN_RAD, MAX_TURN_RAD)
                moved = False
                for detour in DETOURS:
                    h = heading[i] + np.clip(base + detour, -MAX_TURN_RAD, MAX_TURN_RAD)
                    cand = pos[i] + speed[i] * np.array([np.cos(h), np.sin(h)])
                    if np.any(np.abs(cand) > half):
                        continue
                    if len(others) and np.min(np.linalg.norm(others - cand, axis=1)) < body:
                        continue
                    pos[i] = cand
                    heading[i] = h
                    moved = True
                    break
                if not moved:
                    # 原地按当前转向继续转身
                    direction = 1.0 if turn[i] >= 0.0 else -1.0
                    heading[i] += direction * MAX_TURN_RAD
                    turn[i] = direction * MAX_TURN_RAD
            heading = (heading + np.pi) % (2.0 * np.pi) - np.pi

        positions[t] = pos
        headings[t] = heading
        for i in range(n):
            keypoints[t, i] = skeleton.place(pos[i], heading[i], jitter[i])

    logger.debug(f"生成 {n} 个个体 {T} 帧轨迹 (身长 {body:.0f}mm)")
    return GroundTruth(np.arange(1, n + 1), positions, headings, keypoints, body)
