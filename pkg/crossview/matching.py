#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
首帧跨视角身份匹配
==================

1. 对每一对视角、每一对检测做两视角三角化，得到候选三维姿态；
2. 在候选姿态空间里做贪心凝聚聚类：每次合并代表姿态距离最小的两个簇，
   约束是同一个簇里不能出现同一视角的两个检测，最小距离超过阈值时停止；
3. 每个最终簇成为一个全局 ID，未被聚类的检测各自成为单例全局 ID。
"""

import json
import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from geometry.camera import CameraModel
from geometry.triangulation import reprojection_errors, triangulate_point
from tracking.detection import Detection2D
from utils.errors import GeometryError, NoSharedKeypoints

logger = logging.getLogger(__name__)

# 每个视角的首帧输出: [(局部轨迹 ID, 检测)]
FirstFrame = Mapping[str, Sequence[Tuple[int, Detection2D]]]
Node = Tuple[str, int]


class MatchingConfig(BaseModel):
    """跨视角匹配参数"""

    model_config = ConfigDict(extra="forbid")

    threshold_mm: float = Field(200.0, gt=0.0, description="停止合并的姿态距离阈值")
    keypoint_conf_threshold: float = Field(0.0, ge=0.0, le=1.0)
    pair_reproj_gate_px: float = Field(20.0, gt=0.0, description="未合并的单个候选被接受的重投影误差上限")


@dataclass
class CandidatePose:
    """
    由两个视角各一个检测三角化出的候选姿态。

    Attributes:
        view_pair: (view_a, 检测下标 a, view_b, 检测下标 b)，view_a < view_b
        points: (K, 3) mm
        valid: (K,) 有效掩码
        mean_pairwise_reproj: 有效关键点的平均重投影误差 (px)
    """

    view_pair: Tuple[str, int, str, int]
    points: np.ndarray
    valid: np.ndarray
    mean_pairwise_reproj: float

    @property
    def nodes(self) -> Tuple[Node, Node]:
        va, ia, vb, ib = self.view_pair
        return (va, ia), (vb, ib)


@dataclass
class GlobalIdentityMap:
    """(视角, 局部轨迹 ID) -> 全局 ID"""

    entries: Dict[Tuple[str, int], int] = field(default_factory=dict)

    @property
    def n_globals(self) -> int:
        return len(set(self.entries.values()))

    def global_of(self, view_id: str, local_track_id: int) -> Optional[int]:
        return self.entries.get((view_id, local_track_id))

    def global_ids(self) -> List[int]:
        return sorted(set(self.entries.values()))

    def members(self, global_id: int) -> Dict[str, int]:
        """某全局 ID 在各视角上的局部轨迹 ID"""
        return {view: local for (view, local), g in self.entries.items() if g == global_id}

    def validate(self):
        """同一视角内每个全局 ID 至多出现一次"""
        seen = set()
        for (view, _), gid in self.entries.items():
            if (view, gid) in seen:
                raise ValueError(f"全局 ID {gid} 在视角 {view} 中出现多次")
            seen.add((view, gid))

    def to_json(self) -> Dict[str, int]:
        return {f"({view},{local})": gid for (view, local), gid in sorted(self.entries.items())}

    @classmethod
    def from_json(cls, data: Mapping[str, int]) -> "GlobalIdentityMap":
        entries = {}
        for key, gid in data.items():
            view, local = key.strip().strip("()").rsplit(",", 1)
            entries[(view, int(local))] = int(gid)
        return cls(entries)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def pose_distance(a, b) -> float:
    """
    两个姿态在共同有效关键点上的平均欧氏距离 (mm)。

    a, b 需要有 points (K, 3) 和 valid (K,) 属性。

    Raises:
        NoSharedKeypoints: 有效掩码没有交集
    """
    shared = np.asarray(a.valid, dtype=bool) & np.asarray(b.valid, dtype=bool)
    if not np.any(shared):
        raise NoSharedKeypoints("两个姿态没有共同的有效关键点")
    d = np.linalg.norm(np.asarray(a.points)[shared] - np.asarray(b.points)[shared], axis=1)
    return float(d.mean())


def _pair_pose(
    cam_a: CameraModel, det_a: Detection2D, cam_b: CameraModel, det_b: Detection2D,
    view_pair: Tuple[str, int, str, int], conf_threshold: float,
) -> Optional[CandidatePose]:
    n_kp = det_a.keypoints.shape[0]
    points = np.zeros((n_kp, 3))
    valid = np.zeros(n_kp, dtype=bool)
    errors = []

    usable = det_a.usable_keypoints(conf_threshold) & det_b.usable_keypoints(conf_threshold)
    for k in np.flatnonzero(usable):
        obs = [det_a.keypoints[k, :2], det_b.keypoints[k, :2]]
        try:
            result = triangulate_point([cam_a, cam_b], obs)
            errors.append(reprojection_errors([cam_a, cam_b], obs, result.point).mean())
        except GeometryError as e:
            logger.debug(f"候选 {view_pair} 关键点 {k} 三角化失败: {e}")
            continue
        points[k] = result.point
        valid[k] = True

    if not np.any(valid):
        return None
    return CandidatePose(view_pair, points, valid, float(np.mean(errors)))


def candidate_poses(
    first_frame: FirstFrame,
    calib: Mapping[str, CameraModel],
    config: Optional[MatchingConfig] = None,
) -> List[CandidatePose]:
    """
    为每一对视角的每一对检测生成候选姿态。

    Args:
        first_frame: {视角: [(局部 ID, 检测)]}
        calib: {视角: 相机}

    Returns:
        按 (view_a, idx_a, view_b, idx_b) 字典序排列的候选列表；全部关键点无效的候选被丢弃
    """
    config = config or MatchingConfig()
    views = sorted(v for v in calib if first_frame.get(v))
    candidates = []
    for view_a, view_b in combinations(views, 2):
        cam_a, cam_b = calib[view_a], calib[view_b]
        for ia, (_, det_a) in enumerate(first_frame[view_a]):
            for ib, (_, det_b) in enumerate(first_frame[view_b]):
                cand = _pair_pose(cam_a, det_a, cam_b, det_b, (view_a, ia, view_b, ib),
                                  config.keypoint_conf_threshold)
                if cand is not None:
                    candidates.append(cand)
    candidates.sort(key=lambda c: c.view_pair)
    logger.debug(f"生成候选姿态 {len(candidates)} 个 (视角 {views})")
    return candidates


@dataclass
class ClusterSummary:
    """凝聚结束后的一个簇"""

    members: List[int]
    nodes: Dict[str, int]
    representative: np.ndarray
    representative_valid: np.ndarray
    mean_reproj: float

    @property
    def key(self) -> Tuple:
        return min(self.members)


class _Agglomerator:
    """贪心凝聚聚类的内部状态"""

    def __init__(self, candidates: Sequence[CandidatePose]):
        self.candidates = list(candidates)
        self.views = sorted({n[0] for c in self.candidates for n in c.nodes})
        view_index = {v: i for i, v in enumerate(self.views)}

        n = len(self.candidates)
        n_kp = self.candidates[0].points.shape[0] if n else 0
        self.sums = np.zeros((n, n_kp, 3))
        self.counts = np.zeros((n, n_kp))
        self.assign = -np.ones((n, len(self.views)), dtype=np.int64)
        self.members: List[List[int]] = [[i] for i in range(n)]
        self.active = np.ones(n, dtype=bool)

        for i, cand in enumerate(self.candidates):
            self.sums[i][cand.valid] = cand.points[cand.valid]
            self.counts[i][cand.valid] = 1.0
            for view, idx in cand.nodes:
                self.assign[i, view_index[view]] = idx

        self.dist = np.full((n, n), np.inf)
        for i in range(n):
            self.dist[i] = self._row(i)
        self.merge_distances: List[float] = []

    def representative(self, i: int) -> Tuple[np.ndarray, np.ndarray]:
        valid = self.counts[i] > 0
        reps = np.zeros_like(self.sums[i])
        reps[valid] = self.sums[i][valid] / self.counts[i][valid][:, None]
        return reps, valid

    def _row(self, i: int) -> np.ndarray:
        """簇 i 到所有簇的代表姿态距离；冲突或无共同关键点时为 inf"""
        valid = self.counts > 0
        reps = np.where(valid[..., None], self.sums / np.maximum(self.counts, 1.0)[..., None], 0.0)
        shared = valid & valid[i][None, :]
        d = np.linalg.norm(reps - reps[i][None], axis=2)
        n_shared = shared.sum(axis=1)
        row = np.where(n_shared > 0, (d * shared).sum(axis=1) / np.maximum(n_shared, 1), np.inf)

        mine = self.assign[i][None, :]
        conflict = np.any((mine >= 0) & (self.assign >= 0) & (self.assign != mine), axis=1)
        row[conflict | ~self.active] = np.inf
        row[i] = np.inf
        return row

    def run(self, threshold_mm: float):
        n = len(self.candidates)
        while n > 1:
            flat = int(np.argmin(self.dist))
            best = self.dist.flat[flat]
            if not np.isfinite(best) or best > threshold_mm:
                break
            i, j = divmod(flat, n)
            i, j = min(i, j), max(i, j)

            self.sums[i] += self.sums[j]
            self.counts[i] += self.counts[j]
            self.assign[i] = np.maximum(self.assign[i], self.assign[j])
            self.members[i].extend(self.members[j])
            self.members[j] = []
            self.active[j] = False
            self.dist[j, :] = np.inf
            self.dist[:, j] = np.inf
            self.merge_distances.append(float(best))

            row = self._row(i)
            self.dist[i, :] = row
            self.dist[:, i] = row

    def summaries(self) -> List[ClusterSummary]:
        out = []
        for i in np.flatnonzero(self.active):
            reps, valid = self.representative(i)
            nodes = {self.views[v]: int(idx) for v, idx in enumerate(self.assign[i]) if idx >= 0}
            reproj = float(np.mean([self.candidates[m].mean_pairwise_reproj for m in self.members[i]]))
            out.append(ClusterSummary(sorted(self.members[i]), nodes, reps, valid, reproj))
        return out


def agglomerate(candidates: Sequence[CandidatePose], threshold_mm: float = 200.0) -> List[ClusterSummary]:
    """只做凝聚，不做最终冲突消解；用于检查阈值单调性"""
    if not candidates:
        return []
    agg = _Agglomerator(candidates)
    agg.run(threshold_mm)
    return agg.summaries()


def greedy_match(
    candidates: Sequence[CandidatePose],
    first_frame: FirstFrame,
    threshold_mm: float = 200.0,
    pair_reproj_gate_px: float = 20.0,
) -> GlobalIdentityMap:
    """
    贪心凝聚聚类 -> 全局身份映射。

    簇按 (候选数降序, 平均重投影误差升序, 字典序) 排序后依次接受，
    与已接受簇共享检测的簇被跳过；剩余检测成为单例全局 ID。

    Args:
        candidates: candidate_poses 的输出
        first_frame: {视角: [(局部 ID, 检测)]}，用于枚举全部检测
        threshold_mm: 合并停止阈值
        pair_reproj_gate_px: 只含一个候选的簇被接受的重投影误差上限
    """
    clusters = agglomerate(candidates, threshold_mm)
    clusters.sort(key=lambda c: (-len(c.members), c.mean_reproj, c.key))

    claimed = set()
    groups: List[Dict[str, int]] = []
    for cluster in clusters:
        if len(cluster.members) == 1 and cluster.mean_reproj > pair_reproj_gate_px:
            continue
        nodes = set(cluster.nodes.items())
        if nodes & claimed:
            continue
        claimed |= nodes
        groups.append(cluster.nodes)

    groups.sort(key=lambda g: min(g.items()))

    singletons = []
    for view in sorted(first_frame):
        for idx in range(len(first_frame[view])):
            if (view, idx) not in claimed:
                singletons.append({view: idx})
    if singletons and candidates:
        logger.warning(f"首帧有 {len(singletons)} 个检测未能跨视角匹配，作为单例全局 ID")

    id_map = GlobalIdentityMap()
    for gid, group in enumerate(groups + singletons, start=1):
        for view, idx in group.items():
            local_id = first_frame[view][idx][0]
            id_map.entries[(view, local_id)] = gid
    id_map.validate()
    logger.info(f"跨视角匹配完成: {len(groups)} 个多视角个体, {len(singletons)} 个单例")
    return id_map


def build_identity_map(
    first_frame: FirstFrame,
    calib: Mapping[str, CameraModel],
    config: Optional[MatchingConfig] = None,
) -> GlobalIdentityMap:
    """candidate_poses + greedy_match"""
    config = config or MatchingConfig()
    candidates = candidate_poses(first_frame, calib, config)
    return greedy_match(candidates, first_frame, config.threshold_mm, config.pair_reproj_gate_px)


def carry_over_ids(new_map: GlobalIdentityMap, old_map: GlobalIdentityMap) -> GlobalIdentityMap:
    """
    重新匹配后沿用旧全局 ID：新簇中若有轨迹在旧映射里，取其中最小的旧 ID
    （未被其他新簇占用时），否则分配新的 ID。
    """
    next_id = max(old_map.entries.values(), default=0) + 1
    taken = set()
    renamed = {}
    for new_gid in new_map.global_ids():
        previous = sorted({old_map.global_of(v, l) for v, l in
                           ((v, l) for (v, l), g in new_map.entries.items() if g == new_gid)} - {None})
        reuse = next((g for g in previous if g not in taken), None)
        if reuse is None:
            reuse = next_id
            next_id += 1
        taken.add(reuse)
        renamed[new_gid] = reuse
    result = GlobalIdentityMap({key: renamed[g] for key, g in new_map.entries.items()})
    result.validate()
    return result
