#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
把真值投影为各视角的检测流
==========================

- 关键点投影后加 σ px 的高斯噪声；包围盒 = 关键点范围放大 15%（中心不变）
- 每个检测以 miss_prob 概率漏检，force_dropout 窗口内强制漏检
- 杂波：每视角每帧 Poisson(clutter_rate) 个随机位置的骨架投影，真值身份记为 -1
- 有任一关键点落在图像外或相机后方的个体在该视角不产生检测
同时输出每视角的 2D 真值边车记录。
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from geometry.camera import CameraModel, in_image, project_points
from synthgen.config import ScenarioConfig
from synthgen.motion import GroundTruth
from synthgen.skeleton import SkeletonTemplate
from tracking.detection import Detection2D
from utils.errors import NonPositiveDepth

logger = logging.getLogger(__name__)

BBOX_MARGIN = 1.15
MIN_BOX_PX = 1.0
KEYPOINT_CONF_RANGE = (0.7, 1.0)
SCORE_RANGE = (0.8, 1.0)
CLUTTER_SCORE_RANGE = (0.3, 0.9)
CLUTTER_CONF_RANGE = (0.3, 0.7)
CLUTTER_EXTRA_NOISE_PX = 2.0


def bbox_from_keypoints(uv: np.ndarray) -> np.ndarray:
    """关键点范围 × 1.15 的 (x, y, w, h)"""
    lo, hi = uv.min(axis=0), uv.max(axis=0)
    center = (lo + hi) / 2.0
    size = np.maximum((hi - lo) * BBOX_MARGIN, MIN_BOX_PX)
    return np.concatenate([center - size / 2.0, size])


@dataclass
class RenderedView:
    """一个视角的检测与 2D 真值"""
    view_id: str
    detections: List[Detection2D] = field(default_factory=list)
    gt2d: List[dict] = field(default_factory=list)


def _visible_projection(cam: CameraModel, points: np.ndarray) -> Optional[np.ndarray]:
    try:
        uv = project_points(cam, points)
    except NonPositiveDepth:
        return None
    return uv if np.all(in_image(cam, uv)) else None


def _kp_rows(uv: np.ndarray, conf: np.ndarray) -> np.ndarray:
    return np.column_stack([uv, conf, np.ones(len(uv))])


def render_view(gt: GroundTruth, cam: CameraModel, config: ScenarioConfig,
                rng: np.random.Generator, skeleton: SkeletonTemplate) -> RenderedView:
    out = RenderedView(cam.camera_id)
    sigma = config.noise_px
    half = np.array(config.arena_size_mm) / 2.0
    n_kp = gt.keypoints.shape[2]
    clipped = 0

    for frame in range(gt.n_frames):
        frame_dets: List[Detection2D] = []
        for n, gid in enumerate(gt.ids):
            gid = int(gid)
            uv = _visible_projection(cam, gt.keypoints[frame, n])
            if uv is None:
                clipped += 1
                continue
            missed = rng.random() < config.miss_prob
            noise = rng.normal(0.0, 1.0, uv.shape) * sigma
            conf = rng.uniform(*KEYPOINT_CONF_RANGE, n_kp) if sigma > 0 else np.ones(n_kp)
            score = float(rng.uniform(*SCORE_RANGE)) if sigma > 0 else 1.0
            if any(w.covers(cam.camera_id, gid, frame) for w in config.force_dropout):
                missed = True

            record = {"view": cam.camera_id, "frame": frame, "det": -1, "gt_id": gid,
                      "bbox": bbox_from_keypoints(uv), "kp": _kp_rows(uv, np.ones(n_kp))}
            if not missed:
                noisy = uv + noise
                record["det"] = len(frame_dets)
                frame_dets.append(Detection2D(cam.camera_id, frame, bbox_from_keypoints(noisy),
                                              _kp_rows(noisy, conf), score))
            out.gt2d.append(record)

        for _ in range(rng.poisson(config.clutter_rate) if config.clutter_rate > 0 else 0):
            position = rng.uniform(-half, half)
            heading = rng.uniform(-np.pi, np.pi)
            uv = _visible_projection(cam, skeleton.place(position, heading))
            if uv is None:
                continue
            noisy = uv + rng.normal(0.0, 1.0, uv.shape) * (sigma + CLUTTER_EXTRA_NOISE_PX)
            conf = rng.uniform(*CLUTTER_CONF_RANGE, n_kp)
            score = float(rng.uniform(*CLUTTER_SCORE_RANGE))
            box = bbox_from_keypoints(noisy)
            out.gt2d.append({"view": cam.camera_id, "frame": frame, "det": len(frame_dets), "gt_id": -1,
                             "bbox": box, "kp": _kp_rows(noisy, conf)})
            frame_dets.append(Detection2D(cam.camera_id, frame, box, _kp_rows(noisy, conf), score))

        out.detections.extend(frame_dets)

    if clipped:
        logger.info(f"视角 {cam.camera_id}: {clipped} 次个体超出画面，未生成检测")
    return out


def render(gt: GroundTruth, rig: Sequence[CameraModel], config: ScenarioConfig,
           skeleton: Optional[SkeletonTemplate] = None,
           seed_sequence: Optional[np.random.SeedSequence] = None) -> Dict[str, RenderedView]:
    """
    生成各视角检测流。

    每个视角使用独立的随机流，结果与视角处理顺序无关。

    Returns:
        {视角: RenderedView}
    """
    skeleton = skeleton or SkeletonTemplate(scale=config.body_scale)
    if seed_sequence is None:
        seed_sequence = np.random.SeedSequence(config.seed).spawn(2)[1]
    streams = seed_sequence.spawn(len(rig))
    return {cam.camera_id: render_view(gt, cam, config, np.random.default_rng(ss), skeleton)
            for cam, ss in zip(rig, streams)}


def gt2d_record_to_json(record: dict) -> dict:
    return {
        "view": record["view"],
        "frame": int(record["frame"]),
        "det": int(record["det"]),
        "gt_id": int(record["gt_id"]),
        "bbox": [round(float(v), 6) for v in record["bbox"]],
        "kp": [[round(float(u), 6), round(float(v), 6), round(float(c), 6), int(s)]
               for u, v, c, s in record["kp"]],
    }
