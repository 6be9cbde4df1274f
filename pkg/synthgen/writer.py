#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
场景文件读写
============

out_dir/
  calib.json              相机标定
  detections/<view>.jsonl 检测流
  gt_poses.jsonl          三维真值姿态
  gt2d/<view>.jsonl       2D 真值边车
  scenario.json           完整配置与种子
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Union

import numpy as np

from fusion.pose import Pose3D, read_poses, write_poses
from geometry.calibration_io import load_calibration, save_calibration
from geometry.camera import CameraModel
from synthgen.config import ScenarioConfig
from synthgen.motion import GroundTruth, simulate
from synthgen.render import RenderedView, gt2d_record_to_json, render
from synthgen.rig import build_rig
from synthgen.skeleton import SkeletonTemplate
from tracking.detection import Detection2D, read_detections, write_detections
from utils.atomic_io import AtomicLineWriter, atomic_write_json, read_jsonl
from utils.config_loader import validate_config
from utils.errors import SchemaError

logger = logging.getLogger(__name__)

CALIB_FILE = "calib.json"
DETECTIONS_DIR = "detections"
GT_POSES_FILE = "gt_poses.jsonl"
GT2D_DIR = "gt2d"
SCENARIO_FILE = "scenario.json"
SCENARIO_FORMAT = 1


@dataclass
class Scene:
    """一个完整的合成场景"""
    config: ScenarioConfig
    cameras: List[CameraModel]
    gt: GroundTruth
    views: Dict[str, RenderedView]


def generate_scene(config: ScenarioConfig) -> Scene:
    """simulate + build_rig + render"""
    skeleton = SkeletonTemplate(scale=config.body_scale)
    motion_ss, render_ss = np.random.SeedSequence(config.seed).spawn(2)
    gt = simulate(config, skeleton, np.random.default_rng(motion_ss))
    cameras = build_rig(config, skeleton)
    views = render(gt, cameras, config, skeleton, render_ss)
    return Scene(config, cameras, gt, views)


def write_scene(scene: Scene, out_dir: Union[str, Path]) -> List[Path]:
    """写出场景的全部文件，返回路径列表"""
    out_dir = Path(out_dir)
    (out_dir / DETECTIONS_DIR).mkdir(parents=True, exist_ok=True)
    (out_dir / GT2D_DIR).mkdir(parents=True, exist_ok=True)

    written = [save_calibration(scene.cameras, out_dir / CALIB_FILE)]
    for view_id, view in scene.views.items():
        path = out_dir / DETECTIONS_DIR / f"{view_id}.jsonl"
        write_detections(path, view.detections)
        written.append(path)
        path = out_dir / GT2D_DIR / f"{view_id}.jsonl"
        with AtomicLineWriter(path) as writer:
            for record in view.gt2d:
                writer.write(gt2d_record_to_json(record))
        written.append(path)

    path = out_dir / GT_POSES_FILE
    write_poses(path, scene.gt.all_poses())
    written.append(path)

    manifest = {
        "format": SCENARIO_FORMAT,
        "config": scene.config.model_dump(mode="json"),
        "views": sorted(scene.views),
        "n_individuals": scene.config.n_individuals,
        "body_length_mm": round(scene.gt.body_length, 6),
    }
    written.append(atomic_write_json(out_dir / SCENARIO_FILE, manifest))
    logger.info(f"场景已写入 {out_dir}: {len(scene.views)} 个视角, {scene.gt.n_frames} 帧")
    return written


@dataclass
class LoadedScenario:
    config: ScenarioConfig
    cameras: List[CameraModel]
    detections: Dict[str, List[Detection2D]] = field(default_factory=dict)
    gt_poses: List[Pose3D] = field(default_factory=list)
    gt2d: Dict[str, List[dict]] = field(default_factory=dict)


def read_scenario_config(out_dir: Union[str, Path]) -> ScenarioConfig:
    path = Path(out_dir) / SCENARIO_FILE
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise SchemaError(f"{path}: 无法读取场景清单: {e}") from e
    return validate_config(ScenarioConfig, data.get("config"))


def load_scenario(out_dir: Union[str, Path]) -> LoadedScenario:
    """读回 write_scene 写出的全部文件"""
    out_dir = Path(out_dir)
    config = read_scenario_config(out_dir)
    cameras = load_calibration(out_dir / CALIB_FILE)
    scenario = LoadedScenario(config, cameras)
    for cam in cameras:
        det_path = out_dir / DETECTIONS_DIR / f"{cam.camera_id}.jsonl"
        scenario.detections[cam.camera_id] = list(read_detections(det_path, cam.camera_id))
        scenario.gt2d[cam.camera_id] = [rec for _, rec in read_jsonl(out_dir / GT2D_DIR / f"{cam.camera_id}.jsonl")]
    scenario.gt_poses = list(read_poses(out_dir / GT_POSES_FILE))
    return scenario
