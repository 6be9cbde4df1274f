#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
合成数据生成测试
"""

import numpy as np
import pytest
from pydantic import ValidationError

from geometry.camera import in_image, project_points
from synthgen.config import DropoutWindow, ScenarioConfig
from synthgen.motion import MAX_TURN_RAD, simulate
from synthgen.render import CLUTTER_SCORE_RANGE, bbox_from_keypoints
from synthgen.rig import arena_corners, build_rig
from synthgen.skeleton import SkeletonTemplate
from synthgen.writer import (CALIB_FILE, DETECTIONS_DIR, GT2D_DIR, GT_POSES_FILE, SCENARIO_FILE, generate_scene,
                             load_scenario, write_scene)
from utils.config_loader import validate_config
from utils.errors import ConfigError


def detections_by_frame(view):
    out = {}
    for det in view.detections:
        out.setdefault(det.frame, []).append(det)
    return out


def records_with_detection(view):
    """[(2D 真值记录, 对应检测)]"""
    by_frame = detections_by_frame(view)
    return [(rec, by_frame[rec["frame"]][rec["det"]]) for rec in view.gt2d if rec["det"] >= 0]


# ---- 骨架与运动 ----

def test_skeleton_template():
    skeleton = SkeletonTemplate()
    assert 150.0 <= skeleton.body_length <= 350.0
    placed = skeleton.place(np.array([100.0, 200.0]), np.pi / 2.0)
    assert np.allclose(placed[0], [100.0, 320.0, 150.0])
    with pytest.raises(ConfigError):
        SkeletonTemplate(scale=3.0)


def test_simulation_is_deterministic():
    config = ScenarioConfig(n_individuals=4, n_frames=50, seed=11)
    a, b = simulate(config), simulate(config)
    assert np.array_equal(a.keypoints, b.keypoints)
    assert not np.array_equal(a.keypoints, simulate(config.model_copy(update={"seed": 12})).keypoints)
    assert a.ids.tolist() == [1, 2, 3, 4]


def test_separation_speed_and_arena():
    config = ScenarioConfig(n_individuals=10, n_frames=200, seed=5)
    gt = simulate(config)
    half = np.array(config.arena_size_mm) / 2.0
    for t in range(gt.n_frames):
        pos = gt.positions[t]
        d = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=2)
        d[np.diag_indices(len(pos))] = np.inf
        assert d.min() >= gt.body_length - 1e-9
        assert np.all(np.abs(pos) <= half)
        if t:
            step = np.linalg.norm(pos - gt.positions[t - 1], axis=1)
            assert step.max() <= config.speed_max_mm + 1e-9


def test_heading_changes_are_bounded():
    gt = simulate(ScenarioConfig(n_individuals=10, n_frames=300, seed=3))
    step = np.diff(gt.headings, axis=0)
    step = (step + np.pi) % (2.0 * np.pi) - np.pi
    assert np.abs(step).max() <= MAX_TURN_RAD + 1e-9


def test_ground_truth_poses():
    gt = simulate(ScenarioConfig(n_individuals=2, n_frames=3, seed=0))
    poses = list(gt.all_poses())
    assert [(p.frame, p.global_id) for p in poses] == [(0, 1), (0, 2), (1, 1), (1, 2), (2, 1), (2, 2)]
    assert all(p.valid.all() for p in poses)


def test_arena_too_small():
    with pytest.raises(ConfigError):
        simulate(ScenarioConfig(n_individuals=10, arena_size_mm=(400.0, 400.0)))


# ---- 相机阵列 ----

def test_rig_sees_whole_arena():
    config = ScenarioConfig()
    skeleton = SkeletonTemplate()
    rig = build_rig(config, skeleton)
    assert [cam.camera_id for cam in rig] == ["cam0", "cam1", "cam2", "cam3"]
    corners = arena_corners(config, skeleton)
    for cam in rig:
        assert in_image(cam, project_points(cam, corners)).all()
    other = build_rig(config.model_copy(update={"seed": 99}), skeleton)
    assert all(np.allclose(a.K, b.K) and np.allclose(a.R, b.R) for a, b in zip(rig, other))


# ---- 渲染 ----

def test_noiseless_detections_are_exact_projections(small_scene):
    gt = small_scene.gt
    for cam in small_scene.cameras:
        view = small_scene.views[cam.camera_id]
        pairs = records_with_detection(view)
        assert len(pairs) == gt.n_frames * len(gt.ids)
        for rec, det in pairs:
            n = rec["gt_id"] - 1
            uv = project_points(cam, gt.keypoints[rec["frame"], n])
            assert np.allclose(det.keypoints[:, :2], uv, atol=1e-9)
            assert np.all(det.keypoints[:, 2:] == 1.0) and det.score == 1.0
            assert np.allclose(det.bbox, bbox_from_keypoints(uv))


def test_keypoint_noise_level():
    scene = generate_scene(ScenarioConfig(n_individuals=3, n_frames=60, seed=1, noise_px=2.0))
    residuals = []
    for view in scene.views.values():
        for rec, det in records_with_detection(view):
            residuals.append(det.keypoints[:, :2] - rec["kp"][:, :2])
            assert 0.8 <= det.score <= 1.0
    residuals = np.concatenate(residuals).ravel()
    assert abs(residuals.mean()) < 0.1
    assert residuals.std() == pytest.approx(2.0, rel=0.05)


def test_miss_probability():
    scene = generate_scene(ScenarioConfig(n_individuals=5, n_frames=100, seed=2, miss_prob=0.3))
    records = [rec for view in scene.views.values() for rec in view.gt2d]
    missed = np.mean([rec["det"] < 0 for rec in records])
    assert missed == pytest.approx(0.3, abs=0.05)


def test_forced_dropout_window():
    window = DropoutWindow(view="cam1", individual=2, start=10, end=20)
    scene = generate_scene(ScenarioConfig(n_individuals=3, n_frames=40, seed=4, force_dropout=[window]))
    for view_id, view in scene.views.items():
        for rec in view.gt2d:
            hidden = view_id == "cam1" and rec["gt_id"] == 2 and 10 <= rec["frame"] <= 20
            assert (rec["det"] < 0) == hidden


def test_clutter_is_labelled():
    scene = generate_scene(ScenarioConfig(n_individuals=2, n_frames=50, seed=6, clutter_rate=1.0))
    clutter = [(rec, det) for view in scene.views.values() for rec, det in records_with_detection(view)
               if rec["gt_id"] == -1]
    assert len(clutter) > 50
    for _, det in clutter:
        assert CLUTTER_SCORE_RANGE[0] <= det.score <= CLUTTER_SCORE_RANGE[1]


def test_scene_is_deterministic():
    config = ScenarioConfig(n_individuals=2, n_frames=20, seed=8, noise_px=1.0, clutter_rate=0.5)
    a, b = generate_scene(config), generate_scene(config)
    for view in a.views:
        assert [d.to_record() for d in a.views[view].detections] == [d.to_record() for d in b.views[view].detections]


# ---- 文件 ----

def test_write_and_load_scene(tmp_path, small_scene):
    paths = write_scene(small_scene, tmp_path)
    for name in (CALIB_FILE, GT_POSES_FILE, SCENARIO_FILE):
        assert tmp_path / name in paths
    for view in small_scene.views:
        assert (tmp_path / DETECTIONS_DIR / f"{view}.jsonl").exists()
        assert (tmp_path / GT2D_DIR / f"{view}.jsonl").exists()

    loaded = load_scenario(tmp_path)
    assert loaded.config == small_scene.config
    assert [c.camera_id for c in loaded.cameras] == ["cam0", "cam1", "cam2", "cam3"]
    assert len(loaded.gt_poses) == small_scene.gt.n_frames * 3
    assert np.allclose(loaded.gt_poses[4].points, small_scene.gt.keypoints[1, 1], atol=1e-6)
    for view, rendered in small_scene.views.items():
        assert len(loaded.detections[view]) == len(rendered.detections)
        assert len(loaded.gt2d[view]) == len(rendered.gt2d)


# ---- 配置 ----

def test_scenario_config_validation():
    assert ScenarioConfig().n_individuals == 10
    with pytest.raises(ConfigError):
        validate_config(ScenarioConfig, {"n_individuals": 0})
    with pytest.raises(ConfigError):
        validate_config(ScenarioConfig, {"unknown": 1})
    with pytest.raises(ValidationError):
        DropoutWindow(view="cam0", individual=1, start=5, end=2)
    with pytest.raises(ValidationError):
        ScenarioConfig(speed_min_mm=5.0, speed_max_mm=1.0)
