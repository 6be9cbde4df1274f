#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
端到端验收：完整规模的合成场景
"""

import time
from itertools import islice

import numpy as np
import pytest

from cli.commands import run_tracking
from crossview.matching import agglomerate, build_identity_map, candidate_poses
from fusion.pipeline import Pipeline, PipelineConfig, align_streams, run_pipeline
from fusion.smoother import SmootherConfig
from geometry.calibration_io import calibration_by_id
from geometry.camera import project
from geometry.triangulation import triangulate_point
from metrics.reports import evaluate_mot
from metrics.tracks import tracks_from_poses
from synthgen.config import DropoutWindow, ScenarioConfig
from synthgen.writer import generate_scene, write_scene

pytestmark = pytest.mark.slow

NO_SMOOTHING = PipelineConfig(smoother=SmootherConfig(enabled=False))


def _streams(scene):
    return {view: rendered.detections for view, rendered in scene.views.items()}


def _owners(first_frame_poses, gt):
    """全局 ID -> 真值下标，按首帧最近姿态"""
    owners = {}
    for pose in first_frame_poses:
        d = [np.linalg.norm(gt.keypoints[0, n] - pose.points, axis=1).mean() for n in range(len(gt.ids))]
        owners[pose.global_id] = int(np.argmin(d))
    return owners


def _rmse_against_truth(produced, gt):
    owners = _owners(produced[0], gt)
    assert sorted(owners.values()) == list(range(len(gt.ids)))
    errors = []
    for frame, poses in enumerate(produced):
        for pose in poses:
            assert pose.valid.all()
            errors.append(np.linalg.norm(pose.points - gt.keypoints[frame, owners[pose.global_id]], axis=1))
    return float(np.sqrt(np.mean(np.square(errors))))


def test_noiseless_full_scene_is_exact():
    t0 = time.perf_counter()
    scene = generate_scene(ScenarioConfig(n_individuals=10, n_frames=500, seed=0))
    produced = list(run_pipeline(_streams(scene), calibration_by_id(scene.cameras), NO_SMOOTHING))
    assert time.perf_counter() - t0 < 60.0
    assert len(produced) == 500
    assert _rmse_against_truth(produced, scene.gt) < 1e-3

    report = evaluate_mot(tracks_from_poses(scene.gt.all_poses()),
                          tracks_from_poses(p for poses in produced for p in poses), "3d")
    assert report.ids == 0 and report.mota == pytest.approx(1.0)
    assert report.hota == pytest.approx(1.0)


def _pose_errors(produced, gt):
    owners = _owners(produced[0], gt)
    errors = []
    for frame, poses in enumerate(produced):
        for pose in poses:
            truth = gt.keypoints[frame, owners[pose.global_id]]
            errors.extend(np.linalg.norm(pose.points[pose.valid] - truth[pose.valid], axis=1))
    return np.asarray(errors)


def test_noise_propagation_bound():
    scene = generate_scene(ScenarioConfig(n_individuals=10, n_frames=100, seed=1, noise_px=2.0))
    produced = list(run_pipeline(_streams(scene), calibration_by_id(scene.cameras), NO_SMOOTHING))
    ours = np.median(_pose_errors(produced, scene.gt))

    # 同一相机阵列、同一噪声下的孤立点三角化
    rng = np.random.default_rng(0)
    points = scene.gt.keypoints.reshape(-1, 3)
    oracle = []
    for p in points[rng.choice(len(points), 2000, replace=False)]:
        obs = [project(cam, p) + rng.normal(0.0, 2.0, 2) for cam in scene.cameras]
        oracle.append(np.linalg.norm(triangulate_point(scene.cameras, obs).point - p))
    assert ours <= 1.2 * np.median(oracle)


def test_noisy_scene_tracking_quality():
    config = ScenarioConfig(n_individuals=10, n_frames=500, seed=1, noise_px=2.0, miss_prob=0.05, clutter_rate=0.2)
    scene = generate_scene(config)
    produced = list(run_pipeline(_streams(scene), calibration_by_id(scene.cameras)))
    report = evaluate_mot(tracks_from_poses(scene.gt.all_poses()),
                          tracks_from_poses(p for poses in produced for p in poses), "3d")
    assert report.mota >= 0.95
    assert report.clear.ml_count == 0


def test_forced_dropout_keeps_individual():
    window = DropoutWindow(view="cam1", individual=3, start=100, end=120)
    scene = generate_scene(ScenarioConfig(n_individuals=5, n_frames=200, seed=2, force_dropout=[window]))
    produced = list(run_pipeline(_streams(scene), calibration_by_id(scene.cameras), NO_SMOOTHING))
    assert _rmse_against_truth(produced, scene.gt) < 1e-3
    owners = _owners(produced[0], scene.gt)
    target = [gid for gid, n in owners.items() if n == 2][0]
    during = [p for p in produced[110] if p.global_id == target][0]
    assert "cam1" not in during.contributing_views and len(during.contributing_views) == 3


@pytest.mark.parametrize("prefix", [1, 10, 100])
def test_prefix_runs_match_full_run(prefix):
    scene = generate_scene(ScenarioConfig(n_individuals=4, n_frames=150, seed=3, noise_px=2.0, clutter_rate=0.2))
    calib = calibration_by_id(scene.cameras)
    full = [[p.to_record() for p in poses] for poses in run_pipeline(_streams(scene), calib)]
    with Pipeline(calib) as pipeline:
        partial = [[p.to_record() for p in poses]
                   for poses in pipeline.run(islice(align_streams(_streams(scene)), prefix))]
    assert partial == full[:prefix]


@pytest.mark.benchmark
def test_throughput_ten_individuals(tmp_path):
    scene = generate_scene(ScenarioConfig(n_individuals=10, n_frames=500, seed=4, noise_px=2.0))
    write_scene(scene, tmp_path / "scene")
    t0 = time.perf_counter()
    pipeline = run_tracking(tmp_path / "scene", tmp_path / "scene" / "calib.json", tmp_path / "poses.jsonl",
                            PipelineConfig())
    elapsed = time.perf_counter() - t0
    assert pipeline.frames_processed / elapsed >= 30.0


def _first_frame(scene):
    """({视角: [(局部 ID, 检测)]}, {(视角, 局部 ID): 真值 ID})"""
    frame, truth = {}, {}
    for view, rendered in scene.views.items():
        dets = [d for d in rendered.detections if d.frame == 0]
        frame[view] = [(i + 1, det) for i, det in enumerate(dets)]
        for rec in rendered.gt2d:
            if rec["frame"] == 0 and rec["det"] >= 0:
                truth[(view, rec["det"] + 1)] = rec["gt_id"]
    return frame, truth


def test_first_frame_matching_over_seeds():
    recovered = 0
    trials = 100
    for seed in range(trials):
        n_individuals = 2 + seed % 9
        scene = generate_scene(ScenarioConfig(n_individuals=n_individuals, n_frames=1, seed=seed, noise_px=2.0))
        calib = calibration_by_id(scene.cameras)
        frame, truth = _first_frame(scene)
        id_map = build_identity_map(frame, calib)

        groups = {}
        for key, gid in id_map.entries.items():
            groups.setdefault(gid, set()).add(truth[key])
        recovered += len(groups) == n_individuals and all(len(g) == 1 for g in groups.values())

        if seed % 10 == 0:
            candidates = candidate_poses(frame, calib)
            previous = None
            for threshold in (50.0, 200.0, 800.0):
                clusters = [set(c.members) for c in agglomerate(candidates, threshold)]
                if previous is not None:
                    assert all(any(small <= big for big in clusters) for small in previous)
                previous = clusters
    assert recovered >= 0.99 * trials
