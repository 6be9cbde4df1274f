#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
跨视角匹配测试
"""

from itertools import combinations
from types import SimpleNamespace

import numpy as np
import pytest

from conftest import detection_from_points, make_rig, skeleton_at
from crossview.matching import (GlobalIdentityMap, MatchingConfig, agglomerate, build_identity_map,
                                candidate_poses, carry_over_ids, greedy_match, pose_distance)
from geometry.calibration_io import calibration_by_id
from utils.errors import NoSharedKeypoints

GRID = [(x, y) for y in (-500.0, 0.0, 500.0) for x in (-750.0, -250.0, 250.0, 750.0)]


def make_first_frame(centers, cams, seed=0, noise_px=0.0, shuffle=True):
    """
    Returns:
        ({视角: [(局部 ID, 检测)]}, {(视角, 局部 ID): 个体下标})
    """
    rng = np.random.default_rng(seed)
    skeletons = [skeleton_at((x, y, 0.0), rng) for x, y in centers]
    frame, truth = {}, {}
    for cam in cams:
        order = rng.permutation(len(skeletons)) if shuffle else np.arange(len(skeletons))
        entries = []
        for slot, ind in enumerate(order):
            det = detection_from_points(cam, skeletons[ind])
            det.keypoints[:, :2] += rng.normal(0.0, noise_px, size=(len(skeletons[ind]), 2)) if noise_px else 0.0
            local_id = 100 + slot
            entries.append((local_id, det))
            truth[(cam.camera_id, local_id)] = int(ind)
        frame[cam.camera_id] = entries
    return frame, truth


def partition(id_map: GlobalIdentityMap):
    groups = {}
    for key, gid in id_map.entries.items():
        groups.setdefault(gid, set()).add(key)
    return {frozenset(g) for g in groups.values()}


def matches_truth(id_map, truth, n_individuals, n_views):
    groups = partition(id_map)
    if len(groups) != n_individuals:
        return False
    for group in groups:
        if len(group) != n_views or len({truth[key] for key in group}) != 1:
            return False
    return True


# ---- 姿态距离 ----

def _pose(points, valid=None):
    points = np.asarray(points, dtype=float)
    return SimpleNamespace(points=points, valid=np.ones(len(points), bool) if valid is None else np.asarray(valid))


def test_pose_distance_examples():
    rng = np.random.default_rng(0)
    a = rng.uniform(-100, 100, size=(9, 3))
    assert pose_distance(_pose(a), _pose(a)) == 0.0
    assert pose_distance(_pose(a), _pose(a + [3.0, 0.0, 4.0])) == pytest.approx(5.0)

    b = a + rng.normal(0, 10, size=a.shape)
    va = np.array([1, 1, 1, 0, 0, 1, 1, 1, 1], bool)
    vb = np.array([1, 0, 1, 1, 0, 1, 0, 1, 1], bool)
    shared = va & vb
    expected = np.mean([np.linalg.norm(a[k] - b[k]) for k in np.flatnonzero(shared)])
    assert pose_distance(_pose(a, va), _pose(b, vb)) == pytest.approx(expected)

    with pytest.raises(NoSharedKeypoints):
        pose_distance(_pose(a, ~va), _pose(b, va))


# ---- 候选姿态 ----

def test_candidate_count_two_views(rig):
    frame, _ = make_first_frame(GRID[:2], rig[:2])
    candidates = candidate_poses(frame, calibration_by_id(rig[:2]))
    assert len(candidates) == 4
    assert [c.view_pair for c in candidates] == sorted(c.view_pair for c in candidates)


def test_candidate_count_four_views(rig):
    frame, _ = make_first_frame(GRID[:3], rig)
    candidates = candidate_poses(frame, calibration_by_id(rig))
    expected = sum(len(frame[a]) * len(frame[b]) for a, b in combinations(sorted(frame), 2))
    assert len(candidates) == expected == 6 * 9


def test_correct_pairings_have_zero_reprojection(rig):
    frame, truth = make_first_frame(GRID[:2], rig)
    for cand in candidate_poses(frame, calibration_by_id(rig)):
        (va, ia), (vb, ib) = cand.nodes
        same = truth[(va, frame[va][ia][0])] == truth[(vb, frame[vb][ib][0])]
        if same:
            assert cand.mean_pairwise_reproj < 1e-6
        else:
            assert cand.mean_pairwise_reproj > 1.0


# ---- 贪心匹配 ----

@pytest.mark.parametrize("n_individuals", [1, 2, 5, 10])
def test_noiseless_matching_exact(rig, n_individuals):
    frame, truth = make_first_frame(GRID[:n_individuals], rig, seed=n_individuals)
    id_map = build_identity_map(frame, calibration_by_id(rig))
    assert matches_truth(id_map, truth, n_individuals, 4)
    assert id_map.global_ids() == list(range(1, n_individuals + 1))


def test_single_view_all_singletons(rig):
    frame, _ = make_first_frame(GRID[:3], rig[:1])
    id_map = build_identity_map(frame, calibration_by_id(rig[:1]))
    assert id_map.n_globals == 3
    assert all(len(g) == 1 for g in partition(id_map))


def test_two_camera_rig_uses_reprojection_gate(rig):
    cams = [rig[0], rig[2]]
    frame, truth = make_first_frame(GRID[:2], cams)
    id_map = build_identity_map(frame, calibration_by_id(cams))
    assert matches_truth(id_map, truth, 2, 2)


def test_no_global_has_two_detections_from_one_view(rig):
    rng = np.random.default_rng(11)
    centers = [tuple(rng.uniform(-600, 600, 2)) for _ in range(6)]
    frame, _ = make_first_frame(centers, rig, seed=11, noise_px=5.0)
    id_map = build_identity_map(frame, calibration_by_id(rig))
    id_map.validate()
    covered = {(v, local) for v, entries in frame.items() for local, _ in entries}
    assert set(id_map.entries) == covered


def test_close_individuals_with_noise():
    rig = make_rig()
    calib = calibration_by_id(rig)
    successes = 0
    for seed in range(100):
        frame, truth = make_first_frame([(0.0, 0.0), (50.0, 0.0)], rig, seed=seed, noise_px=2.0)
        successes += matches_truth(build_identity_map(frame, calib), truth, 2, 4)
    assert successes >= 99


def test_result_invariant_to_detection_order(rig):
    calib = calibration_by_id(rig)
    frame, _ = make_first_frame(GRID[:5], rig, seed=4, noise_px=2.0, shuffle=False)
    reference = partition(build_identity_map(frame, calib))
    rng = np.random.default_rng(4)
    for _ in range(3):
        shuffled = {view: [entries[i] for i in rng.permutation(len(entries))] for view, entries in frame.items()}
        assert partition(build_identity_map(shuffled, calib)) == reference


def test_larger_threshold_never_splits_clusters(rig):
    calib = calibration_by_id(rig)
    for seed in range(5):
        rng = np.random.default_rng(seed)
        centers = [tuple(rng.uniform(-700, 700, 2)) for _ in range(4)]
        frame, _ = make_first_frame(centers, rig, seed=seed, noise_px=2.0)
        candidates = candidate_poses(frame, calib)
        previous = None
        for threshold in (10.0, 50.0, 200.0, 400.0, 1000.0):
            clusters = [set(c.members) for c in agglomerate(candidates, threshold)]
            if previous is not None:
                for small in previous:
                    assert any(small <= big for big in clusters)
            previous = clusters


def test_greedy_match_without_candidates():
    frame = {"cam0": [], "cam1": []}
    assert greedy_match([], frame).n_globals == 0


# ---- 身份映射 ----

def test_identity_map_json_round_trip():
    id_map = GlobalIdentityMap({("cam0", 3): 1, ("cam1", 7): 1, ("cam0", 4): 2})
    data = id_map.to_json()
    assert data == {"(cam0,3)": 1, "(cam0,4)": 2, "(cam1,7)": 1}
    assert GlobalIdentityMap.from_json(data).entries == id_map.entries
    assert id_map.members(1) == {"cam0": 3, "cam1": 7}
    assert id_map.global_of("cam1", 99) is None


def test_identity_map_validate_rejects_duplicates():
    with pytest.raises(ValueError):
        GlobalIdentityMap({("cam0", 1): 1, ("cam0", 2): 1}).validate()


def test_carry_over_ids():
    old = GlobalIdentityMap({("cam0", 1): 1, ("cam1", 1): 1, ("cam0", 2): 2, ("cam1", 2): 2})
    new = GlobalIdentityMap({("cam0", 1): 1, ("cam1", 5): 1, ("cam0", 7): 2, ("cam1", 8): 2,
                             ("cam0", 2): 3, ("cam1", 9): 3})
    carried = carry_over_ids(new, old)
    assert carried.global_of("cam1", 5) == 1
    assert carried.global_of("cam0", 2) == 2 and carried.global_of("cam1", 9) == 2
    assert carried.global_of("cam0", 7) == 3 and carried.global_of("cam1", 8) == 3


def test_matching_config_validation():
    assert MatchingConfig().threshold_mm == 200.0
    with pytest.raises(ValueError):
        MatchingConfig(threshold_mm=0)
