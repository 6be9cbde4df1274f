#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
二维跟踪测试：IoU、匈牙利分配、卡尔曼轨迹、SORT、检测流读写
"""

import itertools

import numpy as np
import pytest

from tracking.assignment import hungarian, iou, iou_matrix
from tracking.detection import Detection2D, read_detections, write_detections
from tracking.sort_tracker import SortTracker, TrackerConfig, Tracklet2D, bbox_to_z, predict, update, x_to_bbox
from utils.errors import SchemaError


def make_det(bbox, frame=0, view="cam0", score=0.9):
    kp = np.zeros((9, 4))
    x, y, w, h = bbox
    kp[:, 0] = x + w / 2.0
    kp[:, 1] = y + h / 2.0
    kp[:, 2] = 1.0
    kp[:, 3] = 1.0
    return Detection2D(view, frame, bbox, kp, score)


def _is_psd(matrix):
    return np.allclose(matrix, matrix.T) and np.linalg.eigvalsh(matrix).min() >= -1e-9


# ---- IoU ----

def test_iou_examples():
    assert iou((0, 0, 2, 2), (0, 0, 2, 2)) == pytest.approx(1.0)
    assert iou((0, 0, 2, 2), (5, 5, 2, 2)) == 0.0
    assert iou((0, 0, 2, 2), (1, 0, 2, 2)) == pytest.approx(1.0 / 3.0)


def test_iou_symmetric_and_matrix_consistent():
    rng = np.random.default_rng(0)
    boxes = np.column_stack([rng.uniform(0, 100, (20, 2)), rng.uniform(1, 50, (20, 2))])
    matrix = iou_matrix(boxes, boxes)
    for i, j in itertools.product(range(20), repeat=2):
        assert iou(boxes[i], boxes[j]) == pytest.approx(iou(boxes[j], boxes[i]))
        assert matrix[i, j] == pytest.approx(iou(boxes[i], boxes[j]))
    assert iou_matrix(np.zeros((0, 4)), boxes).shape == (0, 20)


# ---- 匈牙利分配 ----

def test_hungarian_identity():
    assert hungarian(np.array([[0.0, 9.0], [9.0, 0.0]])) == [(0, 0), (1, 1)]
    assert hungarian(np.zeros((0, 3))) == []


def test_hungarian_square_matches_brute_force():
    rng = np.random.default_rng(1)
    for _ in range(20):
        cost = rng.integers(0, 20, size=(3, 3)).astype(float)
        best = min(sum(cost[i, p[i]] for i in range(3)) for p in itertools.permutations(range(3)))
        assert sum(cost[r, c] for r, c in hungarian(cost)) == best


def test_hungarian_rectangular_matches_brute_force():
    rng = np.random.default_rng(2)
    for _ in range(20):
        cost = rng.integers(0, 20, size=(2, 3)).astype(float)
        best = min(cost[0, a] + cost[1, b] for a, b in itertools.permutations(range(3), 2))
        pairs = hungarian(cost)
        assert len(pairs) == 2
        assert sum(cost[r, c] for r, c in pairs) == best


# ---- 卡尔曼轨迹 ----

def test_bbox_state_round_trip():
    bbox = np.array([10.0, 20.0, 40.0, 80.0])
    assert np.allclose(x_to_bbox(bbox_to_z(bbox)), bbox)


def test_predict_zero_velocity_keeps_bbox():
    tracklet = Tracklet2D(make_det((100, 100, 50, 80)), 1)
    assert np.allclose(predict(tracklet), [100, 100, 50, 80])


def test_predict_constant_velocity():
    tracklet = Tracklet2D(make_det((100, 100, 50, 80)), 1)
    tracklet.kf.x[4, 0] = 5.0
    box = predict(tracklet)
    assert box[0] + box[2] / 2 == pytest.approx(125.0 + 5.0)

    tracklet = Tracklet2D(make_det((100, 100, 50, 80)), 2)
    tracklet.kf.x[4:7, 0] = [3.0, -2.0, 10.0]
    start = tracklet.kalman_state
    for _ in range(10):
        predict(tracklet)
    expected = start.copy()
    expected[:3] += 10 * start[4:7]
    assert np.allclose(tracklet.kalman_state, expected, atol=1e-9)


def test_update_with_prediction_keeps_mean():
    tracklet = Tracklet2D(make_det((100, 100, 50, 80)), 1)
    tracklet.kf.x[4, 0] = 2.0
    box = predict(tracklet)
    before = tracklet.kalman_state
    update(tracklet, make_det(box, frame=1))
    assert np.allclose(tracklet.kalman_state, before, atol=1e-9)
    assert tracklet.hits == 2 and tracklet.time_since_update == 0


def test_update_rejects_other_view():
    tracklet = Tracklet2D(make_det((100, 100, 50, 80)), 1)
    with pytest.raises(ValueError):
        update(tracklet, make_det((100, 100, 50, 80), view="cam1"))


def test_repeated_updates_converge():
    tracklet = Tracklet2D(make_det((199, 149, 60, 40)), 1)
    target = np.array([200.0, 150.0, 60.0, 40.0])
    for frame in range(1, 21):
        predict(tracklet)
        update(tracklet, make_det(target, frame=frame))
        assert _is_psd(tracklet.covariance)
    assert np.linalg.norm(tracklet.get_state() - target) < 0.1


def test_filtered_error_below_measurement_noise():
    rng = np.random.default_rng(3)
    errors = []
    for _ in range(200):
        tracklet = Tracklet2D(make_det((100, 100, 50, 80)), 1)
        for frame in range(1, 40):
            true_x = 100.0 + 3.0 * frame
            noisy = (true_x + rng.normal(), 100.0 + rng.normal(), 50.0, 80.0)
            predict(tracklet)
            update(tracklet, make_det(noisy, frame=frame))
            assert _is_psd(tracklet.covariance)
            if frame >= 10:
                errors.append(tracklet.get_state()[0] - true_x)
    assert np.var(errors) <= 1.0


# ---- SORT ----

def test_single_object_single_track():
    tracker = SortTracker("cam0")
    ids = set()
    for frame in range(50):
        out = tracker.step([make_det((100 + 2 * frame, 100, 50, 80), frame=frame)])
        assert len(out) == 1
        ids.add(out[0][0])
    assert ids == {1}


def test_two_crossing_objects_keep_identity():
    tracker = SortTracker("cam0")
    seen = {}
    for frame in range(60):
        a = make_det((100 + 10 * frame, 100, 50, 80), frame=frame)
        b = make_det((700 - 10 * frame, 400, 50, 80), frame=frame)
        for local_id, det in tracker.step([a, b]):
            label = "a" if det is a else "b"
            seen.setdefault(label, set()).add(local_id)
    assert seen["a"] == {1} and seen["b"] == {2}


def test_track_killed_after_max_age():
    config = TrackerConfig(max_age=10)
    tracker = SortTracker("cam0", config)
    box = (300, 300, 60, 60)
    for frame in range(5):
        tracker.step([make_det(box, frame=frame)])
    for frame in range(5, 16):
        assert tracker.step([]) == []
    assert tracker.tracklets == []
    tracker.step([make_det(box, frame=16)])
    assert [t.local_track_id for t in tracker.tracklets] == [2]


def test_track_survives_gap_within_max_age():
    tracker = SortTracker("cam0")
    box = (300, 300, 60, 60)
    for frame in range(5):
        tracker.step([make_det(box, frame=frame)])
    for frame in range(5, 15):
        tracker.step([])
    out = tracker.step([make_det(box, frame=15)])
    assert [i for i, _ in out] == [1]


def test_stopped_object_recovered_from_last_observation():
    def run(config):
        tracker = SortTracker("cam0", config)
        for frame in range(10):
            tracker.step([make_det((100 + 10 * frame, 100, 50, 50), frame=frame)])
        for frame in range(10, 14):
            tracker.step([])
        # 漏检期间预测框继续右移，物体实际停在最后观测处
        return tracker, tracker.step([make_det((190, 100, 50, 50), frame=14)])

    tracker, out = run(TrackerConfig())
    assert [i for i, _ in out] == [1]
    assert [t.local_track_id for t in tracker.tracklets] == [1]

    tracker, out = run(TrackerConfig(recover_from_last_observation=False))
    assert out == []
    assert [t.local_track_id for t in tracker.tracklets] == [1, 2]


def test_low_score_detections_ignored():
    tracker = SortTracker("cam0")
    assert tracker.step([make_det((0, 0, 10, 10), score=0.4)]) == []
    assert tracker.tracklets == []


def test_new_tracks_need_min_hits_after_warm_up():
    tracker = SortTracker("cam0")
    for frame in range(5):
        tracker.step([make_det((0, 0, 50, 50), frame=frame)])
    late = make_det((1000, 1000, 50, 50), frame=5)
    out = tracker.step([make_det((0, 0, 50, 50), frame=5), late])
    assert [i for i, _ in out] == [1]
    out = tracker.step([make_det((0, 0, 50, 50), frame=6), make_det((1000, 1000, 50, 50), frame=6)])
    assert [i for i, _ in out] == [1]
    out = tracker.step([make_det((0, 0, 50, 50), frame=7), make_det((1000, 1000, 50, 50), frame=7)])
    assert [i for i, _ in out] == [1, 2]


def test_ids_never_reused_and_reset():
    tracker = SortTracker("cam0", TrackerConfig(max_age=1))
    issued = []
    for frame in range(12):
        if frame % 3 == 0:
            tracker.step([make_det((frame * 100, 0, 50, 50), frame=frame)])
            issued.append(tracker.tracklets[-1].local_track_id)
        else:
            tracker.step([])
    assert issued == sorted(set(issued))
    tracker.reset()
    assert tracker.frame_count == 0
    tracker.step([make_det((0, 0, 50, 50))])
    assert tracker.tracklets[0].local_track_id == 1


def test_step_rejects_mixed_frames_and_views():
    tracker = SortTracker("cam0")
    with pytest.raises(ValueError):
        tracker.step([make_det((0, 0, 5, 5), frame=0), make_det((9, 9, 5, 5), frame=1)])
    with pytest.raises(ValueError):
        tracker.step([make_det((0, 0, 5, 5), view="cam1")])


# ---- 检测流 ----

def test_detection_stream_round_trip(tmp_path):
    dets = [make_det((10 * f, 5, 20, 30), frame=f) for f in range(5)]
    path = tmp_path / "cam0.jsonl"
    assert write_detections(path, dets) == 5
    loaded = list(read_detections(path, "cam0"))
    assert [d.frame for d in loaded] == [0, 1, 2, 3, 4]
    assert np.allclose(loaded[3].bbox, dets[3].bbox)
    assert loaded[0].keypoints.shape == (9, 4)


def test_detection_stream_schema_errors(tmp_path):
    path = tmp_path / "cam0.jsonl"
    write_detections(path, [make_det((0, 0, 5, 5), frame=3), make_det((0, 0, 5, 5), frame=1)])
    with pytest.raises(SchemaError):
        list(read_detections(path, "cam0"))

    write_detections(path, [make_det((0, 0, 5, 5))])
    with pytest.raises(SchemaError):
        list(read_detections(path, "cam1"))

    path.write_text('{"view": "cam0", "frame": 0, "bbox": [0, 0, 0, 5], "score": 1, "kp": []}\n',
                    encoding="utf-8")
    with pytest.raises(SchemaError):
        list(read_detections(path))

    path.write_text("{not json\n", encoding="utf-8")
    with pytest.raises(SchemaError):
        list(read_detections(path))

    bad_conf = make_det((0, 0, 5, 5))
    bad_conf.keypoints[0, 2] = 1.5
    with pytest.raises(SchemaError):
        bad_conf.validate()
