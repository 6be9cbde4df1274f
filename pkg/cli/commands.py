#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
命令实现
========

每个命令返回退出码：
    0 成功
    1 其他错误
    2 配置错误
    3 首帧为空
    4 标定或数据模式错误
    5 评估不匹配
失败时同样写出运行清单 (status = failed)。
"""

import json
import logging
import tempfile
import time
import traceback
from contextlib import ExitStack
from itertools import islice
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from cli.manifest import RunManifest, collect_files, manifest_path_for
from fusion.pipeline import Pipeline, PipelineConfig, align_streams
from fusion.pose import read_poses
from geometry.calibration_io import calibration_by_id, load_calibration
from geometry.camera import camera_depths, in_image, project_points
from metrics.pose_metrics import concat_pairs
from metrics.reports import (combine_mot, evaluate_mot, mot_table, pair_for_evaluation, pose_report_from_pairs,
                             pose_table)
from metrics.tracks import EvalMode, load_instances, tracks_from_instances
from synthgen.config import ScenarioConfig
from synthgen.writer import (CALIB_FILE, DETECTIONS_DIR, SCENARIO_FILE, generate_scene, read_scenario_config,
                             write_scene)
from tracking.detection import read_detections
from utils.atomic_io import AtomicLineWriter, atomic_write_json
from utils.config_loader import load_config, validate_config
from utils.env_config import get_env_config
from utils.errors import ConfigError, EmptyFirstFrame, MuppetError, SchemaError
from utils.report_table import render_table

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _guarded(manifest: RunManifest, manifest_path: Optional[Path], body: Callable[[], int],
             verbose: bool = False) -> int:
    """执行命令主体，把异常映射为退出码并写出清单"""
    try:
        code = body()
    except MuppetError as e:
        manifest.fail(e)
        print(f"❌ {type(e).__name__}: {e}")
        if verbose:
            traceback.print_exc()
        code = e.exit_code
    except KeyboardInterrupt as e:
        manifest.fail(e)
        print("\n👋 程序被用户中断")
        code = 130
    except Exception as e:
        manifest.fail(e)
        print(f"❌ 程序错误: {e}")
        if verbose:
            traceback.print_exc()
        code = 1

    if manifest_path is not None:
        try:
            manifest.write(manifest_path)
        except OSError as e:
            logger.error(f"运行清单写入失败 {manifest_path}: {e}")
    return code


# ---- synth ----

def cmd_synth(config_path: Optional[PathLike], out_dir: PathLike, verbose: bool = False) -> int:
    """生成合成场景：标定、检测流、三维真值、2D 真值边车与场景清单"""
    out_dir = Path(out_dir)
    manifest = RunManifest("synth", inputs={"config": str(config_path) if config_path else ""},
                           outputs={"out_dir": str(out_dir)})

    def body() -> int:
        config = load_config(ScenarioConfig, config_path)
        manifest.config = config.model_dump(mode="json")
        with manifest.stage("generate"):
            scene = generate_scene(config)
        with manifest.stage("write"):
            paths = write_scene(scene, out_dir)
        manifest.add_digests(paths, root=out_dir)
        manifest.finish(config.n_frames)
        print(f"✅ 场景已生成: {out_dir} ({config.n_individuals} 个个体, {config.n_cameras} 个视角, "
              f"{config.n_frames} 帧)")
        return 0

    return _guarded(manifest, out_dir / "manifest.json", body, verbose)


# ---- track ----

def resolve_pipeline_config(config_path: Optional[PathLike], threads: Optional[int] = None,
                            rematch_frame: Optional[int] = None) -> PipelineConfig:
    """配置文件 + 命令行覆盖；线程数优先级：命令行 > 配置文件 > MUPPET_THREADS > 视角数"""
    config = load_config(PipelineConfig, config_path)
    data = config.model_dump()
    if threads is not None:
        data["threads"] = threads
    elif data.get("threads") is None:
        data["threads"] = get_env_config().get_threads()
    if rematch_frame is not None:
        data["rematch_frame"] = rematch_frame
    return validate_config(PipelineConfig, data)


def open_streams(detections_dir: PathLike, view_ids: Sequence[str]):
    """每个视角一个检测流；缺少任一视角的文件时抛出 SchemaError"""
    detections_dir = Path(detections_dir)
    if (detections_dir / DETECTIONS_DIR).is_dir():
        detections_dir = detections_dir / DETECTIONS_DIR
    if not detections_dir.is_dir():
        raise SchemaError(f"检测目录不存在: {detections_dir}")

    streams = {}
    for view in view_ids:
        path = detections_dir / f"{view}.jsonl"
        if not path.exists():
            raise SchemaError(f"缺少视角 {view} 的检测文件: {path}")
        streams[view] = read_detections(path, view)
    extra = sorted(p.stem for p in detections_dir.glob("*.jsonl") if p.stem not in streams)
    if extra:
        logger.warning(f"检测目录中有标定之外的视角，已忽略: {extra}")
    return streams


def scenario_for(detections_dir: PathLike) -> Optional[ScenarioConfig]:
    """检测目录所属场景的配置；目录本身或其上级 (detections/) 没有场景清单时返回 None"""
    directory = Path(detections_dir)
    for candidate in (directory, directory.parent):
        if (candidate / SCENARIO_FILE).exists():
            try:
                return read_scenario_config(candidate)
            except MuppetError as e:
                logger.warning(f"场景清单不可用，忽略: {e}")
                return None
        if directory.name != DETECTIONS_DIR:
            break
    return None


def _track_record(view: str, local_id: int, det) -> Dict[str, Any]:
    record = det.to_record()
    record["id"] = local_id
    record["view"] = view
    return record


def run_tracking(detections_dir: PathLike, calib_path: PathLike, out_path: PathLike, config: PipelineConfig,
                 tracks2d_dir: Optional[PathLike] = None, max_frames: Optional[int] = None) -> Pipeline:
    """
    读取检测、运行流水线并流式写出三维轨迹。

    Returns:
        已关闭的 Pipeline，可读取 frames_processed / timings / id_map
    """
    calib = calibration_by_id(load_calibration(calib_path))
    streams = open_streams(detections_dir, list(calib))
    scenario = scenario_for(detections_dir)
    frames = align_streams(streams, scenario.n_frames if scenario is not None else None)
    if max_frames is not None:
        frames = islice(frames, max_frames)

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with ExitStack() as stack:
        sink = None
        if tracks2d_dir is not None:
            tracks2d_dir = Path(tracks2d_dir)
            tracks2d_dir.mkdir(parents=True, exist_ok=True)
            writers = {view: stack.enter_context(AtomicLineWriter(tracks2d_dir / f"{view}.jsonl"))
                       for view in calib}

            def sink(frame, outputs):
                for view, pairs in outputs.items():
                    for local_id, det in pairs:
                        writers[view].write(_track_record(view, local_id, det))

        writer = stack.enter_context(AtomicLineWriter(out_path))
        pipeline = stack.enter_context(Pipeline(calib, config, track_sink=sink))
        for poses in pipeline.run(frames):
            for pose in poses:
                writer.write(pose.to_record())
        if pipeline.frames_processed == 0:
            raise EmptyFirstFrame("检测流为空，没有可处理的帧")
    return pipeline


def cmd_track(detections_dir: PathLike, calib_path: PathLike, out_path: PathLike,
              config_path: Optional[PathLike] = None, threads: Optional[int] = None,
              rematch_frame: Optional[int] = None, tracks2d_dir: Optional[PathLike] = None,
              max_frames: Optional[int] = None, verbose: bool = False) -> int:
    """多视角检测 -> 三维轨迹 JSON-lines + 运行清单"""
    out_path = Path(out_path)
    manifest = RunManifest("track", inputs={"detections": str(detections_dir), "calib": str(calib_path),
                                            "config": str(config_path) if config_path else ""},
                           outputs={"poses": str(out_path)})

    def body() -> int:
        config = resolve_pipeline_config(config_path, threads, rematch_frame)
        manifest.config = config.model_dump(mode="json")
        pipeline = run_tracking(detections_dir, calib_path, out_path, config, tracks2d_dir, max_frames)
        manifest.add_timings(pipeline.timings)
        manifest.extra["n_globals"] = pipeline.id_map.n_globals if pipeline.id_map else 0
        manifest.extra["identity_map"] = pipeline.id_map.to_json() if pipeline.id_map else {}
        outputs = [out_path]
        if tracks2d_dir is not None:
            manifest.outputs["tracks2d"] = str(tracks2d_dir)
            outputs += collect_files(tracks2d_dir)
        manifest.add_digests(outputs)
        manifest.finish(pipeline.frames_processed)
        print(f"✅ 跟踪完成: {pipeline.frames_processed} 帧, {manifest.extra['n_globals']} 个全局身份, "
              f"{manifest.fps:.1f} fps -> {out_path}")
        return 0

    return _guarded(manifest, manifest_path_for(out_path), body, verbose)


# ---- eval ----

def _check_pairs(pred_paths: Sequence[PathLike], gt_paths: Sequence[PathLike]):
    if len(pred_paths) != len(gt_paths) or not pred_paths:
        raise ConfigError(f"预测文件 ({len(pred_paths)}) 与真值文件 ({len(gt_paths)}) 数量必须相同且非空")


def _sequence_names(paths: Sequence[PathLike]) -> List[str]:
    names = [Path(p).stem for p in paths]
    if len(set(names)) != len(names):
        names = [str(p) for p in paths]
    return names


def _emit(result: Dict[str, Any], table: str, json_out: Optional[PathLike]):
    print(json.dumps(result, indent=2, ensure_ascii=False))
    print()
    print(table)
    if json_out:
        atomic_write_json(json_out, result)


def cmd_eval_pose(pred_paths: Sequence[PathLike], gt_paths: Sequence[PathLike], mode: str = "3d",
                  match_by: str = "nearest", json_out: Optional[PathLike] = None, verbose: bool = False) -> int:
    """姿态精度评估：RMSE | Median | PCK05 | PCK10"""
    manifest = RunManifest("eval-pose", inputs={"pred": ",".join(map(str, pred_paths)),
                                                "gt": ",".join(map(str, gt_paths))})

    def body() -> int:
        _check_pairs(pred_paths, gt_paths)
        eval_mode = EvalMode.parse(mode)
        rows, all_pairs, result = [], [], {"mode": eval_mode.value, "match_by": match_by, "sequences": {}}
        for name, pred, gt in zip(_sequence_names(pred_paths), pred_paths, gt_paths):
            pairs = pair_for_evaluation(load_instances(pred, eval_mode), load_instances(gt, eval_mode),
                                        eval_mode, match_by)
            report = pose_report_from_pairs(pairs, eval_mode)
            all_pairs.append(pairs)
            rows.append((name, report))
            result["sequences"][name] = report.to_dict()
        if len(rows) > 1:
            combined = pose_report_from_pairs(concat_pairs(all_pairs), eval_mode)
            rows.append(("Combined", combined))
            result["combined"] = combined.to_dict()
        unit = "px" if eval_mode is EvalMode.TWO_D else "mm"
        _emit(result, pose_table(rows, title=f"姿态精度 ({eval_mode.value}, {unit})"), json_out)
        return 0

    return _guarded(manifest, None, body, verbose)


def cmd_eval_mot(pred_paths: Sequence[PathLike], gt_paths: Sequence[PathLike], mode: str = "3d",
                 json_out: Optional[PathLike] = None, verbose: bool = False) -> int:
    """跟踪评估：HOTA | MOTA | MOTP | Rcll | Prcn | MT | ML | FPF | IDS | Frag | IDF1"""
    manifest = RunManifest("eval-mot", inputs={"pred": ",".join(map(str, pred_paths)),
                                               "gt": ",".join(map(str, gt_paths))})

    def body() -> int:
        _check_pairs(pred_paths, gt_paths)
        eval_mode = EvalMode.parse(mode)
        rows, result = [], {"mode": eval_mode.value, "sequences": {}}
        for name, pred, gt in zip(_sequence_names(pred_paths), pred_paths, gt_paths):
            pred_tracks = tracks_from_instances(load_instances(pred, eval_mode), eval_mode)
            gt_tracks = tracks_from_instances(load_instances(gt, eval_mode), eval_mode)
            report = evaluate_mot(gt_tracks, pred_tracks, eval_mode, interpolate_gt=True)
            rows.append((name, report))
            result["sequences"][name] = report.to_dict()
        if len(rows) > 1:
            combined = combine_mot([r for _, r in rows])
            rows.append(("Combined", combined))
            result["combined"] = combined.to_dict()
        _emit(result, mot_table(rows, title=f"跟踪评估 ({eval_mode.value})"), json_out)
        return 0

    return _guarded(manifest, None, body, verbose)


# ---- bench ----

def _scenario_individuals(directory: Path) -> Optional[int]:
    config = scenario_for(directory)
    return config.n_individuals if config is not None else None


def cmd_bench(detection_dirs: Sequence[PathLike], calib_path: Optional[PathLike] = None, repeat: int = 3,
              config_path: Optional[PathLike] = None, threads: Optional[int] = None,
              out_path: Optional[PathLike] = None, verbose: bool = False) -> int:
    """
    吞吐量基准：每个目录完整运行 repeat 次（读取、跟踪、写出），报告平均 fps。
    calib_path 为空时使用各目录下的 calib.json。
    """
    dirs = [Path(d) for d in detection_dirs]
    out_path = Path(out_path) if out_path else (dirs[0] / "bench.manifest.json" if dirs else Path("bench.manifest.json"))
    manifest = RunManifest("bench", inputs={"dirs": ",".join(map(str, dirs)), "repeat": str(repeat)},
                           outputs={"manifest": str(out_path)})

    def body() -> int:
        if repeat < 1:
            raise ConfigError(f"repeat: 必须 >= 1 (收到 {repeat})")
        if not dirs:
            raise ConfigError("至少需要一个检测目录")
        config = resolve_pipeline_config(config_path, threads)
        manifest.config = config.model_dump(mode="json")

        runs = []
        total_frames = 0
        for directory in dirs:
            calib = Path(calib_path) if calib_path else directory / CALIB_FILE
            timings, fps_list, frames = [], [], 0
            for r in range(repeat):
                with tempfile.TemporaryDirectory() as tmp:
                    t0 = time.perf_counter()
                    pipeline = run_tracking(directory, calib, Path(tmp) / "poses.jsonl", config)
                    elapsed = time.perf_counter() - t0
                frames = pipeline.frames_processed
                timings.append(elapsed)
                fps_list.append(frames / elapsed if elapsed > 0 else 0.0)
                logger.info(f"{directory} 第 {r + 1}/{repeat} 次: {frames} 帧 {elapsed:.2f}s")
            total_frames += frames * repeat
            runs.append({
                "dir": str(directory),
                "n_individuals": _scenario_individuals(directory),
                "frames": frames,
                "timings": [round(t, 6) for t in timings],
                "mean_time": round(sum(timings) / len(timings), 6),
                "fps": [round(f, 3) for f in fps_list],
                "mean_fps": round(sum(fps_list) / len(fps_list), 3),
            })

        by_count: Dict[str, List[float]] = {}
        for run in runs:
            key = str(run["n_individuals"]) if run["n_individuals"] is not None else run["dir"]
            by_count.setdefault(key, []).append(run["mean_fps"])
        summary = {k: round(sum(v) / len(v), 3) for k, v in by_count.items()}

        manifest.extra["runs"] = runs
        manifest.extra["mean_fps_by_individuals"] = summary
        manifest.finish(total_frames)

        rows = [[r["dir"], r["n_individuals"], r["frames"], r["mean_time"], r["mean_fps"]] for r in runs]
        print(render_table(["Sequence", "Individuals", "Frames", "Time (s)", "FPS"], rows,
                           title=f"吞吐量 (repeat={repeat})", precision=2))
        return 0

    return _guarded(manifest, out_path, body, verbose)


# ---- project ----

def cmd_project(poses_path: PathLike, calib_path: PathLike, out_dir: PathLike, verbose: bool = False) -> int:
    """把三维姿态重投影到各视角，便于画图检查：out_dir/<view>.jsonl {frame, id, kp: [[u, v, valid] x 9]}"""
    out_dir = Path(out_dir)
    manifest = RunManifest("project", inputs={"poses": str(poses_path), "calib": str(calib_path)},
                           outputs={"out_dir": str(out_dir)})

    def body() -> int:
        cameras = load_calibration(calib_path)
        out_dir.mkdir(parents=True, exist_ok=True)
        frames = set()
        with ExitStack() as stack:
            writers = {cam.camera_id: stack.enter_context(AtomicLineWriter(out_dir / f"{cam.camera_id}.jsonl"))
                       for cam in cameras}
            for pose in read_poses(poses_path):
                frames.add(pose.frame)
                for cam in cameras:
                    uv, ok = _reproject(cam, pose.points, pose.valid)
                    writers[cam.camera_id].write({
                        "frame": pose.frame,
                        "id": pose.global_id,
                        "kp": [[round(float(u), 3), round(float(v), 3), int(k)] for (u, v), k in zip(uv, ok)],
                    })
        manifest.add_digests(collect_files(out_dir), root=out_dir)
        manifest.finish(len(frames))
        print(f"✅ 重投影完成: {len(frames)} 帧 -> {out_dir}")
        return 0

    return _guarded(manifest, out_dir / "manifest.json", body, verbose)


def _reproject(cam, points, valid) -> Tuple[Any, Any]:
    ok = np.asarray(valid, dtype=bool) & (camera_depths(cam, points) > 1e-6)
    uv = np.zeros((len(points), 2))
    if ok.any():
        uv[ok] = project_points(cam, points[ok])
        ok[ok] = in_image(cam, uv[ok])
    return uv, ok
