#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
端到端在线流水线
================

首帧：各视角 SORT -> 跨视角匹配 -> 融合 -> 平滑
后续帧：各视角 SORT -> 融合 -> 平滑
每帧在读取下一帧之前输出，第 k 帧的结果只依赖前 k 帧。
"""

import logging
import time
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field

from crossview.matching import GlobalIdentityMap, MatchingConfig, build_identity_map, carry_over_ids
from fusion.fuse import FusionConfig, fuse_frame
from fusion.pose import Pose3D
from fusion.smoother import Smoother3D, SmootherConfig, smooth_step
from geometry.camera import CameraModel
from tracking.detection import Detection2D
from tracking.sort_tracker import SortTracker, TrackerConfig
from utils.errors import EmptyFirstFrame

logger = logging.getLogger(__name__)

FrameDetections = Mapping[str, Sequence[Detection2D]]
TrackOutputs = Dict[str, List[Tuple[int, Detection2D]]]


class PipelineConfig(BaseModel):
    """流水线配置，各阶段参数嵌套其中"""

    model_config = ConfigDict(extra="forbid")

    tracker: TrackerConfig = Field(default_factory=TrackerConfig)
    matching: MatchingConfig = Field(default_factory=MatchingConfig)
    fusion: FusionConfig = Field(default_factory=FusionConfig)
    smoother: SmootherConfig = Field(default_factory=SmootherConfig)
    threads: Optional[int] = Field(None, ge=1, description="各视角跟踪的线程数，默认等于视角数")
    rematch_frame: Optional[int] = Field(None, ge=1, description="在该帧重新做跨视角匹配")


def align_streams(
    streams: Mapping[str, Iterable[Detection2D]],
    n_frames: Optional[int] = None,
) -> Iterator[Tuple[int, Dict[str, List[Detection2D]]]]:
    """
    按帧号对齐各视角的检测流。

    从最小的首帧号开始逐帧输出 (帧号, {视角: [检测]})，没有检测的帧也会输出。
    已结束的视角按空帧处理，只要还有视角有数据就继续；给定 n_frames 时一直输出到
    第 n_frames - 1 帧，之后的检测被丢弃。

    Args:
        n_frames: 序列总帧数（例如场景清单中的 n_frames）；None 时以最长的流为准
    """
    iters = {view: iter(stream) for view, stream in streams.items()}
    pending: Dict[str, Optional[Detection2D]] = {view: next(it, None) for view, it in iters.items()}

    starts = [d.frame for d in pending.values() if d is not None]
    if not starts:
        return
    frame = min(starts)
    warned = set()

    while True:
        live = [v for v, d in pending.items() if d is not None]
        if n_frames is None and not live:
            return
        if n_frames is not None and frame >= n_frames:
            if live:
                logger.warning(f"视角 {sorted(live)} 在第 {n_frames} 帧之后仍有检测，已丢弃")
            return
        ended = sorted(v for v, d in pending.items() if d is None and v not in warned)
        if ended and live:
            logger.warning(f"视角 {ended} 的检测在帧 {frame} 之前结束，之后按空帧处理")
            warned.update(ended)

        batch: Dict[str, List[Detection2D]] = {view: [] for view in iters}
        for view, it in iters.items():
            while pending[view] is not None and pending[view].frame == frame:
                batch[view].append(pending[view])
                pending[view] = next(it, None)
            if pending[view] is not None and pending[view].frame < frame:
                raise ValueError(f"视角 {view} 帧号倒退 ({pending[view].frame} < {frame})")
        yield frame, batch
        frame += 1


class Pipeline:
    """
    在线多视角三维跟踪。

    Args:
        calib: {视角: 相机}
        config: 流水线配置
        track_sink: 可选回调 (帧号, {视角: [(局部 ID, 检测)]})，用于导出二维轨迹
    """

    def __init__(
        self,
        calib: Mapping[str, CameraModel],
        config: Optional[PipelineConfig] = None,
        track_sink: Optional[Callable[[int, TrackOutputs], None]] = None,
    ):
        self.calib = dict(calib)
        self.views = sorted(self.calib)
        self.config = config or PipelineConfig()
        self.track_sink = track_sink
        self.trackers = {view: SortTracker(view, self.config.tracker) for view in self.views}
        self.smoother = Smoother3D(self.config.smoother)
        self.id_map: Optional[GlobalIdentityMap] = None
        self.frames_processed = 0
        self.timings: Dict[str, float] = defaultdict(float)
        self._ignored = set()

        threads = self.config.threads or len(self.views)
        self._executor = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
        logger.debug(f"流水线初始化: 视角 {self.views}, 线程 {threads}")

    def reset(self):
        for tracker in self.trackers.values():
            tracker.reset()
        self.smoother.reset()
        self.id_map = None
        self.frames_processed = 0
        self.timings.clear()
        self._ignored.clear()

    def close(self):
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()
        return False

    def _track(self, detections: FrameDetections) -> TrackOutputs:
        def run(view):
            return self.trackers[view].step(list(detections.get(view, ())))

        if self._executor is None:
            results = [run(view) for view in self.views]
        else:
            results = list(self._executor.map(run, self.views))
        return dict(zip(self.views, results))

    def _associations(self, frame: int, outputs: TrackOutputs) -> Dict[str, Dict[int, Detection2D]]:
        assoc: Dict[str, Dict[int, Detection2D]] = {}
        for view, pairs in outputs.items():
            assoc[view] = {}
            for local_id, det in pairs:
                if self.id_map.global_of(view, local_id) is not None:
                    assoc[view][local_id] = det
                elif (view, local_id) not in self._ignored:
                    self._ignored.add((view, local_id))
                    logger.warning(f"视角 {view} 的新轨迹 {local_id} (帧 {frame}) 不属于任何全局身份，不参与融合")
        return assoc

    def process_frame(self, frame: int, detections: FrameDetections) -> List[Pose3D]:
        """处理一帧，返回按全局 ID 排序的姿态列表"""
        t0 = time.perf_counter()
        outputs = self._track(detections)
        t1 = time.perf_counter()
        self.timings["tracking"] += t1 - t0
        if self.track_sink is not None:
            self.track_sink(frame, outputs)

        if self.id_map is None:
            if not any(outputs.values()):
                raise EmptyFirstFrame(f"首帧 {frame} 所有视角都没有达到 score_threshold 的检测")
            self.id_map = build_identity_map(outputs, self.calib, self.config.matching)
            logger.info(f"帧 {frame}: 建立 {self.id_map.n_globals} 个全局身份")
        elif self.config.rematch_frame is not None and frame == self.config.rematch_frame:
            fresh = build_identity_map(outputs, self.calib, self.config.matching)
            self.id_map = carry_over_ids(fresh, self.id_map)
            self._ignored.clear()
            logger.info(f"帧 {frame}: 重新匹配，共 {self.id_map.n_globals} 个全局身份")
        t2 = time.perf_counter()
        self.timings["matching"] += t2 - t1

        poses = fuse_frame(self._associations(frame, outputs), self.id_map, self.calib,
                           self.config.fusion, frame)
        t3 = time.perf_counter()
        self.timings["fusion"] += t3 - t2

        poses = smooth_step(self.smoother, poses)
        self.timings["smoothing"] += time.perf_counter() - t3
        self.frames_processed += 1
        return poses

    def run(self, frames: Iterable[Tuple[int, FrameDetections]]) -> Iterator[List[Pose3D]]:
        for frame, detections in frames:
            yield self.process_frame(frame, detections)


def run_pipeline(
    detection_streams: Mapping[str, Iterable[Detection2D]],
    calib: Mapping[str, CameraModel],
    config: Optional[PipelineConfig] = None,
    n_frames: Optional[int] = None,
) -> Iterator[List[Pose3D]]:
    """
    对齐各视角检测流并逐帧输出三维姿态。

    Args:
        n_frames: 见 align_streams

    Raises:
        EmptyFirstFrame: 首帧没有任何检测
    """
    with Pipeline(calib, config) as pipeline:
        yield from pipeline.run(align_streams(detection_streams, n_frames))
