#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
二维检测记录与检测流读写
========================

检测流为 JSON-lines，每行一个个体：
{view, frame, bbox: [x, y, w, h], score, kp: [[u, v, conf, vis] x 9]}
同一视角内帧号不递减。
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, Optional, Union

import numpy as np

from geometry.schema import DEFAULT_SCHEMA, KeypointSchema
from utils.atomic_io import AtomicLineWriter, read_jsonl
from utils.errors import SchemaError

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class Detection2D:
    """
    单视角单帧中的一个个体。

    Attributes:
        view_id: 视角名称
        frame: 帧号
        bbox: (x, y, w, h) px，左上角为原点
        keypoints: (K, 4) 每行 (u, v, 置信度, 可见标志)
        score: 检测置信度
    """

    view_id: str
    frame: int
    bbox: np.ndarray
    keypoints: np.ndarray
    score: float = 1.0

    def __post_init__(self):
        self.bbox = np.asarray(self.bbox, dtype=np.float64).reshape(4)
        self.keypoints = np.asarray(self.keypoints, dtype=np.float64)
        self.frame = int(self.frame)
        self.score = float(self.score)

    def validate(self, schema: KeypointSchema = DEFAULT_SCHEMA) -> "Detection2D":
        """检查类型不变量，失败抛出 SchemaError"""
        if self.frame < 0:
            raise SchemaError(f"视角 {self.view_id}: 帧号为负 ({self.frame})")
        if not np.all(np.isfinite(self.bbox)) or self.bbox[2] <= 0 or self.bbox[3] <= 0:
            raise SchemaError(f"视角 {self.view_id} 帧 {self.frame}: 包围盒宽高必须为正 {self.bbox.tolist()}")
        if self.keypoints.shape != (len(schema), 4):
            raise SchemaError(
                f"视角 {self.view_id} 帧 {self.frame}: 关键点形状 {self.keypoints.shape}，"
                f"期望 ({len(schema)}, 4)")
        conf = self.keypoints[:, 2]
        if np.any(conf < 0) or np.any(conf > 1) or not (0.0 <= self.score <= 1.0):
            raise SchemaError(f"视角 {self.view_id} 帧 {self.frame}: 置信度必须在 [0, 1] 内")
        if not np.all(np.isfinite(self.keypoints[:, :2])):
            raise SchemaError(f"视角 {self.view_id} 帧 {self.frame}: 关键点坐标非有限")
        return self

    @property
    def xyxy(self) -> np.ndarray:
        x, y, w, h = self.bbox
        return np.array([x, y, x + w, y + h])

    def usable_keypoints(self, conf_threshold: float = 0.0) -> np.ndarray:
        """可用于三角化的关键点掩码：可见且置信度达到阈值"""
        return (self.keypoints[:, 3] > 0) & (self.keypoints[:, 2] >= conf_threshold)

    def to_record(self) -> Dict[str, Any]:
        return {
            "view": self.view_id,
            "frame": self.frame,
            "bbox": [round(float(v), 6) for v in self.bbox],
            "score": round(self.score, 6),
            "kp": [[round(float(u), 6), round(float(v), 6), round(float(c), 6), int(s)]
                   for u, v, c, s in self.keypoints],
        }

    @classmethod
    def from_record(cls, record: Dict[str, Any], schema: KeypointSchema = DEFAULT_SCHEMA) -> "Detection2D":
        try:
            det = cls(
                view_id=str(record["view"]),
                frame=int(record["frame"]),
                bbox=record["bbox"],
                keypoints=record["kp"],
                score=float(record.get("score", 1.0)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaError(f"检测记录格式错误: {e}") from e
        return det.validate(schema)


def read_detections(
    path: Union[str, Path],
    view_id: Optional[str] = None,
    schema: KeypointSchema = DEFAULT_SCHEMA,
) -> Iterator[Detection2D]:
    """
    流式读取检测文件。

    Args:
        path: JSON-lines 文件
        view_id: 期望的视角名称，None 表示不检查

    Raises:
        SchemaError: 记录格式错误、视角不一致或帧号倒退
    """
    last_frame = -1
    try:
        for lineno, record in read_jsonl(path):
            try:
                det = Detection2D.from_record(record, schema)
            except SchemaError as e:
                raise SchemaError(f"{path}:{lineno}: {e}") from e
            if view_id is not None and det.view_id != view_id:
                raise SchemaError(f"{path}:{lineno}: 视角 {det.view_id} 与期望 {view_id} 不一致")
            if det.frame < last_frame:
                raise SchemaError(f"{path}:{lineno}: 帧号倒退 ({det.frame} < {last_frame})")
            last_frame = det.frame
            yield det
    except ValueError as e:
        # json.JSONDecodeError 是 ValueError 的子类
        raise SchemaError(f"{path}: JSON 解析失败: {e}") from e


def write_detections(path: Union[str, Path], detections: Iterable[Detection2D]) -> int:
    """原子写入检测文件，返回写入行数"""
    with AtomicLineWriter(path) as writer:
        for det in detections:
            writer.write(det.to_record())
        return writer.lines_written
