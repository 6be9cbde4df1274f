#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
三维姿态记录与姿态流读写
========================

每行一个 (帧, 全局 ID):
{frame, id, views: [...], kp3d: [[x, y, z, valid] x 9], smoothed}
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, Tuple, Union

import numpy as np

from geometry.schema import DEFAULT_SCHEMA, KeypointSchema
from utils.atomic_io import AtomicLineWriter, read_jsonl
from utils.errors import SchemaError

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class Pose3D:
    """
    一个个体在一帧中的三维姿态。

    Attributes:
        frame: 帧号
        global_id: 全局身份
        points: (K, 3) mm
        valid: (K,) 有效掩码
        contributing_views: 参与三角化的视角
        smoothed: 是否经过时间平滑
    """

    frame: int
    global_id: int
    points: np.ndarray
    valid: np.ndarray
    contributing_views: Tuple[str, ...] = field(default_factory=tuple)
    smoothed: bool = False

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        self.valid = np.asarray(self.valid, dtype=bool).reshape(-1)
        self.contributing_views = tuple(sorted(self.contributing_views))
        self.frame = int(self.frame)
        self.global_id = int(self.global_id)

    @classmethod
    def invalid(cls, frame: int, global_id: int, n_keypoints: int = len(DEFAULT_SCHEMA)) -> "Pose3D":
        return cls(frame, global_id, np.zeros((n_keypoints, 3)), np.zeros(n_keypoints, dtype=bool))

    @property
    def any_valid(self) -> bool:
        return bool(np.any(self.valid))

    def to_record(self) -> Dict[str, Any]:
        kp = [[round(float(x), 6), round(float(y), 6), round(float(z), 6), int(v)]
              for (x, y, z), v in zip(self.points, self.valid)]
        return {
            "frame": self.frame,
            "id": self.global_id,
            "views": list(self.contributing_views),
            "kp3d": kp,
            "smoothed": bool(self.smoothed),
        }

    @classmethod
    def from_record(cls, record: Dict[str, Any], schema: KeypointSchema = DEFAULT_SCHEMA) -> "Pose3D":
        try:
            kp = np.asarray(record["kp3d"], dtype=np.float64)
            if kp.shape != (len(schema), 4):
                raise SchemaError(f"kp3d 形状 {kp.shape}，期望 ({len(schema)}, 4)")
            return cls(
                frame=int(record["frame"]),
                global_id=int(record["id"]),
                points=kp[:, :3],
                valid=kp[:, 3] > 0,
                contributing_views=tuple(record.get("views", ())),
                smoothed=bool(record.get("smoothed", False)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaError(f"姿态记录格式错误: {e}") from e


def read_poses(path: Union[str, Path], schema: KeypointSchema = DEFAULT_SCHEMA) -> Iterator[Pose3D]:
    """流式读取姿态文件"""
    try:
        for lineno, record in read_jsonl(path):
            try:
                yield Pose3D.from_record(record, schema)
            except SchemaError as e:
                raise SchemaError(f"{path}:{lineno}: {e}") from e
    except ValueError as e:
        raise SchemaError(f"{path}: JSON 解析失败: {e}") from e


def write_poses(path: Union[str, Path], poses: Iterable[Pose3D]) -> int:
    """原子写入姿态文件，返回行数"""
    with AtomicLineWriter(path) as writer:
        for pose in poses:
            writer.write(pose.to_record())
        return writer.lines_written
