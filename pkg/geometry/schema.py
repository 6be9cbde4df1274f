#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
关键点模式

默认 9 个关键点，顺序固定。
"""

from dataclasses import dataclass
from typing import Tuple

DEFAULT_KEYPOINT_NAMES: Tuple[str, ...] = (
    "beak",
    "nose",
    "left_eye",
    "right_eye",
    "left_shoulder",
    "right_shoulder",
    "top_keel",
    "bottom_keel",
    "tail",
)

BOTTOM_KEEL = "bottom_keel"


@dataclass(frozen=True)
class KeypointSchema:
    """有序关键点名称列表"""

    names: Tuple[str, ...] = DEFAULT_KEYPOINT_NAMES

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        if len(self.names) == 0:
            raise ValueError("关键点模式不能为空")
        if len(set(self.names)) != len(self.names):
            raise ValueError(f"关键点名称重复: {self.names}")

    def __len__(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        """关键点名称 -> 下标"""
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"未知关键点: {name}") from None


DEFAULT_SCHEMA = KeypointSchema()
