#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
合成场景配置
============
"""

from typing import List, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class DropoutWindow(BaseModel):
    """在 [start, end] 帧内强制某视角漏检某个体"""

    model_config = ConfigDict(extra="forbid")

    view: str
    individual: int = Field(..., ge=1)
    start: int = Field(..., ge=0)
    end: int = Field(..., ge=0)

    @model_validator(mode="after")
    def _check_range(self):
        if self.end < self.start:
            raise ValueError("end 不能小于 start")
        return self

    def covers(self, view: str, individual: int, frame: int) -> bool:
        return view == self.view and individual == self.individual and self.start <= frame <= self.end


class ScenarioConfig(BaseModel):
    """合成多视角场景的全部参数"""

    model_config = ConfigDict(extra="forbid")

    n_individuals: int = Field(10, ge=1, le=10)
    n_frames: int = Field(500, ge=1)
    arena_size_mm: Tuple[float, float] = (2000.0, 2000.0)
    speed_min_mm: float = Field(0.0, ge=0.0, description="每帧最小位移 (mm)")
    speed_max_mm: float = Field(8.0, ge=0.0, description="每帧最大位移 (mm)")
    heading_persistence: float = Field(0.9, ge=0.0, le=1.0)
    articulation_mm: float = Field(3.0, ge=0.0, description="关键点抖动的稳态标准差")
    body_scale: float = Field(1.0, gt=0.0)
    seed: int = 0

    noise_px: float = Field(0.0, ge=0.0)
    miss_prob: float = Field(0.0, ge=0.0, le=1.0)
    clutter_rate: float = Field(0.0, ge=0.0, description="每视角每帧杂波检测的期望个数")
    force_dropout: List[DropoutWindow] = Field(default_factory=list)

    n_cameras: int = Field(4, ge=2)
    image_size: Tuple[int, int] = (3840, 2160)
    camera_height_mm: float = Field(1800.0, gt=0.0)
    camera_margin_mm: float = Field(800.0, ge=0.0)
    distortion: Tuple[float, float, float, float] = (-0.02, 0.005, 0.0, 0.0)

    @field_validator("arena_size_mm")
    @classmethod
    def _positive_arena(cls, v):
        if v[0] <= 0 or v[1] <= 0:
            raise ValueError("场地尺寸必须为正")
        return v

    @field_validator("image_size")
    @classmethod
    def _positive_image(cls, v):
        if v[0] <= 0 or v[1] <= 0:
            raise ValueError("图像尺寸必须为正")
        return v

    @model_validator(mode="after")
    def _check_speed(self):
        if self.speed_max_mm < self.speed_min_mm:
            raise ValueError("speed_max_mm 不能小于 speed_min_mm")
        return self

    def camera_ids(self) -> List[str]:
        return [f"cam{i}" for i in range(self.n_cameras)]
