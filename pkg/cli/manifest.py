#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
运行清单
========

每条命令写一个 JSON 清单：命令、配置快照、输入输出路径、版本、
各阶段耗时、帧数、fps 与输出文件摘要。失败时也会写出，status 为 failed。
"""

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

from utils.atomic_io import atomic_write_json, file_digest

logger = logging.getLogger(__name__)

VERSION = "0.3.0"


class RunStatus(Enum):
    """运行状态枚举"""
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


@dataclass
class RunManifest:
    command: str
    config: Dict[str, Any] = field(default_factory=dict)
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)
    version: str = VERSION
    status: RunStatus = RunStatus.RUNNING
    started_at: str = field(default_factory=lambda: datetime.now().isoformat(timespec="seconds"))
    timings: Dict[str, float] = field(default_factory=dict)
    frames: int = 0
    elapsed: float = 0.0
    fps: float = 0.0
    digests: Dict[str, str] = field(default_factory=dict)
    extra: Dict[str, Any] = field(default_factory=dict)
    error: Optional[str] = None

    def __post_init__(self):
        self._t0 = time.perf_counter()

    @contextmanager
    def stage(self, name: str):
        """累计某个阶段的耗时"""
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - t0

    def add_timings(self, timings: Dict[str, float]):
        for name, seconds in timings.items():
            self.timings[name] = self.timings.get(name, 0.0) + seconds

    def finish(self, frames: Optional[int] = None):
        """标记完成并计算 fps = 帧数 / 总耗时"""
        if frames is not None:
            self.frames = frames
        self.elapsed = time.perf_counter() - self._t0
        self.fps = self.frames / self.elapsed if self.elapsed > 0 else 0.0
        self.status = RunStatus.COMPLETED

    def fail(self, error: BaseException):
        self.elapsed = time.perf_counter() - self._t0
        self.status = RunStatus.FAILED
        self.error = f"{type(error).__name__}: {error}"

    def add_digests(self, paths: Iterable[Union[str, Path]], root: Optional[Union[str, Path]] = None):
        """输出文件 SHA-256；给定 root 时键为相对路径"""
        for path in paths:
            path = Path(path)
            if not path.is_file():
                continue
            key = path.relative_to(root).as_posix() if root is not None else str(path)
            self.digests[key] = file_digest(path)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "status": self.status.value,
            "version": self.version,
            "started_at": self.started_at,
            "config": self.config,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "timings": {k: round(v, 6) for k, v in sorted(self.timings.items())},
            "frames": self.frames,
            "elapsed": round(self.elapsed, 6),
            "fps": round(self.fps, 3),
            "digests": self.digests,
            "extra": self.extra,
            "error": self.error,
        }

    def write(self, path: Union[str, Path]) -> Path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        return atomic_write_json(path, self.to_dict())


def manifest_path_for(output: Union[str, Path]) -> Path:
    """<输出文件>.manifest.json，目录输出时为 <目录>/manifest.json"""
    output = Path(output)
    if output.is_dir() or not output.suffix:
        return output / "manifest.json"
    return output.with_name(output.name + ".manifest.json")


def collect_files(root: Union[str, Path]) -> List[Path]:
    root = Path(root)
    return sorted(p for p in root.rglob("*") if p.is_file() and p.name != "manifest.json")
