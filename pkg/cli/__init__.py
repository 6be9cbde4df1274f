"""
命令行模块

run_muppet.py 的各个子命令实现与运行清单。
"""

from .manifest import RunManifest, RunStatus, manifest_path_for
from .commands import (
    cmd_synth, cmd_track, cmd_eval_pose, cmd_eval_mot, cmd_bench, cmd_project,
    resolve_pipeline_config, run_tracking,
)

__all__ = [
    "RunManifest",
    "RunStatus",
    "manifest_path_for",
    "cmd_synth",
    "cmd_track",
    "cmd_eval_pose",
    "cmd_eval_mot",
    "cmd_bench",
    "cmd_project",
    "resolve_pipeline_config",
    "run_tracking",
]
