#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
快速测试：小场景的合成 -> 跟踪 -> 评估
"""

import sys
import tempfile
from pathlib import Path

project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from cli.commands import cmd_eval_mot, cmd_synth, cmd_track
from utils.atomic_io import atomic_write_json
from utils.log_config import setup_logging


def quick_test() -> bool:
    """快速测试"""
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        config = tmp / "scenario.json"
        atomic_write_json(config, {"n_individuals": 3, "n_frames": 60, "seed": 1})

        print("🚀 生成合成场景...")
        if cmd_synth(config, tmp / "scene") != 0:
            return False

        print("🚀 运行跟踪...")
        poses = tmp / "poses.jsonl"
        if cmd_track(tmp / "scene" / "detections", tmp / "scene" / "calib.json", poses) != 0:
            return False

        print("📊 评估...")
        return cmd_eval_mot([poses], [tmp / "scene" / "gt_poses.jsonl"], mode="3d") == 0


if __name__ == "__main__":
    setup_logging()
    success = quick_test()
    print(f"🎯 测试结果: {'成功' if success else '失败'}")
    sys.exit(0 if success else 1)
