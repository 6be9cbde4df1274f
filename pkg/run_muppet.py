#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
多视角三维姿态跟踪 启动脚本
==========================

合成场景、跟踪、评估、基准测试与重投影导出
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

# 添加项目路径
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from cli.commands import cmd_bench, cmd_eval_mot, cmd_eval_pose, cmd_project, cmd_synth, cmd_track
from utils.log_config import setup_logging


def positive_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"不是整数: {value}")
    if number < 1:
        raise argparse.ArgumentTypeError(f"必须 >= 1: {value}")
    return number


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="多视角三维多目标姿态跟踪",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
使用示例:
  python run_muppet.py synth --config configs/default_scenario.json --out data/scene
  python run_muppet.py track data/scene/detections data/scene/calib.json --out data/poses.jsonl
  python run_muppet.py eval-mot --pred data/poses.jsonl --gt data/scene/gt_poses.jsonl --mode 3d
  python run_muppet.py eval-pose --pred data/poses.jsonl --gt data/scene/gt_poses.jsonl --mode 3d
  python run_muppet.py bench data/scene --repeat 3
  python run_muppet.py project data/poses.jsonl data/scene/calib.json --out data/reproj

退出码: 0 成功, 1 其他错误, 2 配置错误, 3 首帧为空, 4 标定/格式错误, 5 评估不匹配
        """
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="详细输出模式")
    parser.add_argument("--log-file", type=str, help="额外写入的日志文件")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="生成合成场景")
    p.add_argument("--config", "-c", type=str, help="场景配置 JSON (默认使用内置默认值)")
    p.add_argument("--out", "-o", type=str, required=True, help="输出目录")

    p = sub.add_parser("track", help="多视角检测 -> 三维轨迹")
    p.add_argument("detections", type=str, help="检测目录 (<view>.jsonl)")
    p.add_argument("calib", type=str, help="标定文件 JSON")
    p.add_argument("--out", "-o", type=str, required=True, help="三维轨迹输出 (JSON-lines)")
    p.add_argument("--config", "-c", type=str, help="流水线配置 JSON")
    p.add_argument("--threads", type=positive_int, help="每视角跟踪线程数 (默认: 视角数)")
    p.add_argument("--rematch-frame", type=positive_int, help="在指定帧重新进行跨视角匹配")
    p.add_argument("--tracks2d-dir", type=str, help="导出每个视角的二维轨迹")
    p.add_argument("--max-frames", type=positive_int, help="只处理前 N 帧")

    for name, help_text in (("eval-pose", "姿态精度评估"), ("eval-mot", "跟踪评估")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--pred", nargs="+", required=True, help="预测文件 (可多个序列)")
        p.add_argument("--gt", nargs="+", required=True, help="真值文件 (与 --pred 一一对应)")
        p.add_argument("--mode", choices=["2d", "3d"], default="3d", help="评估模式 (默认: 3d)")
        p.add_argument("--json-out", type=str, help="报告 JSON 输出路径")
        if name == "eval-pose":
            p.add_argument("--match-by", choices=["nearest", "id"], default="nearest",
                           help="预测与真值的配对方式 (默认: nearest)")

    p = sub.add_parser("bench", help="吞吐量基准")
    p.add_argument("dirs", nargs="+", help="场景或检测目录")
    p.add_argument("--calib", type=str, help="标定文件 (默认: <目录>/calib.json)")
    p.add_argument("--repeat", type=positive_int, default=3, help="重复次数 (默认: 3)")
    p.add_argument("--config", "-c", type=str, help="流水线配置 JSON")
    p.add_argument("--threads", type=positive_int, help="每视角跟踪线程数")
    p.add_argument("--out", "-o", type=str, help="基准清单输出路径")

    p = sub.add_parser("project", help="把三维姿态重投影到各视角")
    p.add_argument("poses", type=str, help="三维轨迹 JSON-lines")
    p.add_argument("calib", type=str, help="标定文件 JSON")
    p.add_argument("--out", "-o", type=str, required=True, help="输出目录")

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """主函数，返回退出码"""
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose, args.log_file)

    if args.command == "synth":
        return cmd_synth(args.config, args.out, verbose=args.verbose)
    if args.command == "track":
        return cmd_track(args.detections, args.calib, args.out, config_path=args.config, threads=args.threads,
                         rematch_frame=args.rematch_frame, tracks2d_dir=args.tracks2d_dir,
                         max_frames=args.max_frames, verbose=args.verbose)
    if args.command == "eval-pose":
        return cmd_eval_pose(args.pred, args.gt, mode=args.mode, match_by=args.match_by,
                             json_out=args.json_out, verbose=args.verbose)
    if args.command == "eval-mot":
        return cmd_eval_mot(args.pred, args.gt, mode=args.mode, json_out=args.json_out, verbose=args.verbose)
    if args.command == "bench":
        return cmd_bench(args.dirs, calib_path=args.calib, repeat=args.repeat, config_path=args.config,
                         threads=args.threads, out_path=args.out, verbose=args.verbose)
    if args.command == "project":
        return cmd_project(args.poses, args.calib, args.out, verbose=args.verbose)
    return 1


if __name__ == "__main__":
    sys.exit(main())
