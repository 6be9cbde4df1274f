#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
标定文件读写

格式：JSON 数组，每个元素
{id, K: 9 个数 (行优先), dist: [k1,k2,p1,p2], R: 9 个数 (行优先), t: [3 个数 mm], size: [w,h]}
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Sequence, Union

from geometry.camera import CameraModel
from utils.atomic_io import atomic_write_json
from utils.errors import CalibrationError

logger = logging.getLogger(__name__)


def load_calibration(path: Union[str, Path]) -> List[CameraModel]:
    """读取标定文件，失败时抛出 CalibrationError"""
    path = Path(path)
    if not path.exists():
        raise CalibrationError(f"标定文件不存在: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise CalibrationError(f"标定文件 {path} 解析失败 (行 {e.lineno}): {e.msg}") from e

    if not isinstance(data, list) or len(data) == 0:
        raise CalibrationError(f"标定文件 {path} 必须是非空数组")

    cameras = [CameraModel.from_dict(item) for item in data]
    ids = [cam.camera_id for cam in cameras]
    if len(set(ids)) != len(ids):
        raise CalibrationError(f"标定文件 {path} 中相机 id 重复: {ids}")

    logger.info(f"标定加载成功: {len(cameras)} 个相机 ({', '.join(ids)})")
    return cameras


def save_calibration(cameras: Sequence[CameraModel], path: Union[str, Path]) -> Path:
    """原子写入标定文件"""
    return atomic_write_json(path, [cam.to_dict() for cam in cameras])


def calibration_by_id(cameras: Sequence[CameraModel]) -> Dict[str, CameraModel]:
    """相机列表 -> {camera_id: 相机}，保持原顺序"""
    return {cam.camera_id: cam for cam in cameras}
