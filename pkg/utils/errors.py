#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
异常体系
========

所有模块共用的异常类型。每个异常携带 exit_code，
命令行入口据此映射到固定的退出码：
2 配置错误，3 首帧为空，4 标定/格式不匹配，5 评估数据不匹配，1 其他。
"""


class MuppetError(Exception):
    """项目异常基类"""

    exit_code = 1


# ---- 几何 ----

class GeometryError(MuppetError):
    """几何计算异常基类"""


class NonPositiveDepth(GeometryError):
    """点位于相机后方或光心平面上"""


class NoConvergence(GeometryError):
    """迭代求解未收敛"""


class DegenerateGeometry(GeometryError):
    """三角化退化（射线近似平行或共光心）"""


class InsufficientViews(GeometryError):
    """有效视角数不足 2"""


# ---- 跨视角匹配 ----

class NoSharedKeypoints(MuppetError):
    """两个姿态没有共同的有效关键点"""


# ---- 融合 ----

class EmptyFirstFrame(MuppetError):
    """首帧所有视角都没有检测"""

    exit_code = 3


# ---- 评估 ----

class EmptyMatchSet(MuppetError):
    """预测与真值之间没有任何可比较的关键点对"""

    exit_code = 5


class DegenerateThreshold(MuppetError):
    """PCK 阈值为 0（包围盒尺寸为 0 或关键点重合）"""

    exit_code = 5


class EvalMismatch(MuppetError):
    """预测与真值没有重叠帧"""

    exit_code = 5


# ---- 输入输出 ----

class ConfigError(MuppetError):
    """配置文件无法解析或字段非法"""

    exit_code = 2


class CalibrationError(MuppetError):
    """标定文件缺失或内容非法"""

    exit_code = 4


class SchemaError(MuppetError):
    """数据文件与关键点模式或视角集合不一致"""

    exit_code = 4
