#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
环境变量缓存管理器
==================

从 .env / .env.local 读取运行参数并缓存，保证一次运行内取值一致。
识别的变量：
    MUPPET_LOG      日志级别 (DEBUG/INFO/WARNING/ERROR)
    MUPPET_THREADS  逐视角跟踪的默认线程数 (0 表示按视角数)
"""

import logging
import os
from typing import Optional

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class EnvironmentConfig:
    """环境变量缓存 - 单例"""

    _instance = None
    _initialized = False

    def __new__(cls):
        """单例模式确保全局唯一"""
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __init__(self):
        if self._initialized:
            return

        # 先加载通用配置，再加载本地配置（覆盖）
        load_dotenv('.env')
        load_dotenv('.env.local', override=True)

        self._cached_env = {
            'log_level': os.getenv('MUPPET_LOG', 'INFO').strip().upper(),
            'threads': os.getenv('MUPPET_THREADS', '0').strip(),
        }

        if self._cached_env['log_level'] not in _LOG_LEVELS:
            logger.warning(f"MUPPET_LOG 取值非法: {self._cached_env['log_level']}，改用 INFO")
            self._cached_env['log_level'] = 'INFO'

        self._initialized = True

    def get_log_level(self) -> str:
        """获取日志级别名称"""
        return self._cached_env['log_level']

    def get_threads(self) -> Optional[int]:
        """获取默认线程数；未设置或为 0 时返回 None"""
        try:
            threads = int(self._cached_env['threads'])
        except ValueError:
            logger.warning(f"MUPPET_THREADS 不是整数: {self._cached_env['threads']}")
            return None
        return threads if threads > 0 else None

    def refresh_cache(self):
        """刷新缓存（重新读取环境变量）"""
        self._initialized = False
        self.__init__()


def get_env_config() -> EnvironmentConfig:
    """获取全局环境配置"""
    return EnvironmentConfig()
