#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
日志配置

只在入口脚本调用一次；库模块只使用 logging.getLogger(__name__)。
"""

import logging
from typing import Optional

from utils.env_config import get_env_config

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(verbose: bool = False, log_file: Optional[str] = None) -> int:
    """
    配置根日志器。

    Args:
        verbose: 为 True 时强制 DEBUG
        log_file: 额外写入的日志文件路径

    Returns:
        生效的日志级别
    """
    level_name = "DEBUG" if verbose else get_env_config().get_log_level()
    level = getattr(logging, level_name, logging.INFO)

    handlers = [logging.StreamHandler()]
    if log_file:
        handlers.append(logging.FileHandler(log_file, encoding='utf-8'))

    logging.basicConfig(level=level, format=LOG_FORMAT, handlers=handlers, force=True)
    return level
