#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
配置加载

JSON 配置文件 -> pydantic 模型；所有失败统一转换为 ConfigError，
消息里带上出错的字段路径或行列号。
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Type, TypeVar, Union

from pydantic import BaseModel, ValidationError

from utils.errors import ConfigError

logger = logging.getLogger(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)


def format_validation_error(err: ValidationError) -> str:
    """把 pydantic 校验错误压缩成 'field.path: 原因' 列表"""
    parts = []
    for item in err.errors():
        loc = ".".join(str(x) for x in item.get("loc", ())) or "<root>"
        parts.append(f"{loc}: {item.get('msg', '')}")
    return "; ".join(parts)


def validate_config(model_cls: Type[ModelT], data: Optional[Dict[str, Any]]) -> ModelT:
    """用字典构建配置模型"""
    try:
        return model_cls.model_validate(data or {})
    except ValidationError as e:
        raise ConfigError(f"配置字段非法 - {format_validation_error(e)}") from e


def load_config(model_cls: Type[ModelT], path: Optional[Union[str, Path]]) -> ModelT:
    """
    从 JSON 文件加载配置；path 为 None 时返回默认配置。

    Args:
        model_cls: pydantic 配置类
        path: JSON 文件路径

    Returns:
        配置实例
    """
    if path is None:
        return model_cls()

    path = Path(path)
    if not path.exists():
        raise ConfigError(f"配置文件不存在: {path}")

    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"配置文件 {path} 解析失败 (行 {e.lineno}, 列 {e.colno}): {e.msg}") from e

    if not isinstance(data, dict):
        raise ConfigError(f"配置文件 {path} 顶层必须是对象")

    config = validate_config(model_cls, data)
    logger.info(f"配置加载成功: {path}")
    return config
