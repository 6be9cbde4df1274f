#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
原子文件写入与 JSON-lines 读写
==============================

所有输出先写入同目录下的临时文件，完成后 os.replace 到目标路径，
中断的运行不会留下半截文件。
"""

import hashlib
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterator, Tuple, Union

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _temp_in_dir(path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=str(path.parent))
    return fd, Path(tmp)


def atomic_write_text(path: PathLike, text: str) -> Path:
    """原子写入文本文件"""
    path = Path(path)
    fd, tmp = _temp_in_dir(path)
    try:
        with os.fdopen(fd, 'w', encoding='utf-8') as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise
    return path


def atomic_write_json(path: PathLike, obj: Any, indent: int = 2) -> Path:
    """原子写入 JSON 文件"""
    return atomic_write_text(path, json.dumps(obj, indent=indent, ensure_ascii=False) + "\n")


class AtomicLineWriter:
    """
    JSON-lines 原子写入器。

    逐行写入临时文件，close() 时重命名为目标文件；
    在 with 块内发生异常时删除临时文件，目标文件保持不变。
    """

    def __init__(self, path: PathLike):
        self.path = Path(path)
        fd, self._tmp = _temp_in_dir(self.path)
        self._file = os.fdopen(fd, 'w', encoding='utf-8')
        self.lines_written = 0

    def write(self, record: Dict[str, Any]):
        self._file.write(json.dumps(record, separators=(',', ':')) + "\n")
        self.lines_written += 1

    def flush(self):
        self._file.flush()

    def close(self):
        if self._file.closed:
            return
        self._file.close()
        os.replace(self._tmp, self.path)

    def abort(self):
        if not self._file.closed:
            self._file.close()
        self._tmp.unlink(missing_ok=True)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if exc_type is None:
            self.close()
        else:
            self.abort()
        return False


def read_jsonl(path: PathLike) -> Iterator[Tuple[int, Dict[str, Any]]]:
    """
    逐行读取 JSON-lines 文件，跳过空行。

    Yields:
        (行号, 解析后的对象)
    """
    with open(path, 'r', encoding='utf-8') as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            yield lineno, json.loads(line)


def file_digest(path: PathLike) -> str:
    """文件 SHA-256 摘要"""
    h = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 20), b''):
            h.update(chunk)
    return h.hexdigest()
