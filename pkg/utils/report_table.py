#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
终端表格渲染器
==============

把评估报告渲染成按列对齐的纯文本表格；输出到终端时可用 colorama 着色，
写入文件时始终是纯文本。
"""

import sys
from typing import Any, List, Optional, Sequence

from colorama import Fore, Style, init

# 初始化colorama
init(autoreset=True)


class TableRenderer:
    """对齐文本表格渲染器"""

    def __init__(self, color: bool = False):
        self.color = color
        self.colors = {
            'header': Fore.CYAN + Style.BRIGHT,
            'title': Fore.BLUE + Style.BRIGHT,
            'label': Fore.WHITE + Style.BRIGHT,
            'reset': Style.RESET_ALL,
        }

    def _paint(self, text: str, key: str) -> str:
        if not self.color:
            return text
        return f"{self.colors[key]}{text}{self.colors['reset']}"

    @staticmethod
    def format_cell(value: Any, precision: int = 3) -> str:
        """格式化单元格：整数原样，浮点保留 precision 位"""
        if value is None:
            return "-"
        if isinstance(value, bool):
            return "yes" if value else "no"
        if isinstance(value, int):
            return str(value)
        if isinstance(value, float):
            return f"{value:.{precision}f}"
        return str(value)

    def render(
        self,
        headers: Sequence[str],
        rows: Sequence[Sequence[Any]],
        title: Optional[str] = None,
        precision: int = 3,
    ) -> str:
        """
        渲染表格。

        Args:
            headers: 列标题
            rows: 每行的单元格值，首列通常是行标签
            title: 表格标题
            precision: 浮点位数

        Returns:
            渲染后的多行字符串
        """
        cells = [[self.format_cell(v, precision) for v in row] for row in rows]
        widths = [len(h) for h in headers]
        for row in cells:
            for i, cell in enumerate(row):
                widths[i] = max(widths[i], len(cell))

        def line(values: List[str]) -> str:
            # 首列左对齐，数值列右对齐
            out = [values[0].ljust(widths[0])]
            out += [v.rjust(w) for v, w in zip(values[1:], widths[1:])]
            return " | ".join(out)

        lines = []
        if title:
            lines.append(self._paint(title, 'title'))
        lines.append(self._paint(line(list(headers)), 'header'))
        lines.append("-+-".join("-" * w for w in widths))
        for row in cells:
            lines.append(line(row))
        return "\n".join(lines)


def render_table(headers: Sequence[str], rows: Sequence[Sequence[Any]], title: Optional[str] = None,
                 precision: int = 3, color: Optional[bool] = None) -> str:
    """便捷函数：渲染表格；color 为 None 时按 stdout 是否为终端决定"""
    if color is None:
        color = sys.stdout.isatty()
    return TableRenderer(color=color).render(headers, rows, title=title, precision=precision)
