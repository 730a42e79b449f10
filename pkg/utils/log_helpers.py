"""
控制台日志 - 带时间戳和子系统标签
"""
import sys
from datetime import datetime

_quiet = False


def set_quiet(quiet: bool = True):
    """关闭/打开控制台输出（测试与 --quiet 使用）"""
    global _quiet
    _quiet = quiet


def log(tag: str, message: str, prefix: str = "ℹ"):
    """
    输出一行日志

    Args:
        tag: 子系统名称，如 "Trajectory"、"AT"
        message: 日志内容
        prefix: 级别符号 ℹ ✓ ✗ ⚠ ⚙
    """
    if _quiet:
        return
    timestamp = datetime.now().strftime("%Y-%m-%d %H:%M:%S")
    print(f"[{timestamp}] {prefix} [{tag}] {message}", file=sys.stderr)
