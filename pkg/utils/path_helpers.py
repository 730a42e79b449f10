"""
输出路径 - JSON/CSV 报告写入前的准备
"""
import os

_LONG_PREFIX = '\\\\?\\'


def get_safe_path(path: str) -> str:
    """
    Windows 下给绝对路径加 \\\\?\\ 前缀（报告目录可能很深）；其他系统原样返回
    """
    if os.name != 'nt' or not path or path.startswith(_LONG_PREFIX):
        return path
    full = os.path.abspath(path)
    if full.startswith('\\\\'):
        # \\server\share -> \\?\UNC\server\share
        return _LONG_PREFIX + 'UNC\\' + full[2:]
    return _LONG_PREFIX + full


def prepare_output_path(path: str) -> str:
    """
    准备报告输出路径：创建父目录并返回可写路径

    Args:
        path: 用户指定的 JSON/CSV 输出文件

    Returns:
        可直接 open() 的路径
    """
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(get_safe_path(parent), exist_ok=True)
    return get_safe_path(path)
