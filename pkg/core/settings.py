"""
设置加载 - config/app_settings.json 覆盖默认值
"""
import json
import os
from typing import Any, Dict, Optional

from utils.log_helpers import log

DEFAULT_SETTINGS_PATH = "config/app_settings.json"

DEFAULT_SETTINGS: Dict[str, Any] = {
    'max_exponent': 4,             # 2^n 序列最多算到 T_16
    'max_set_size': 1 << 20,       # 闭包/乘积的元素上限
    'time_cap': 120.0,             # 单次估计的秒数上限
    'stabilization_window': 3,
    'max_members': 5,              # 族扫描最多取多少个成员
    'family_size_bound': 10000,    # 族成员（有限子群）的阶上限
    'growth_threshold': 0.4,       # 恒等映射指数增长判据（nats）
    'sample_count': 10000,         # 随机认证的采样数
    'seed': 0,
    'workers': 3,
    'coset_materialize_limit': 4096,
    'at_tolerance': 1e-9,
    'record_runs': True,
    'db_path': "entropy_runs.db",
}


def load_settings(path: Optional[str] = None) -> Dict[str, Any]:
    """
    加载设置

    Args:
        path: 设置文件路径，默认 config/app_settings.json

    Returns:
        默认值与文件内容合并后的字典（文件缺失或损坏时返回默认值）
    """
    settings = dict(DEFAULT_SETTINGS)
    path = path or DEFAULT_SETTINGS_PATH
    if not os.path.exists(path):
        return settings
    try:
        with open(path, 'r', encoding='utf-8') as f:
            loaded = json.load(f)
        unknown = sorted(set(loaded) - set(DEFAULT_SETTINGS))
        if unknown:
            log("Settings", f"忽略未知设置项: {', '.join(unknown)}", "⚠")
        for key in DEFAULT_SETTINGS:
            if key in loaded:
                settings[key] = loaded[key]
    except (OSError, ValueError) as e:
        log("Settings", f"加载设置失败，使用默认值: {e}", "⚠")
    return settings


def save_settings(settings: Dict[str, Any], path: Optional[str] = None):
    """保存设置（只写入已知键）"""
    path = path or DEFAULT_SETTINGS_PATH
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    data = {k: settings.get(k, v) for k, v in DEFAULT_SETTINGS.items()}
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(data, f, ensure_ascii=False, indent=2)
