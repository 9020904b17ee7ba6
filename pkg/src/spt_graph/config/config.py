import copy
import os
import threading
from typing import Any, Dict, Optional

import yaml
from pydantic import ValidationError

from spt_graph.core.base_framework import RunConfig
from spt_graph.core.errors import ConfigError
from spt_graph.utils import log
from spt_graph.utils.path_manager import PathManager


# 自定义 Dumper，仅调整数组子元素缩进
class IndentedDumper(yaml.SafeDumper):
    def increase_indent(self, flow=False, indentless=False):
        # 强制数组子元素（-）缩进 2 个空格
        return super().increase_indent(flow, False)


# 命令行参数名 -> 配置路径
FLAG_PATHS = {
    "dataset": ("dataset", "path"),
    "label_col": ("dataset", "label_column"),
    "positive_label": ("dataset", "positive_label"),
    "scale": ("dataset", "scale"),
    "gamma": ("params", "gamma"),
    "boundary_alpha": ("params", "boundary_alpha"),
    "beta_alpha": ("params", "beta_alpha"),
    "best_spt": ("params", "best_spt"),
    "k_neighbours": ("params", "k_neighbours"),
    "k1": ("params", "k1"),
    "s_fraction": ("params", "s_fraction"),
    "seed": ("params", "seed"),
    "enumeration_cap": ("params", "enumeration_cap"),
    "objective": ("params", "objective"),
    "paper_literal_tiebreak": ("params", "paper_literal_tiebreak"),
    "folds": ("run", "folds"),
    "ratios": ("run", "ratios"),
    "sweep_repeats": ("run", "sweep_repeats"),
    "out": ("run", "out"),
    "jobs": ("run", "jobs"),
    "model": ("run", "model"),
    "input": ("run", "input"),
    "classifier": ("run", "classifier"),
    "knn_k": ("run", "knn_k"),
}


class Config:
    """
    配置管理类

    以默认配置为基准，合并配置文件中的值，再由命令行参数覆盖；
    最终经 pydantic 校验生成 RunConfig
    """

    _instance = None
    _lock = threading.RLock()  # 可重入锁

    def __init__(self):
        if hasattr(self, "_initialized"):
            return
        self._initialized = True
        self.config: Dict[str, Any] = {}
        self.error_message: Optional[str] = None
        self.config_path = PathManager.get_config_path()

        # 默认配置
        self.default_config = {
            "dataset": {
                "path": None,
                "label_column": -1,
                "positive_label": None,
                "scale": False,
            },
            "params": {
                "gamma": 3,
                "boundary_alpha": 0.5,
                "beta_alpha": 0.5,
                "best_spt": 3,
                "k_neighbours": 3,
                "k1": 2,
                "s_fraction": 0.2,
                "seed": 0,
                "enumeration_cap": 6,
                "objective": "closest",
                "paper_literal_tiebreak": False,
            },
            "run": {
                "folds": 5,
                "ratios": [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
                "sweep_repeats": 5,
                "out": "output",
                "jobs": 1,
                "model": None,
                "input": None,
                "classifier": "spt_cd",
                "knn_k": 5,
            },
            "grid": {
                "gamma": [2, 3, 4],
                "boundary_alpha": [0.5],
                "beta_alpha": [0.25, 0.5, 0.75],
                "best_spt": [1, 3, 5],
                "k_neighbours": [3],
                "k1": [1, 2],
                "s_fraction": [0.2],
            },
        }
        self.config = copy.deepcopy(self.default_config)

    @classmethod
    def get_instance(cls):
        with cls._lock:
            if cls._instance is None:
                cls._instance = cls()
            return cls._instance

    def reset(self):
        """恢复为默认配置"""
        with self._lock:
            self.config = copy.deepcopy(self.default_config)
            self.error_message = None

    def load_config(self, path=None) -> bool:
        """
        加载 YAML 或 JSON 配置文件（JSON 是 YAML 的子集，统一由 YAML 解析）

        未知键直接抛出 ConfigError；文件读取或解析失败返回 False 并记录 error_message
        """
        with self._lock:
            path = path or self.config_path
            if not os.path.exists(path):
                self.error_message = f"配置文件不存在: {path}"
                log.print_log(self.error_message, "error")
                return False

            try:
                with open(path, "r", encoding="utf-8") as f:
                    user_config = yaml.safe_load(f)
            except (OSError, yaml.YAMLError) as e:
                self.error_message = f"加载 {path} 失败: {e}"
                log.print_log(self.error_message, "error")
                return False

            if user_config is None:
                user_config = {}
            if not isinstance(user_config, dict):
                raise ConfigError(f"{path}: top level must be a mapping")

            self._check_unknown_keys(user_config, self.default_config)
            self.config = self.merge_with_user_config(user_config)
            self.config_path = path
            return True

    def _check_unknown_keys(self, user_dict: dict, default_dict: dict, path: str = ""):
        for key, value in user_dict.items():
            current_path = f"{path}.{key}" if path else str(key)
            if key not in default_dict:
                raise ConfigError(f"unknown configuration key '{current_path}'")
            if isinstance(default_dict[key], dict):
                if not isinstance(value, dict):
                    raise ConfigError(f"'{current_path}' must be a mapping")
                self._check_unknown_keys(value, default_dict[key], current_path)

    def merge_with_user_config(self, user_config: dict) -> dict:
        """以默认配置为基础，递归合并用户配置"""
        merged_config = copy.deepcopy(self.default_config)
        if not user_config:
            return merged_config

        def merge_dict(default_dict: dict, user_dict: dict):
            for key, user_value in user_dict.items():
                if key not in default_dict:
                    continue
                default_value = default_dict[key]
                if isinstance(default_value, dict) and isinstance(user_value, dict):
                    merge_dict(default_value, user_value)
                else:
                    default_dict[key] = user_value

        merge_dict(merged_config, user_config)
        return merged_config

    def apply_overrides(self, flags: Dict[str, Any]):
        """命令行参数覆盖文件中的值，值为 None 的参数忽略"""
        with self._lock:
            for name, value in flags.items():
                if value is None or name not in FLAG_PATHS:
                    continue
                section, key = FLAG_PATHS[name]
                self.config[section][key] = value

    def build_run_config(self) -> RunConfig:
        """校验当前配置，任何一项不合法都抛出 ConfigError"""
        with self._lock:
            try:
                return RunConfig.model_validate(self.config)
            except ValidationError as e:
                messages = "; ".join(
                    f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
                )
                raise ConfigError(messages) from e

    def get_config(self) -> Dict[str, Any]:
        with self._lock:
            return copy.deepcopy(self.config)

    def save_config(self, path) -> bool:
        """保存当前生效的配置到 YAML 文件"""
        with self._lock:
            try:
                with open(path, "w", encoding="utf-8") as f:
                    yaml.dump(
                        self.config,
                        f,
                        Dumper=IndentedDumper,
                        allow_unicode=True,
                        sort_keys=False,
                        default_flow_style=False,
                        indent=2,
                    )
                return True
            except OSError as e:
                self.error_message = f"保存 {path} 失败: {e}"
                log.print_log(self.error_message, "error")
                return False
