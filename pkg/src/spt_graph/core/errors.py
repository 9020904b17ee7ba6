"""
统一异常定义
所有异常消息以 [模块名] 开头，便于 CLI 定位出错环节
"""


class SptGraphError(Exception):
    """项目异常基类"""

    module = "spt_graph"

    def __init__(self, message: str):
        self.detail = message
        super().__init__(f"[{self.module}] {message}")


class DatasetError(SptGraphError):
    module = "dataset"


class TreeError(SptGraphError):
    module = "trees"


class ClassifierError(SptGraphError):
    module = "spt_cd"


class TrainingError(SptGraphError):
    module = "training"


class ModelFormatError(SptGraphError):
    module = "training"


class InferenceError(SptGraphError):
    module = "inference"


class EvaluationError(SptGraphError):
    module = "evaluation"


class ConfigError(SptGraphError):
    module = "config"
