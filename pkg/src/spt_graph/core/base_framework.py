import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Union
from functools import cached_property

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from spt_graph.core.errors import DatasetError


DEFAULT_ENUMERATION_CAP = 6
POSITIVE = 1
NEGATIVE = -1

FeatureVector = Union[Sequence[float], np.ndarray]


class Branch(Enum):
    ACCEPT0_REJECT1 = "accept0_reject1"
    REJECT0_ACCEPT1 = "reject0_accept1"
    BOTH_ACCEPT = "both_accept"
    BOTH_REJECT = "both_reject"


class Objective(Enum):
    CLOSEST = "closest"
    FARTHEST = "farthest"


# ==================== 参数模型 ====================


class HyperParams(BaseModel):
    """算法超参数，构造即校验，之后不可变"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    gamma: int = Field(3, ge=2)
    boundary_alpha: float = Field(0.5, ge=0.0, le=1.0)
    beta_alpha: float = Field(0.5, ge=0.0, le=1.0)
    best_spt: int = Field(3, ge=1)
    k_neighbours: int = Field(3, ge=1)
    k1: int = Field(2, ge=1)
    s_fraction: float = Field(0.2, gt=0.0, lt=1.0)
    seed: int = 0
    enumeration_cap: int = Field(DEFAULT_ENUMERATION_CAP, ge=2)
    objective: Objective = Objective.CLOSEST
    paper_literal_tiebreak: bool = False

    @model_validator(mode="after")
    def _check_gamma_cap(self):
        if self.gamma > self.enumeration_cap:
            raise ValueError(
                f"gamma above enumeration cap ({self.gamma} > {self.enumeration_cap})"
            )
        return self


class DatasetSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    path: Optional[str] = None
    label_column: Union[int, str] = -1
    positive_label: Optional[str] = None
    scale: bool = False


class RunSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    folds: int = Field(5, ge=2)
    ratios: List[float] = Field(default_factory=lambda: [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
    sweep_repeats: int = Field(5, ge=1)
    out: str = "output"
    jobs: int = Field(1, ge=1)
    model: Optional[str] = None
    input: Optional[str] = None
    classifier: Literal["spt_cd", "knn"] = "spt_cd"
    knn_k: int = Field(5, ge=1)

    @model_validator(mode="after")
    def _check_ratios(self):
        if not self.ratios:
            raise ValueError("ratios list is empty")
        return self


class GridSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    gamma: List[int] = Field(default_factory=lambda: [2, 3, 4])
    boundary_alpha: List[float] = Field(default_factory=lambda: [0.5])
    beta_alpha: List[float] = Field(default_factory=lambda: [0.25, 0.5, 0.75])
    best_spt: List[int] = Field(default_factory=lambda: [1, 3, 5])
    k_neighbours: List[int] = Field(default_factory=lambda: [3])
    k1: List[int] = Field(default_factory=lambda: [1, 2])
    s_fraction: List[float] = Field(default_factory=lambda: [0.2])


class RunConfig(BaseModel):
    """一次运行的完整配置：数据集 + 超参数 + 命令参数"""

    model_config = ConfigDict(extra="forbid")

    dataset: DatasetSection = Field(default_factory=DatasetSection)
    params: HyperParams = Field(default_factory=HyperParams)
    run: RunSection = Field(default_factory=RunSection)
    grid: GridSection = Field(default_factory=GridSection)


# ==================== 数据集 ====================


@dataclass(frozen=True)
class Instance:
    id: int
    features: Tuple[float, ...]
    label: int

    def __post_init__(self):
        if not self.features:
            raise DatasetError(f"instance {self.id} needs at least one feature")
        if not all(math.isfinite(v) for v in self.features):
            raise DatasetError(f"instance {self.id} has non-finite features")
        if self.label not in (POSITIVE, NEGATIVE):
            raise DatasetError(f"instance {self.id}: label must be +1 or -1, got {self.label}")

    @property
    def vector(self) -> np.ndarray:
        return np.asarray(self.features, dtype=float)


@dataclass(frozen=True)
class Dataset:
    instances: Tuple[Instance, ...]
    feature_count: int
    name: str = "dataset"

    def __post_init__(self):
        # 单类子集（如测试折）是合法的，两类齐全由读取与划分入口检查
        if self.feature_count < 1:
            raise DatasetError(f"feature_count must be positive, got {self.feature_count}")
        seen = set()
        for x in self.instances:
            if len(x.features) != self.feature_count:
                raise DatasetError(
                    f"instance {x.id} has {len(x.features)} features, feature_count is {self.feature_count}"
                )
            if x.id in seen:
                raise DatasetError(f"duplicate instance id {x.id}")
            seen.add(x.id)

    def __len__(self):
        return len(self.instances)

    def by_label(self, label: int) -> Tuple[Instance, ...]:
        return tuple(x for x in self.instances if x.label == label)

    def label_counts(self) -> Dict[int, int]:
        return {POSITIVE: len(self.by_label(POSITIVE)), NEGATIVE: len(self.by_label(NEGATIVE))}


@dataclass(frozen=True)
class ClassSplit:
    x0: Tuple[Instance, ...]
    x1: Tuple[Instance, ...]
    s: Tuple[Instance, ...]


class InstancePool:
    """实例集合的矩阵视图，供近邻搜索复用"""

    def __init__(self, instances: Sequence[Instance]):
        self.instances: Tuple[Instance, ...] = tuple(instances)
        self.ids = np.asarray([x.id for x in self.instances], dtype=np.int64)
        if self.instances:
            self.matrix = np.asarray([x.features for x in self.instances], dtype=float)
        else:
            self.matrix = np.empty((0, 0), dtype=float)

    def __len__(self):
        return len(self.instances)


# ==================== 树结构 ====================


@dataclass(frozen=True)
class LabeledTree:
    node_ids: Tuple[int, ...]
    nodes: Tuple[Tuple[float, ...], ...]
    edges: Tuple[Tuple[int, int], ...]
    edge_lengths: Tuple[float, ...]
    weight_sum: float
    points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.nodes, dtype=float))

    @property
    def gamma(self) -> int:
        return len(self.node_ids)


@dataclass(frozen=True)
class TreeDistance:
    per_edge: Tuple[float, ...]
    min_dist: float


@dataclass(frozen=True)
class PairwiseDecision:
    vote: int
    d0: float
    d1: float
    theta0: float
    theta1: float
    branch: Branch


# ==================== 训练产物 ====================


@dataclass(frozen=True)
class TreeRecord:
    tree: LabeledTree
    dist_to_owner: float
    weight_sum: float


@dataclass(frozen=True)
class TrainedModel:
    zeta0: Dict[int, Tuple[TreeRecord, ...]]
    zeta1: Dict[int, Tuple[TreeRecord, ...]]
    owners: Tuple[Instance, ...]
    x0: Tuple[Instance, ...]
    x1: Tuple[Instance, ...]
    params: HyperParams

    @property
    def feature_count(self) -> int:
        return len(self.x0[0].features) if self.x0 else 0

    @cached_property
    def pool0(self) -> InstancePool:
        return InstancePool(self.x0)

    @cached_property
    def pool1(self) -> InstancePool:
        return InstancePool(self.x1)

    @cached_property
    def owner_pool(self) -> InstancePool:
        return InstancePool(self.owners)


# ==================== 推理结果 ====================


@dataclass(frozen=True)
class BetaProvenance:
    owner_ids: Tuple[int, ...]
    index: Optional[int]
    pool_size: int


@dataclass(frozen=True)
class BetaPair:
    beta0: Optional[float]
    beta1: Optional[float]
    provenance0: BetaProvenance
    provenance1: BetaProvenance

    @property
    def absent0(self) -> bool:
        return self.beta0 is None

    @property
    def absent1(self) -> bool:
        return self.beta1 is None


@dataclass(frozen=True)
class Prediction:
    label: int
    votes_per_h: Tuple[int, ...]
    selected_counts: Tuple[int, int]

    @property
    def vote_share(self) -> float:
        """正类票占比，作为 ROC 的连续得分"""
        if not self.votes_per_h:
            return 0.0
        return sum(1 for v in self.votes_per_h if v == POSITIVE) / len(self.votes_per_h)


# ==================== 评估结果 ====================


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(
            self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn
        )


# None 表示 0/0 的未定义指标
@dataclass(frozen=True)
class MetricReport:
    accuracy: Optional[float]
    sensitivity: Optional[float]
    specificity: Optional[float]
    precision: Optional[float]
    f1: Optional[float]
    auc: Optional[float] = None
    roc_points: Tuple[Tuple[float, float], ...] = ()


METRIC_NAMES = ("accuracy", "sensitivity", "specificity", "precision", "f1", "auc")
