"""
训练阶段
对每个探针 s 构造两类的 γ 邻域，枚举全部生成树，用成对投票计数 C 过滤后写入字典 ζ0 / ζ1
"""

import json
import logging
import statistics
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from spt_graph.core.async_processor import ParallelProcessor
from spt_graph.core.base_framework import (
    ClassSplit,
    FeatureVector,
    HyperParams,
    Instance,
    InstancePool,
    LabeledTree,
    TrainedModel,
    TreeRecord,
)
from spt_graph.core.errors import DatasetError, ModelFormatError, SptGraphError, TrainingError
from spt_graph.core.spt_cd import decide_pair
from spt_graph.core.trees import (
    enumerate_spanning_trees,
    is_spanning_tree,
    point_to_tree_distance,
    tree_threshold,
)
from spt_graph.utils.utils import format_real, parse_real


logger = logging.getLogger(__name__)

MODEL_MAGIC = "spt_graph-model"
SCHEMA_VERSION = 1


# ==================== 近邻 ====================


def nearest_indices(
    point: FeatureVector, pool: InstancePool, count: int, exclude_id: Optional[int] = None
) -> np.ndarray:
    """pool 中距 point 最近的 count 个下标，距离相同按 id 升序"""
    point = np.asarray(point, dtype=float)
    if pool.matrix.shape[1] != point.shape[-1]:
        raise TrainingError(
            f"dimension mismatch: point has {point.shape[-1]} features, pool has {pool.matrix.shape[1]}"
        )
    dists = np.linalg.norm(pool.matrix - point, axis=1)
    order = np.lexsort((pool.ids, dists))
    if exclude_id is not None:
        order = order[pool.ids[order] != exclude_id]
    return order[:count]


def gamma_neighbourhood(
    s: Instance, pool: Union[Sequence[Instance], InstancePool], gamma: int
) -> Tuple[Instance, ...]:
    """s 在 pool 中的 γ 个最近邻（排除 id 与 s 相同的成员）"""
    if not isinstance(pool, InstancePool):
        pool = InstancePool(pool)
    available = sum(1 for i in pool.ids if i != s.id)
    if available < gamma:
        raise TrainingError(f"class pool smaller than gamma ({available} < {gamma})")
    return tuple(pool.instances[i] for i in nearest_indices(s.features, pool, gamma, s.id))


def neighbourhood_trees(
    point: FeatureVector, pool: InstancePool, params: HyperParams, exclude_id: Optional[int] = None
) -> List[LabeledTree]:
    """point 在 pool 中的 γ 邻域上的全部生成树"""
    idx = nearest_indices(point, pool, params.gamma, exclude_id)
    if len(idx) < params.gamma:
        raise TrainingError(f"class pool smaller than gamma ({len(idx)} < {params.gamma})")
    return enumerate_spanning_trees(
        pool.matrix[idx], node_ids=pool.ids[idx].tolist(), cap=params.enumeration_cap
    )


# ==================== 训练 ====================


def vote_matrix(
    z: FeatureVector,
    trees0: Sequence[LabeledTree],
    trees1: Sequence[LabeledTree],
    params: HyperParams,
) -> np.ndarray:
    """votes[i, j] = SPT_CD(trees0[i], trees1[j], z) 的投票"""
    dist0 = [point_to_tree_distance(z, h) for h in trees0]
    dist1 = [point_to_tree_distance(z, h) for h in trees1]
    theta0 = [tree_threshold(h, params.boundary_alpha) for h in trees0]
    theta1 = [tree_threshold(h, params.boundary_alpha) for h in trees1]

    votes = np.empty((len(trees0), len(trees1)), dtype=np.int64)
    for i in range(len(trees0)):
        for j in range(len(trees1)):
            votes[i, j] = decide_pair(
                dist0[i], dist1[j], theta0[i], theta1[j], params.k1, params.paper_literal_tiebreak
            ).vote
    return votes


def _records(s: Instance, trees: Sequence[LabeledTree], counters: np.ndarray) -> Tuple[TreeRecord, ...]:
    kept = [
        TreeRecord(tree=h, dist_to_owner=point_to_tree_distance(s.features, h).min_dist, weight_sum=h.weight_sum)
        for h, c in zip(trees, counters)
        if c >= 0
    ]
    # 稳定排序：距离相同保留枚举顺序
    return tuple(sorted(kept, key=lambda r: r.dist_to_owner))


def train_owner(
    s: Instance, pool0: InstancePool, pool1: InstancePool, params: HyperParams
) -> Tuple[int, Tuple[TreeRecord, ...], Tuple[TreeRecord, ...]]:
    """单个探针的训练：返回 (owner id, ζ0 记录, ζ1 记录)"""
    trees0 = neighbourhood_trees(s.features, pool0, params, exclude_id=s.id)
    trees1 = neighbourhood_trees(s.features, pool1, params, exclude_id=s.id)

    # 投票正确记 +1，错误记 -1
    correct = np.where(vote_matrix(s.features, trees0, trees1, params) == s.label, 1, -1)
    records0 = _records(s, trees0, correct.sum(axis=1))
    records1 = _records(s, trees1, correct.sum(axis=0))
    logger.debug(
        f"探针 {s.id} (label {s.label:+d}): ζ0 保留 {len(records0)}/{len(trees0)}, "
        f"ζ1 保留 {len(records1)}/{len(trees1)}"
    )
    return s.id, records0, records1


def train(split: ClassSplit, params: HyperParams, jobs: int = 1) -> TrainedModel:
    """训练：对 S 中每个探针并行执行，按 owner id 汇总为确定的字典"""
    for name, pool in (("x0", split.x0), ("x1", split.x1)):
        if len(pool) < params.gamma:
            raise TrainingError(f"class pool {name} smaller than gamma ({len(pool)} < {params.gamma})")

    pool0, pool1 = InstancePool(split.x0), InstancePool(split.x1)
    owners = tuple(sorted(split.s, key=lambda x: x.id))

    processor = ParallelProcessor(jobs, name="train")
    results = processor.map(partial(train_owner, pool0=pool0, pool1=pool1, params=params), owners)

    zeta0 = {owner_id: records0 for owner_id, records0, _ in results}
    zeta1 = {owner_id: records1 for owner_id, _, records1 in results}
    return TrainedModel(
        zeta0=zeta0,
        zeta1=zeta1,
        owners=owners,
        x0=tuple(split.x0),
        x1=tuple(split.x1),
        params=params,
    )


# ==================== 模型摘要 ====================


@dataclass(frozen=True)
class SurvivorStats:
    minimum: int
    mean: float
    maximum: int
    total: int


@dataclass(frozen=True)
class ModelSummary:
    owner_count: int
    zeta0: SurvivorStats
    zeta1: SurvivorStats


def _stats(zeta: Dict[int, Tuple[TreeRecord, ...]]) -> SurvivorStats:
    counts = [len(records) for records in zeta.values()] or [0]
    return SurvivorStats(min(counts), statistics.fmean(counts), max(counts), sum(counts))


def summarize_model(model: TrainedModel) -> ModelSummary:
    """owner 数量与每个 owner 保留树数量的统计"""
    return ModelSummary(owner_count=len(model.owners), zeta0=_stats(model.zeta0), zeta1=_stats(model.zeta1))


# ==================== 模型持久化 ====================


def _instance_doc(x: Instance) -> dict:
    return {"id": x.id, "label": x.label, "features": [format_real(v) for v in x.features]}


def _record_doc(r: TreeRecord) -> dict:
    return {
        "nodes": list(r.tree.node_ids),
        "edges": [list(e) for e in r.tree.edges],
        "edge_lengths": [format_real(v) for v in r.tree.edge_lengths],
        "dist_to_owner": format_real(r.dist_to_owner),
        "weight_sum": format_real(r.weight_sum),
    }


def model_to_document(m: TrainedModel) -> dict:
    return {
        "magic": MODEL_MAGIC,
        "schema_version": SCHEMA_VERSION,
        "params": m.params.model_dump(mode="json"),
        "owners": [_instance_doc(x) for x in m.owners],
        "x0": [_instance_doc(x) for x in m.x0],
        "x1": [_instance_doc(x) for x in m.x1],
        "zeta0": {str(k): [_record_doc(r) for r in v] for k, v in m.zeta0.items()},
        "zeta1": {str(k): [_record_doc(r) for r in v] for k, v in m.zeta1.items()},
    }


def save_model(m: TrainedModel, path):
    """保存模型为 JSON，键排序固定，相同模型得到字节一致的文件"""
    text = json.dumps(model_to_document(m), ensure_ascii=False, indent=2, sort_keys=True)
    try:
        Path(path).write_text(text + "\n", encoding="utf-8")
    except OSError as e:
        raise TrainingError(f"cannot write model file {path}: {e}") from e


def _load_instance(doc: dict) -> Instance:
    return Instance(
        id=int(doc["id"]),
        features=tuple(parse_real(v) for v in doc["features"]),
        label=int(doc["label"]),
    )


def _load_record(doc: dict, by_id: Dict[int, Instance]) -> TreeRecord:
    node_ids = tuple(int(i) for i in doc["nodes"])
    edges = tuple((int(i), int(j)) for i, j in doc["edges"])
    if not is_spanning_tree(edges, len(node_ids)):
        raise ModelFormatError(f"stored edge list is not a spanning tree: {edges}")
    missing = [i for i in node_ids if i not in by_id]
    if missing:
        raise ModelFormatError(f"tree references unknown instances {missing}")
    tree = LabeledTree(
        node_ids=node_ids,
        nodes=tuple(by_id[i].features for i in node_ids),
        edges=edges,
        edge_lengths=tuple(parse_real(v) for v in doc["edge_lengths"]),
        weight_sum=parse_real(doc["weight_sum"]),
    )
    return TreeRecord(tree=tree, dist_to_owner=parse_real(doc["dist_to_owner"]), weight_sum=tree.weight_sum)


def load_model(path) -> TrainedModel:
    """读取模型文件，校验 magic 与 schema 版本"""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise TrainingError(f"cannot read model file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"model file {path} is not valid JSON: {e}") from e

    if not isinstance(doc, dict) or doc.get("magic") != MODEL_MAGIC:
        raise ModelFormatError(f"{path} is not a model file (bad magic)")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ModelFormatError(
            f"schema version mismatch: file has {doc.get('schema_version')}, expected {SCHEMA_VERSION}"
        )

    try:
        params = HyperParams.model_validate(doc["params"])
        owners = tuple(_load_instance(x) for x in doc["owners"])
        x0 = tuple(_load_instance(x) for x in doc["x0"])
        x1 = tuple(_load_instance(x) for x in doc["x1"])
        by_id0 = {x.id: x for x in x0}
        by_id1 = {x.id: x for x in x1}
        zeta0 = {int(k): tuple(_load_record(r, by_id0) for r in v) for k, v in doc["zeta0"].items()}
        zeta1 = {int(k): tuple(_load_record(r, by_id1) for r in v) for k, v in doc["zeta1"].items()}
    except DatasetError as e:
        raise ModelFormatError(f"malformed model file {path}: {e.detail}") from e
    except SptGraphError:
        raise
    except Exception as e:
        raise ModelFormatError(f"malformed model file {path}: {e}") from e

    # 按 owner id 排序，与训练输出一致
    return TrainedModel(
        zeta0=dict(sorted(zeta0.items())),
        zeta1=dict(sorted(zeta1.items())),
        owners=owners,
        x0=x0,
        x1=x1,
        params=params,
    )
