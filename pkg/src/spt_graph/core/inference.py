"""
推理阶段
β 赋值 → 按 |Δ| 选取子图 → 成对投票的两层多数表决
"""

import logging
import math
from functools import partial
from typing import List, Optional, Sequence, Tuple

import numpy as np

from spt_graph.core.async_processor import ParallelProcessor
from spt_graph.core.base_framework import (
    BetaPair,
    BetaProvenance,
    FeatureVector,
    LabeledTree,
    Objective,
    Prediction,
    TrainedModel,
)
from spt_graph.core.errors import InferenceError, SptGraphError, TrainingError
from spt_graph.core.spt_cd import majority
from spt_graph.core.training import neighbourhood_trees, vote_matrix


logger = logging.getLogger(__name__)


def _beta_for(
    z: np.ndarray, model: TrainedModel, zeta
) -> Tuple[Optional[float], BetaProvenance]:
    # 在字典的 owner 中找最近的 k_neighbours 个
    owner_pool = model.owner_pool
    keyed = np.asarray([i in zeta for i in owner_pool.ids.tolist()], dtype=bool)
    if len(owner_pool) == 0 or not keyed.any():
        return None, BetaProvenance(owner_ids=(), index=None, pool_size=0)

    candidates = np.flatnonzero(keyed)
    dists = np.linalg.norm(owner_pool.matrix[candidates] - z, axis=1)
    order = candidates[np.lexsort((owner_pool.ids[candidates], dists))]
    owner_ids = tuple(int(i) for i in owner_pool.ids[order[: model.params.k_neighbours]])

    weight_all_spt = sorted(r.weight_sum for owner in owner_ids for r in zeta[owner])
    if not weight_all_spt:
        return None, BetaProvenance(owner_ids=owner_ids, index=None, pool_size=0)

    n = len(weight_all_spt)
    index = min(int(math.floor(model.params.beta_alpha * n)), n - 1)
    return weight_all_spt[index], BetaProvenance(owner_ids=owner_ids, index=index, pool_size=n)


def _as_query(z: FeatureVector, model: TrainedModel) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.shape[0] != model.feature_count:
        found = z.shape[-1] if z.ndim else 0
        raise InferenceError(
            f"feature dimension mismatch: expected m={model.feature_count}, found m={found}"
        )
    if not np.all(np.isfinite(z)):
        raise InferenceError("query contains NaN or infinite values")
    return z


def beta_assignment(z: FeatureVector, model: TrainedModel) -> BetaPair:
    """
    β 赋值：收集最近 owner 的全部记录权重和，升序后取 floor(beta_alpha·n) 处的值

    查不到记录时该类 β 标记为缺失 (None)
    """
    z = _as_query(z, model)
    beta0, provenance0 = _beta_for(z, model, model.zeta0)
    beta1, provenance1 = _beta_for(z, model, model.zeta1)
    return BetaPair(beta0=beta0, beta1=beta1, provenance0=provenance0, provenance1=provenance1)


def eta(weight_sum: float, beta: float) -> float:
    """目标函数 η = 1 / (1 + |Δ|)，Δ 越小越接近 1"""
    return 1.0 / (1.0 + abs(weight_sum - beta))


def select_subgraphs(
    candidates: Sequence[LabeledTree],
    beta: Optional[float],
    best_spt: int,
    objective: Objective = Objective.CLOSEST,
) -> List[LabeledTree]:
    """
    按 |weight_sum - β| 排序选取前 best_spt 棵树，相同时保留枚举顺序

    β 缺失时按 weight_sum 升序选取
    """
    if not candidates:
        raise InferenceError("empty candidate set")
    if best_spt < 1:
        raise InferenceError(f"best_spt must be at least 1, got {best_spt}")

    indexed = list(enumerate(candidates))
    if beta is None:
        ranked = sorted(indexed, key=lambda item: (item[1].weight_sum, item[0]))
    elif objective is Objective.FARTHEST:
        ranked = sorted(indexed, key=lambda item: (-abs(item[1].weight_sum - beta), item[0]))
    else:
        ranked = sorted(indexed, key=lambda item: (abs(item[1].weight_sum - beta), item[0]))
    return [tree for _, tree in ranked[:best_spt]]


def classify(z: FeatureVector, model: TrainedModel) -> Prediction:
    """
    分类单个查询点

    每棵 H0* 树对全部 H1* 树投票后取多数，再对各树结果做最终多数表决
    """
    z = _as_query(z, model)
    params = model.params
    betas = beta_assignment(z, model)
    if betas.absent0 or betas.absent1:
        logger.debug("β 缺失，改按权重和升序选取子图")

    try:
        trees0 = neighbourhood_trees(z, model.pool0, params)
        trees1 = neighbourhood_trees(z, model.pool1, params)
    except TrainingError as e:
        raise InferenceError(e.detail) from e

    selected0 = select_subgraphs(trees0, betas.beta0, params.best_spt, params.objective)
    selected1 = select_subgraphs(trees1, betas.beta1, params.best_spt, params.objective)

    votes = vote_matrix(z, selected0, selected1, params)
    votes_per_h = tuple(majority(row.tolist()) for row in votes)
    return Prediction(
        label=majority(votes_per_h),
        votes_per_h=votes_per_h,
        selected_counts=(len(selected0), len(selected1)),
    )


def _classify_item(item: Tuple[int, FeatureVector], model: TrainedModel) -> Prediction:
    index, z = item
    try:
        return classify(z, model)
    except SptGraphError as e:
        raise InferenceError(f"item {index}: {e.detail}") from e


def classify_batch(zs: Sequence[FeatureVector], model: TrainedModel, jobs: int = 1) -> List[Prediction]:
    """逐个分类，输出顺序与输入一致"""
    processor = ParallelProcessor(jobs, name="classify_batch")
    return processor.map(partial(_classify_item, model=model), list(enumerate(zs)))

