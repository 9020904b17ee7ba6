"""
成对生成树分类器：给定一棵正类树与一棵负类树，对查询点投票 +1 / -1
"""

from typing import Sequence

from spt_graph.core.base_framework import (
    Branch,
    FeatureVector,
    LabeledTree,
    NEGATIVE,
    POSITIVE,
    PairwiseDecision,
    TreeDistance,
)
from spt_graph.core.errors import ClassifierError
from spt_graph.core.trees import point_to_tree_distance, tree_threshold


def _tiebreak(dist0: TreeDistance, dist1: TreeDistance, k1: int, paper_literal: bool) -> int:
    """
    两棵树同时接受或同时拒绝时，比较各自最小的 k1 个边距离

    k1 截断到两棵树边数的较小值；差值为 0 的位置不计入任何一方
    """
    k = min(k1, len(dist0.per_edge), len(dist1.per_edge))
    nearest0 = sorted(dist0.per_edge)[:k]
    nearest1 = sorted(dist1.per_edge)[:k]
    diff = [b - a for a, b in zip(nearest0, nearest1)]
    positive = sum(1 for d in diff if d > 0)
    negative = sum(1 for d in diff if d < 0)

    if paper_literal:
        return POSITIVE if negative >= positive else NEGATIVE
    # 距离更近的树所属类别获胜
    return POSITIVE if positive >= negative else NEGATIVE


def decide_pair(
    dist0: TreeDistance,
    dist1: TreeDistance,
    theta0: float,
    theta1: float,
    k1: int,
    paper_literal_tiebreak: bool = False,
) -> PairwiseDecision:
    """基于预先算好的距离与阈值做出成对判决"""
    if k1 < 1:
        raise ClassifierError(f"k1 must be at least 1, got {k1}")

    d0, d1 = dist0.min_dist, dist1.min_dist
    accept0, accept1 = d0 <= theta0, d1 <= theta1

    if accept0 and not accept1:
        vote, branch = POSITIVE, Branch.ACCEPT0_REJECT1
    elif accept1 and not accept0:
        vote, branch = NEGATIVE, Branch.REJECT0_ACCEPT1
    else:
        branch = Branch.BOTH_ACCEPT if accept0 else Branch.BOTH_REJECT
        vote = _tiebreak(dist0, dist1, k1, paper_literal_tiebreak)

    return PairwiseDecision(vote=vote, d0=d0, d1=d1, theta0=theta0, theta1=theta1, branch=branch)


def classify_pair(
    h: LabeledTree,
    h_prime: LabeledTree,
    z: FeatureVector,
    boundary_alpha: float,
    k1: int,
    paper_literal_tiebreak: bool = False,
) -> PairwiseDecision:
    """
    SPT_CD(h, h', z)

    Args:
        h: 正类 (+1) 生成树
        h_prime: 负类 (-1) 生成树
        z: 查询点
        boundary_alpha: 阈值分位参数
        k1: 平局时比较的最近边数
    """
    if not h.edges or not h_prime.edges:
        raise ClassifierError("both trees need at least one edge")
    return decide_pair(
        point_to_tree_distance(z, h),
        point_to_tree_distance(z, h_prime),
        tree_threshold(h, boundary_alpha),
        tree_threshold(h_prime, boundary_alpha),
        k1,
        paper_literal_tiebreak,
    )


def majority(votes: Sequence[int]) -> int:
    """多数表决，票数和为 0 时判为 +1"""
    if not votes:
        raise ClassifierError("majority of an empty vote sequence")
    return POSITIVE if sum(votes) >= 0 else NEGATIVE
