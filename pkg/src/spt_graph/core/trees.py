"""
生成树枚举与几何计算
枚举 γ 个邻域点上的全部带标号生成树（Prüfer 序列双射），并提供边长、阈值、点到树距离
"""

import itertools
import math
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from spt_graph.core.base_framework import (
    DEFAULT_ENUMERATION_CAP,
    FeatureVector,
    LabeledTree,
    TreeDistance,
)
from spt_graph.core.errors import TreeError


Edge = Tuple[int, int]


class DisjointSet:
    """并查集：路径压缩 + 按秩合并"""

    def __init__(self, size: int):
        self.parent = list(range(size))
        self.rank = [0] * size

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, x: int, y: int) -> bool:
        """合并两个集合，已连通时返回 False（即出现环）"""
        root_x, root_y = self.find(x), self.find(y)
        if root_x == root_y:
            return False
        if self.rank[root_x] < self.rank[root_y]:
            root_x, root_y = root_y, root_x
        self.parent[root_y] = root_x
        if self.rank[root_x] == self.rank[root_y]:
            self.rank[root_x] += 1
        return True


def is_spanning_tree(edges: Sequence[Edge], gamma: int) -> bool:
    """γ-1 条边、无环且连通所有节点"""
    if gamma < 1 or len(edges) != gamma - 1:
        return False
    forest = DisjointSet(gamma)
    for i, j in edges:
        if not (0 <= i < gamma and 0 <= j < gamma) or i == j:
            return False
        if not forest.union(i, j):
            return False
    return True


def decode_pruefer(seq: Sequence[int], gamma: int) -> Tuple[Edge, ...]:
    """
    Prüfer 序列解码为边列表，每条边写成 (i, j) 且 i < j，整体按字典序排列
    """
    if gamma < 2:
        raise TreeError(f"gamma must be at least 2, got {gamma}")
    if len(seq) != gamma - 2:
        raise TreeError(f"Pruefer sequence for gamma={gamma} needs {gamma - 2} entries, got {len(seq)}")
    for v in seq:
        if not 0 <= v <= gamma - 1:
            raise TreeError(f"Pruefer entry {v} out of range [0, {gamma - 1}]")

    tree = nx.from_prufer_sequence(list(seq))
    return tuple(sorted((min(u, v), max(u, v)) for u, v in tree.edges()))


@lru_cache(maxsize=None)
def spanning_tree_edges(gamma: int) -> Tuple[Tuple[Edge, ...], ...]:
    """γ 个节点上全部 γ^(γ-2) 棵生成树的边集，按 Prüfer 序列字典序"""
    return tuple(
        decode_pruefer(code, gamma) for code in itertools.product(range(gamma), repeat=gamma - 2)
    )


def enumerate_spanning_trees(
    points: Sequence[FeatureVector],
    node_ids: Optional[Sequence[int]] = None,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> List[LabeledTree]:
    """
    枚举 γ 个点的全部生成树

    Args:
        points: γ 个特征向量
        node_ids: 各点对应的源实例 id，默认 0..γ-1
        cap: γ 的上限
    """
    gamma = len(points)
    if gamma < 2:
        raise TreeError(f"gamma must be at least 2, got {gamma}")
    if gamma > cap:
        raise TreeError(f"gamma above enumeration cap ({gamma} > {cap})")

    dims = {len(p) for p in points}
    if len(dims) != 1:
        raise TreeError(f"dimension mismatch among tree points: {sorted(dims)}")

    matrix = np.asarray(points, dtype=float)
    ids = tuple(int(i) for i in node_ids) if node_ids is not None else tuple(range(gamma))
    if len(ids) != gamma:
        raise TreeError(f"{len(ids)} node ids for {gamma} points")

    nodes = tuple(tuple(float(v) for v in row) for row in matrix)
    lengths: Dict[Edge, float] = {
        (i, j): float(np.linalg.norm(matrix[i] - matrix[j]))
        for i, j in itertools.combinations(range(gamma), 2)
    }

    trees = []
    for edges in spanning_tree_edges(gamma):
        edge_lengths = tuple(lengths[e] for e in edges)
        trees.append(
            LabeledTree(
                node_ids=ids,
                nodes=nodes,
                edges=edges,
                edge_lengths=edge_lengths,
                weight_sum=math.fsum(edge_lengths),
            )
        )
    return trees


def _check_dims(*vectors: np.ndarray):
    dims = {v.shape[-1] for v in vectors}
    if len(dims) != 1:
        raise TreeError(f"dimension mismatch: {sorted(dims)}")


def _canonical_order(xi: np.ndarray, xj: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    # 端点按坐标字典序排列，使结果与端点顺序无关
    differ = np.flatnonzero(xi != xj)
    if differ.size and xj[differ[0]] < xi[differ[0]]:
        return xj, xi
    return xi, xj


def point_to_edge_distance(z: FeatureVector, xi: FeatureVector, xj: FeatureVector) -> Tuple[float, bool]:
    """
    点到线段距离：投影参数 t ∈ [0,1] 时取垂足距离，否则取到两端点的较小距离

    Returns:
        (距离, 是否走投影分支)
    """
    z = np.asarray(z, dtype=float)
    xi = np.asarray(xi, dtype=float)
    xj = np.asarray(xj, dtype=float)
    _check_dims(z, xi, xj)

    xi, xj = _canonical_order(xi, xj)
    direction = xj - xi
    denom = float(direction @ direction)
    if denom == 0.0:
        return float(np.linalg.norm(z - xi)), False

    t = float(direction @ (z - xi)) / denom
    if 0.0 <= t <= 1.0:
        return float(np.linalg.norm(z - (xi + t * direction))), True
    return min(float(np.linalg.norm(z - xi)), float(np.linalg.norm(z - xj))), False


def point_to_tree_distance(z: FeatureVector, h: LabeledTree) -> TreeDistance:
    """点到树每条边的距离及其最小值 d(z, h)"""
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != h.points.shape[1]:
        raise TreeError(f"dimension mismatch: query has {z.shape[-1]}, tree has {h.points.shape[1]}")

    per_edge = tuple(point_to_edge_distance(z, h.points[i], h.points[j])[0] for i, j in h.edges)
    return TreeDistance(per_edge=per_edge, min_dist=min(per_edge))


def tree_threshold(h: LabeledTree, boundary_alpha: float) -> float:
    """边界阈值 θ：升序边长中下标 min(floor(α·n), n-1) 的值"""
    n = len(h.edge_lengths)
    if n < 1:
        raise TreeError("tree has no edges")
    ordered = sorted(h.edge_lengths)
    return ordered[min(int(math.floor(boundary_alpha * n)), n - 1)]
