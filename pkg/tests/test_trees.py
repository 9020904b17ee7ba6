# -*- coding: UTF-8 -*-
import itertools
import math

import networkx as nx
import numpy as np
import pytest

from spt_graph.core.base_framework import LabeledTree
from spt_graph.core.errors import TreeError
from spt_graph.core.trees import (
    decode_pruefer,
    enumerate_spanning_trees,
    is_spanning_tree,
    point_to_edge_distance,
    point_to_tree_distance,
    spanning_tree_edges,
    tree_threshold,
)


def path_tree(lengths) -> LabeledTree:
    """沿 x 轴排列的路径树，边长依次为 lengths"""
    xs = [0.0]
    for length in lengths:
        xs.append(xs[-1] + length)
    n = len(xs)
    return LabeledTree(
        node_ids=tuple(range(n)),
        nodes=tuple((x, 0.0) for x in xs),
        edges=tuple((i, i + 1) for i in range(n - 1)),
        edge_lengths=tuple(float(v) for v in lengths),
        weight_sum=math.fsum(lengths),
    )


def segment_scan(z, xi, xj, samples=100_000):
    """线段上等距采样求最小距离，再在最优采样点两侧加密一次"""
    t = np.linspace(0.0, 1.0, samples)
    best = int(np.argmin(np.linalg.norm(xi + t[:, None] * (xj - xi) - z, axis=1)))
    fine = np.linspace(t[max(best - 1, 0)], t[min(best + 1, samples - 1)], samples)[:, None]
    return float(np.min(np.linalg.norm(xi + fine * (xj - xi) - z, axis=1)))


# ==================== 枚举 ====================


@pytest.mark.parametrize("gamma,count", [(2, 1), (3, 3), (4, 16), (5, 125)])
def test_cayley_counts(gamma, count):
    rng = np.random.default_rng(gamma)
    trees = enumerate_spanning_trees(rng.normal(size=(gamma, 3)).tolist())
    assert len(trees) == count
    assert len({t.edges for t in trees}) == count
    for t in trees:
        assert is_spanning_tree(t.edges, gamma)
        graph = nx.Graph(list(t.edges))
        graph.add_nodes_from(range(gamma))
        assert nx.is_tree(graph)


def test_gamma4_matches_brute_force_subsets():
    complete = list(itertools.combinations(range(4), 2))
    brute = {
        tuple(sorted(subset))
        for subset in itertools.combinations(complete, 3)
        if nx.is_tree(nx.Graph(list(subset))) and len(nx.Graph(list(subset))) == 4
    }
    assert len(brute) == 16
    assert set(spanning_tree_edges(4)) == brute


def test_enumeration_carries_ids_and_lengths():
    points = [(0.0, 0.0), (3.0, 0.0), (0.0, 4.0)]
    trees = enumerate_spanning_trees(points, node_ids=[7, 2, 9])
    assert all(t.node_ids == (7, 2, 9) for t in trees)
    sums = sorted(t.weight_sum for t in trees)
    assert sums == pytest.approx([7.0, 8.0, 9.0])
    for t in trees:
        assert t.weight_sum == pytest.approx(sum(t.edge_lengths))


def test_enumeration_rejects_bad_input():
    with pytest.raises(TreeError, match="at least 2"):
        enumerate_spanning_trees([(0.0, 0.0)])
    with pytest.raises(TreeError, match="gamma above enumeration cap"):
        enumerate_spanning_trees([(float(i),) for i in range(7)])
    with pytest.raises(TreeError, match="dimension mismatch"):
        enumerate_spanning_trees([(0.0, 0.0), (1.0,)])


def test_decode_pruefer_examples():
    assert decode_pruefer((), 2) == ((0, 1),)
    assert decode_pruefer((0,), 3) == ((0, 1), (0, 2))
    assert decode_pruefer((2, 3), 4) == ((0, 2), (1, 3), (2, 3))
    assert decode_pruefer((0, 0), 4) == ((0, 1), (0, 2), (0, 3))


def test_decode_pruefer_validation():
    with pytest.raises(TreeError, match="needs 2 entries"):
        decode_pruefer((0,), 4)
    with pytest.raises(TreeError, match="out of range"):
        decode_pruefer((4, 0), 4)


def test_is_spanning_tree_rejects_cycles_and_gaps():
    assert is_spanning_tree(((0, 1), (1, 2)), 3)
    assert not is_spanning_tree(((0, 1), (0, 1)), 3)
    assert not is_spanning_tree(((0, 1),), 3)
    assert not is_spanning_tree(((0, 1), (1, 3)), 3)
    assert not is_spanning_tree(((0, 1), (1, 2), (2, 0)), 3)


# ==================== 几何 ====================


def test_point_to_edge_examples():
    assert point_to_edge_distance((1, 1), (0, 0), (2, 0)) == (1.0, True)
    assert point_to_edge_distance((3, 0), (0, 0), (2, 0)) == (1.0, False)
    assert point_to_edge_distance((0, 1), (0, 0), (2, 0)) == (1.0, True)


def test_point_to_edge_degenerate_segment():
    assert point_to_edge_distance((3, 4), (0, 0), (0, 0)) == (5.0, False)


def test_point_to_edge_matches_segment_scan():
    rng = np.random.default_rng(42)
    for _ in range(1000):
        z, xi, xj = rng.normal(size=(3, 3))
        distance, _ = point_to_edge_distance(z, xi, xj)
        assert distance == pytest.approx(segment_scan(z, xi, xj), rel=1e-6)


def test_point_to_edge_symmetry_and_translation():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        z, xi, xj = rng.normal(size=(3, 4))
        assert point_to_edge_distance(z, xi, xj) == point_to_edge_distance(z, xj, xi)
        shift = rng.normal(size=4)
        moved, _ = point_to_edge_distance(z + shift, xi + shift, xj + shift)
        assert moved == pytest.approx(point_to_edge_distance(z, xi, xj)[0], rel=1e-9, abs=1e-12)


def test_point_to_tree_distance_examples():
    single = path_tree([2.0])
    assert point_to_tree_distance((1, 1), single).min_dist == 1.0
    assert point_to_tree_distance((2, 0), single).min_dist == 0.0

    bent = LabeledTree(
        node_ids=(0, 1, 2),
        nodes=((0.0, 0.0), (1.0, 0.0), (1.0, 1.0)),
        edges=((0, 1), (1, 2)),
        edge_lengths=(1.0, 1.0),
        weight_sum=2.0,
    )
    d = point_to_tree_distance((5, 5), bent)
    assert d.per_edge == pytest.approx((math.sqrt(41), math.sqrt(32)))
    assert d.min_dist == pytest.approx(math.sqrt(32))


def test_point_to_tree_dimension_mismatch():
    with pytest.raises(TreeError, match="dimension mismatch"):
        point_to_tree_distance((1, 1, 1), path_tree([1.0]))


@pytest.mark.parametrize(
    "lengths,alpha,expected",
    [([1, 2, 3], 0.5, 2.0), ([4], 0.0, 4.0), ([4], 1.0, 4.0), ([1, 2, 3, 4], 0.5, 3.0), ([3, 1, 2], 1.0, 3.0)],
)
def test_tree_threshold(lengths, alpha, expected):
    assert tree_threshold(path_tree(lengths), alpha) == expected


def test_tree_threshold_monotone_and_bounded():
    rng = np.random.default_rng(5)
    alphas = np.linspace(0.0, 1.0, 21)
    for _ in range(100):
        tree = path_tree(rng.uniform(0.1, 5.0, size=int(rng.integers(1, 8))).tolist())
        thresholds = [tree_threshold(tree, float(a)) for a in alphas]
        assert thresholds == sorted(thresholds)
        assert min(tree.edge_lengths) <= thresholds[0]
        assert thresholds[-1] <= max(tree.edge_lengths)


def test_weight_sum_survives_node_relabeling():
    rng = np.random.default_rng(9)
    for _ in range(20):
        points = rng.normal(size=(4, 3))
        perm = rng.permutation(4)
        moved = np.empty_like(points)
        moved[perm] = points

        by_edges = {frozenset(t.edges): t for t in enumerate_spanning_trees(moved.tolist())}
        for tree in enumerate_spanning_trees(points.tolist()):
            relabeled = frozenset(tuple(sorted((int(perm[i]), int(perm[j])))) for i, j in tree.edges)
            assert by_edges[relabeled].weight_sum == tree.weight_sum
