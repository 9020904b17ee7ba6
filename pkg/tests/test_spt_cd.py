# -*- coding: UTF-8 -*-
import numpy as np
import pytest

from spt_graph.core.base_framework import Branch, TreeDistance
from spt_graph.core.errors import ClassifierError
from spt_graph.core.spt_cd import classify_pair, decide_pair, majority
from spt_graph.core.trees import enumerate_spanning_trees, point_to_tree_distance, tree_threshold


def segment(a, b):
    return enumerate_spanning_trees([a, b])[0]


def test_accept0_reject1():
    h, h_prime = segment((0.0, 0.0), (1.0, 0.0)), segment((10.0, 0.0), (11.0, 0.0))
    decision = classify_pair(h, h_prime, (0.5, 0.1), boundary_alpha=0.5, k1=1)
    assert decision.vote == 1
    assert decision.branch is Branch.ACCEPT0_REJECT1
    assert decision.theta0 == decision.theta1 == 1.0
    assert decision.d0 == pytest.approx(0.1)
    assert decision.d1 == pytest.approx(np.hypot(9.5, 0.1))


def test_reject0_accept1():
    h, h_prime = segment((0.0, 0.0), (1.0, 0.0)), segment((10.0, 0.0), (11.0, 0.0))
    decision = classify_pair(h, h_prime, (10.5, 0.1), boundary_alpha=0.5, k1=1)
    assert decision.vote == -1
    assert decision.branch is Branch.REJECT0_ACCEPT1


def test_tiebreak_prefers_closer_tree():
    dist0 = TreeDistance(per_edge=(0.10,), min_dist=0.10)
    dist1 = TreeDistance(per_edge=(0.05,), min_dist=0.05)
    decision = decide_pair(dist0, dist1, theta0=1.0, theta1=1.0, k1=1)
    assert decision.branch is Branch.BOTH_ACCEPT
    assert decision.vote == -1

    literal = decide_pair(dist0, dist1, theta0=1.0, theta1=1.0, k1=1, paper_literal_tiebreak=True)
    assert literal.vote == 1


def test_tiebreak_both_reject_and_zero_difference():
    dist0 = TreeDistance(per_edge=(3.0, 5.0), min_dist=3.0)
    dist1 = TreeDistance(per_edge=(4.0, 5.0), min_dist=4.0)
    decision = decide_pair(dist0, dist1, theta0=1.0, theta1=1.0, k1=2)
    assert decision.branch is Branch.BOTH_REJECT
    assert decision.vote == 1

    # 差值全为 0 时判为 +1
    same = decide_pair(dist0, dist0, theta0=1.0, theta1=1.0, k1=2)
    assert same.vote == 1


def test_k1_truncated_to_edge_count():
    dist0 = TreeDistance(per_edge=(0.2,), min_dist=0.2)
    dist1 = TreeDistance(per_edge=(0.3, 0.1), min_dist=0.1)
    decision = decide_pair(dist0, dist1, theta0=1.0, theta1=1.0, k1=5)
    # 只比较最近的一条边：0.1 < 0.2
    assert decision.vote == -1


def test_decide_pair_rejects_bad_k1():
    d = TreeDistance(per_edge=(1.0,), min_dist=1.0)
    with pytest.raises(ClassifierError):
        decide_pair(d, d, 1.0, 1.0, k1=0)


def test_totality_and_branch_agreement():
    rng = np.random.default_rng(11)
    for _ in range(300):
        gamma = int(rng.integers(2, 5))
        trees0 = enumerate_spanning_trees(rng.normal(size=(gamma, 3)).tolist())
        trees1 = enumerate_spanning_trees((rng.normal(size=(gamma, 3)) + 1.5).tolist())
        h = trees0[int(rng.integers(len(trees0)))]
        h_prime = trees1[int(rng.integers(len(trees1)))]
        z = rng.normal(size=3) * 2
        alpha = float(rng.uniform())
        decision = classify_pair(h, h_prime, z, alpha, k1=int(rng.integers(1, 4)))

        accept0 = point_to_tree_distance(z, h).min_dist <= tree_threshold(h, alpha)
        accept1 = point_to_tree_distance(z, h_prime).min_dist <= tree_threshold(h_prime, alpha)
        assert decision.vote in (1, -1)
        if accept0 and not accept1:
            assert decision.branch is Branch.ACCEPT0_REJECT1 and decision.vote == 1
        elif accept1 and not accept0:
            assert decision.branch is Branch.REJECT0_ACCEPT1 and decision.vote == -1
        elif accept0:
            assert decision.branch is Branch.BOTH_ACCEPT
        else:
            assert decision.branch is Branch.BOTH_REJECT


@pytest.mark.parametrize(
    "votes,expected", [([1, 1, -1], 1), ([1, -1], 1), ([-1, -1, -1, 1], -1), ([-1], -1)]
)
def test_majority(votes, expected):
    assert majority(votes) == expected


def test_majority_of_nothing():
    with pytest.raises(ClassifierError):
        majority([])


def random_case(rng, gamma=3, dim=3):
    trees0 = enumerate_spanning_trees(rng.normal(size=(gamma, dim)).tolist())
    trees1 = enumerate_spanning_trees((rng.normal(size=(gamma, dim)) + 1.0).tolist())
    h = trees0[int(rng.integers(len(trees0)))]
    h_prime = trees1[int(rng.integers(len(trees1)))]
    return h, h_prime, rng.normal(size=dim) * 1.5


def moved_tree(h, scale=1.0, shift=0.0):
    trees = enumerate_spanning_trees((h.points * scale + shift).tolist())
    return next(t for t in trees if t.edges == h.edges)


def test_translation_leaves_decision_unchanged():
    rng = np.random.default_rng(21)
    for _ in range(500):
        h, h_prime, z = random_case(rng)
        shift = rng.normal(size=3) * 10
        alpha, k1 = float(rng.uniform()), int(rng.integers(1, 3))
        before = classify_pair(h, h_prime, z, alpha, k1)
        after = classify_pair(moved_tree(h, shift=shift), moved_tree(h_prime, shift=shift), z + shift, alpha, k1)
        assert after.vote == before.vote
        assert after.branch is before.branch
        assert after.d0 == pytest.approx(before.d0, rel=1e-9, abs=1e-9)
        assert after.theta1 == pytest.approx(before.theta1, rel=1e-9)


@pytest.mark.parametrize("c", [0.25, 2.0, 8.0])
def test_scaling_scales_distances_and_keeps_vote(c):
    rng = np.random.default_rng(22)
    for _ in range(300):
        h, h_prime, z = random_case(rng)
        alpha, k1 = float(rng.uniform()), int(rng.integers(1, 3))
        before = classify_pair(h, h_prime, z, alpha, k1)
        after = classify_pair(moved_tree(h, scale=c), moved_tree(h_prime, scale=c), z * c, alpha, k1)
        assert after.vote == before.vote
        assert after.branch is before.branch
        for name in ("d0", "d1", "theta0", "theta1"):
            assert getattr(after, name) == pytest.approx(c * getattr(before, name), rel=1e-12)


def test_one_sided_branches_ignore_k1():
    rng = np.random.default_rng(23)
    seen = 0
    for _ in range(500):
        h, h_prime, z = random_case(rng, gamma=4)
        alpha = float(rng.uniform())
        first = classify_pair(h, h_prime, z, alpha, k1=1)
        if first.branch not in (Branch.ACCEPT0_REJECT1, Branch.REJECT0_ACCEPT1):
            continue
        seen += 1
        for k1 in (2, 3, 5):
            again = classify_pair(h, h_prime, z, alpha, k1=k1)
            assert (again.vote, again.branch) == (first.vote, first.branch)
    assert seen > 0


def test_swapping_trees_negates_vote_unless_tied():
    rng = np.random.default_rng(24)
    for _ in range(500):
        h, h_prime, z = random_case(rng)
        alpha, k1 = float(rng.uniform()), int(rng.integers(1, 3))
        decision = classify_pair(h, h_prime, z, alpha, k1)
        swapped = classify_pair(h_prime, h, z, alpha, k1)

        if decision.branch in (Branch.BOTH_ACCEPT, Branch.BOTH_REJECT):
            near0 = sorted(point_to_tree_distance(z, h).per_edge)[:k1]
            near1 = sorted(point_to_tree_distance(z, h_prime).per_edge)[:k1]
            wins = sum(1 for a, b in zip(near0, near1) if b > a)
            losses = sum(1 for a, b in zip(near0, near1) if b < a)
            if wins == losses:
                continue
        assert swapped.vote == -decision.vote
