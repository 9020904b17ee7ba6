# -*- coding: UTF-8 -*-
import json

import numpy as np
import pytest

from conftest import make_blobs
from spt_graph.core.base_framework import Dataset, HyperParams, Instance
from spt_graph.core.dataset import make_class_split
from spt_graph.core.errors import ModelFormatError, TrainingError
from spt_graph.core.spt_cd import classify_pair
from spt_graph.core.training import (
    gamma_neighbourhood,
    load_model,
    save_model,
    summarize_model,
    train,
)
from spt_graph.core.trees import enumerate_spanning_trees


def overlapping(n_per_class=25, seed=5) -> Dataset:
    rng = np.random.default_rng(seed)
    pos = rng.normal(size=(n_per_class, 2))
    neg = rng.normal(size=(n_per_class, 2)) + 1.0
    rows = [(p, 1) for p in pos] + [(q, -1) for q in neg]
    return Dataset(
        instances=tuple(
            Instance(id=i, features=tuple(float(v) for v in row), label=label)
            for i, (row, label) in enumerate(rows)
        ),
        feature_count=2,
    )


def brute_neighbourhood(s, pool, gamma):
    others = [x for x in pool if x.id != s.id]
    others.sort(key=lambda x: (float(np.linalg.norm(np.subtract(x.features, s.features))), x.id))
    return others[:gamma]


def brute_survivors(s, x0, x1, params):
    """逐对重新计数投票正确性，得到两类保留的树"""
    n0 = brute_neighbourhood(s, x0, params.gamma)
    n1 = brute_neighbourhood(s, x1, params.gamma)
    trees0 = enumerate_spanning_trees([x.features for x in n0], [x.id for x in n0])
    trees1 = enumerate_spanning_trees([x.features for x in n1], [x.id for x in n1])
    c0 = [0] * len(trees0)
    c1 = [0] * len(trees1)
    for i, h in enumerate(trees0):
        for j, h_prime in enumerate(trees1):
            vote = classify_pair(h, h_prime, s.features, params.boundary_alpha, params.k1).vote
            delta = 1 if vote == s.label else -1
            c0[i] += delta
            c1[j] += delta
    keep0 = {(t.node_ids, t.edges) for t, c in zip(trees0, c0) if c >= 0}
    keep1 = {(t.node_ids, t.edges) for t, c in zip(trees1, c1) if c >= 0}
    return keep0, keep1


def as_keys(records):
    return {(r.tree.node_ids, r.tree.edges) for r in records}


# ==================== 近邻 ====================


def test_gamma_neighbourhood_orders_by_distance():
    s = Instance(id=100, features=(0.0,), label=1)
    pool = [Instance(0, (1.0,), 1), Instance(1, (-2.0,), 1), Instance(2, (3.0,), 1)]
    assert [x.id for x in gamma_neighbourhood(s, pool, 2)] == [0, 1]
    assert {x.id for x in gamma_neighbourhood(s, pool, 3)} == {0, 1, 2}


def test_gamma_neighbourhood_ties_by_id():
    s = Instance(id=100, features=(0.0, 0.0), label=1)
    pool = [Instance(5, (1.0, 0.0), 1), Instance(3, (-1.0, 0.0), 1)]
    assert [x.id for x in gamma_neighbourhood(s, pool, 1)] == [3]


def test_gamma_neighbourhood_excludes_owner():
    s = Instance(id=0, features=(0.0,), label=1)
    pool = [s, Instance(1, (5.0,), 1), Instance(2, (6.0,), 1)]
    assert [x.id for x in gamma_neighbourhood(s, pool, 2)] == [1, 2]
    with pytest.raises(TrainingError, match="smaller than gamma"):
        gamma_neighbourhood(s, pool, 3)


# ==================== 训练 ====================


def test_survivors_match_brute_force_recount():
    params = HyperParams(gamma=3, k1=2)
    split = make_class_split(overlapping(), 0.2, seed=3)
    model = train(split, params)
    assert sorted(model.zeta0) == sorted(x.id for x in split.s)
    for s in split.s:
        keep0, keep1 = brute_survivors(s, split.x0, split.x1, params)
        assert as_keys(model.zeta0[s.id]) == keep0
        assert as_keys(model.zeta1[s.id]) == keep1


def test_gamma2_single_pair_decides():
    params = HyperParams(gamma=2, k1=1)
    split = make_class_split(overlapping(seed=9), 0.2, seed=0)
    model = train(split, params)
    for s in split.s:
        n0 = brute_neighbourhood(s, split.x0, 2)
        n1 = brute_neighbourhood(s, split.x1, 2)
        h = enumerate_spanning_trees([x.features for x in n0], [x.id for x in n0])[0]
        h_prime = enumerate_spanning_trees([x.features for x in n1], [x.id for x in n1])[0]
        correct = classify_pair(h, h_prime, s.features, 0.5, 1).vote == s.label
        assert len(model.zeta0[s.id]) == len(model.zeta1[s.id]) == (1 if correct else 0)


def test_blob_model_keeps_trees_for_every_owner(blobs):
    params = HyperParams(gamma=3)
    split = make_class_split(blobs, 0.2, seed=0)
    model = train(split, params)
    for s in split.s:
        own = model.zeta0 if s.label == 1 else model.zeta1
        assert len(own[s.id]) > 0


def test_records_span_owner_neighbourhood(blobs):
    params = HyperParams(gamma=4)
    split = make_class_split(blobs, 0.2, seed=2)
    model = train(split, params)
    for s in split.s:
        expected0 = {x.id for x in gamma_neighbourhood(s, split.x0, 4)}
        expected1 = {x.id for x in gamma_neighbourhood(s, split.x1, 4)}
        assert all(set(r.tree.node_ids) == expected0 for r in model.zeta0[s.id])
        assert all(set(r.tree.node_ids) == expected1 for r in model.zeta1[s.id])
        distances = [r.dist_to_owner for r in model.zeta0[s.id]]
        assert distances == sorted(distances)


def test_train_rejects_small_pools():
    d = make_blobs(n_per_class=4)
    split = make_class_split(d, 0.25, seed=0)
    with pytest.raises(TrainingError, match="smaller than gamma"):
        train(split, HyperParams(gamma=4))


def test_parallel_training_matches_serial(blobs):
    params = HyperParams(gamma=3)
    split = make_class_split(blobs, 0.2, seed=0)
    assert train(split, params, jobs=2) == train(split, params, jobs=1)


def test_summarize_model(blobs):
    split = make_class_split(blobs, 0.2, seed=0)
    model = train(split, HyperParams(gamma=3))
    summary = summarize_model(model)
    assert summary.owner_count == len(split.s)
    assert summary.zeta0.total == sum(len(v) for v in model.zeta0.values())
    assert summary.zeta0.minimum <= summary.zeta0.mean <= summary.zeta0.maximum <= 3


# ==================== 持久化 ====================


@pytest.fixture
def blob_model(blobs):
    return train(make_class_split(blobs, 0.2, seed=0), HyperParams(gamma=3))


def test_model_round_trip(tmp_path, blob_model):
    path = tmp_path / "model.json"
    save_model(blob_model, path)
    assert load_model(path) == blob_model


def test_model_files_are_byte_identical(tmp_path, blobs, blob_model):
    again = train(make_class_split(blobs, 0.2, seed=0), HyperParams(gamma=3))
    save_model(blob_model, tmp_path / "a.json")
    save_model(again, tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_load_rejects_bad_magic_and_version(tmp_path, blob_model):
    path = tmp_path / "model.json"
    save_model(blob_model, path)
    doc = json.loads(path.read_text(encoding="utf-8"))

    doc["magic"] = "something-else"
    path.write_text(json.dumps(doc), encoding="utf-8")
    with pytest.raises(ModelFormatError, match="bad magic"):
        load_model(path)

    doc["magic"] = "spt_graph-model"
    doc["schema_version"] = 99
    path.write_text(json.dumps(doc), encoding="utf-8")
    with pytest.raises(ModelFormatError, match="schema version mismatch"):
        load_model(path)


def test_load_rejects_malformed_tree(tmp_path, blob_model):
    path = tmp_path / "model.json"
    save_model(blob_model, path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    owner = next(k for k, v in doc["zeta0"].items() if v)
    doc["zeta0"][owner][0]["edges"] = [[0, 1], [0, 1]]
    path.write_text(json.dumps(doc), encoding="utf-8")
    with pytest.raises(ModelFormatError, match="not a spanning tree"):
        load_model(path)


def test_load_rejects_invalid_json(tmp_path):
    path = tmp_path / "model.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ModelFormatError):
        load_model(path)


def test_load_rejects_owner_with_bad_label(tmp_path, blob_model):
    path = tmp_path / "model.json"
    save_model(blob_model, path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    doc["owners"][0]["label"] = 0
    path.write_text(json.dumps(doc), encoding="utf-8")
    with pytest.raises(ModelFormatError, match="label must be"):
        load_model(path)
