# -*- coding: UTF-8 -*-
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
SRC = ROOT / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))

from spt_graph.config.config import Config  # noqa: E402
from spt_graph.core.base_framework import Dataset, HyperParams, Instance  # noqa: E402
from spt_graph.utils import log  # noqa: E402


def make_blobs(n_per_class=20, radius=1.0, separation=10.0, seed=0) -> Dataset:
    """两个二维高斯团，中心相距 separation × radius"""
    rng = np.random.default_rng(seed)
    pos = rng.normal(0.0, radius / 3, size=(n_per_class, 2))
    neg = rng.normal(0.0, radius / 3, size=(n_per_class, 2)) + np.array([separation * radius, 0.0])
    instances = [Instance(id=i, features=tuple(float(v) for v in row), label=1) for i, row in enumerate(pos)]
    instances += [
        Instance(id=n_per_class + i, features=tuple(float(v) for v in row), label=-1)
        for i, row in enumerate(neg)
    ]
    return Dataset(instances=tuple(instances), feature_count=2, name="blobs")


def write_rows(path, rows):
    path.write_text("\n".join(",".join(str(c) for c in row) for row in rows) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def blobs() -> Dataset:
    return make_blobs()


@pytest.fixture
def blobs_csv(tmp_path, blobs):
    rows = [[*x.features, x.label] for x in blobs.instances]
    return write_rows(tmp_path / "blobs.csv", rows)


@pytest.fixture
def params() -> HyperParams:
    return HyperParams()


@pytest.fixture(autouse=True)
def _isolate_singletons():
    Config.get_instance().reset()
    log.init_cli_mode(None)
    yield
    Config.get_instance().reset()
    log.init_cli_mode(None)
