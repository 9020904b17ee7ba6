"""
数据集读取与划分
读取表格数据、标签归一化为 {+1, -1}，并生成实验协议需要的划分与折
"""

import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from sklearn.model_selection import StratifiedKFold

from spt_graph.core.base_framework import (
    ClassSplit,
    Dataset,
    Instance,
    NEGATIVE,
    POSITIVE,
)
from spt_graph.core.errors import DatasetError


logger = logging.getLogger(__name__)

LABELS = (POSITIVE, NEGATIVE)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _is_number(cell: str) -> bool:
    try:
        float(cell)
        return True
    except (TypeError, ValueError):
        return False


def _read_cells(path) -> pd.DataFrame:
    """按字符串读取全部单元格，空文件返回空表"""
    try:
        frame = pd.read_csv(
            path,
            header=None,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=True,
            skipinitialspace=True,
        )
    except pd.errors.EmptyDataError:
        return pd.DataFrame()
    except pd.errors.ParserError as e:
        raise DatasetError(f"ragged rows in {path}: {e}") from e
    except OSError as e:
        raise DatasetError(f"cannot read {path}: {e}") from e

    # 短行会被补成 NaN
    if frame.isna().to_numpy().any():
        row = int(np.argwhere(frame.isna().to_numpy())[0][0])
        raise DatasetError(f"ragged rows in {path}: row {row} has fewer cells than row 0")
    return frame.apply(lambda col: col.str.strip())


def _resolve_label_column(
    label_column: Union[int, str], header: Optional[List[str]], width: int
) -> int:
    if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
        if header is None or label_column not in header:
            raise DatasetError(f"label column '{label_column}' not found in header")
        return header.index(label_column)

    index = int(label_column)
    if index < 0:
        index += width
    if not 0 <= index < width:
        raise DatasetError(f"label column {label_column} out of range for {width} columns")
    return index


def _has_header(first_row: Sequence[str], label_index: Optional[int]) -> bool:
    """首行在标签列之外存在非数值单元格即视为表头"""
    return any(
        not _is_number(cell) for i, cell in enumerate(first_row) if i != label_index
    )


def _to_float(cell: str) -> float:
    # 内置 float 逐位精确，pandas 的快速解析会丢失末位
    try:
        return float(cell)
    except (TypeError, ValueError):
        return math.nan


def _parse_features(frame: pd.DataFrame, columns: List[int], path, row_offset: int) -> np.ndarray:
    values = frame.iloc[:, columns].apply(lambda col: col.map(_to_float)).to_numpy(dtype=float)
    bad = ~np.isfinite(values)
    if bad.any():
        row, col = (int(v) for v in np.argwhere(bad)[0])
        raw = frame.iat[row, columns[col]]
        kind = "non-numeric feature cell" if not _is_number(raw) or raw == "" else "non-finite feature cell"
        raise DatasetError(
            f"{kind} at row {row + row_offset}, column {columns[col]}: '{raw}' ({path})"
        )
    return values


def load_csv(
    path,
    label_column: Union[int, str] = -1,
    positive_label: str = "1",
    name: Optional[str] = None,
) -> Dataset:
    """
    读取 CSV 数据集

    Args:
        path: 文件路径
        label_column: 标签列下标（支持负数）或表头名
        positive_label: 原始标签等于该值时记为 +1，其余记为 -1
        name: 数据集名称，默认取文件名
    """
    frame = _read_cells(path)
    if frame.empty:
        raise DatasetError(f"empty dataset file {path}")

    width = frame.shape[1]
    first_row = list(frame.iloc[0])

    # 标签列按名称指定时必然存在表头
    by_name = isinstance(label_column, str) and not label_column.lstrip("-").isdigit()
    if by_name:
        header = first_row
        label_index = _resolve_label_column(label_column, header, width)
    else:
        label_index = _resolve_label_column(label_column, None, width)
        header = first_row if _has_header(first_row, label_index) else None

    body = frame.iloc[1:] if header is not None else frame
    if body.empty:
        raise DatasetError(f"no data rows in {path}")
    if width < 2:
        raise DatasetError(f"{path} needs at least one feature column besides the label")

    feature_columns = [i for i in range(width) if i != label_index]
    row_offset = 1 if header is not None else 0
    values = _parse_features(body, feature_columns, path, row_offset)
    raw_labels = body.iloc[:, label_index].tolist()

    instances = tuple(
        Instance(
            id=i,
            features=tuple(float(v) for v in values[i]),
            label=POSITIVE if raw_labels[i] == str(positive_label) else NEGATIVE,
        )
        for i in range(len(raw_labels))
    )
    dataset_name = name or Path(path).name
    dataset = Dataset(instances=instances, feature_count=len(feature_columns), name=dataset_name)
    _require_both_classes(dataset, f"dataset with a single class ({path})")

    counts = dataset.label_counts()
    logger.debug(f"读取 {dataset_name}: {len(dataset)} 条, 正类 {counts[POSITIVE]}, 负类 {counts[NEGATIVE]}")
    return dataset


def load_features_csv(path, feature_count: int, label_column: Union[int, str, None] = None) -> List[Tuple[float, ...]]:
    """
    读取待分类样本：每行仅含特征，或含特征加一个被忽略的标签列

    空文件返回空列表
    """
    frame = _read_cells(path)
    if frame.empty:
        return []

    width = frame.shape[1]
    drop_index = None
    if width == feature_count + 1 and label_column is not None:
        drop_index = _resolve_label_column(label_column, list(frame.iloc[0]), width)
    elif width != feature_count:
        raise DatasetError(
            f"feature dimension mismatch in {path}: expected m={feature_count}, found m={width}"
        )

    columns = [i for i in range(width) if i != drop_index]
    header = _has_header(list(frame.iloc[0]), drop_index)
    body = frame.iloc[1:] if header else frame
    if body.empty:
        return []
    values = _parse_features(body, columns, path, 1 if header else 0)
    return [tuple(float(v) for v in row) for row in values]


def save_csv(dataset: Dataset, path, header: bool = False):
    """以全精度写回 CSV，标签列在最后，取值 1 / -1"""
    rows = [[repr(v) for v in x.features] + [str(x.label)] for x in dataset.instances]
    columns = [f"a{i}" for i in range(dataset.feature_count)] + ["label"]
    pd.DataFrame(rows, columns=columns).to_csv(path, index=False, header=header, lineterminator="\n")


def _require_both_classes(dataset: Dataset, message: str):
    counts = dataset.label_counts()
    if counts[POSITIVE] == 0 or counts[NEGATIVE] == 0:
        raise DatasetError(message)


def _subset(d: Dataset, ids, suffix: str) -> Dataset:
    wanted = set(ids)
    return Dataset(
        instances=tuple(x for x in d.instances if x.id in wanted),
        feature_count=d.feature_count,
        name=f"{d.name}{suffix}",
    )


def _class_ids(d: Dataset, label: int) -> np.ndarray:
    return np.asarray(sorted(x.id for x in d.instances if x.label == label), dtype=np.int64)


def split_train_test(d: Dataset, train_ratio: float, seed: int) -> Tuple[Dataset, Dataset]:
    """分层随机划分训练/测试集，给定 seed 结果确定"""
    if not 0.0 < train_ratio < 1.0:
        raise DatasetError(f"train_ratio must lie in (0, 1), got {train_ratio}")

    rng = np.random.default_rng(seed)
    train_ids: List[int] = []
    for label in LABELS:
        ids = _class_ids(d, label)
        n_train = _round_half_up(train_ratio * len(ids))
        if n_train == 0 or n_train == len(ids):
            side = "train" if n_train == 0 else "test"
            raise DatasetError(
                f"train_ratio {train_ratio} leaves class {label:+d} empty on the {side} side"
            )
        train_ids.extend(int(i) for i in ids[rng.permutation(len(ids))[:n_train]])

    train_set = set(train_ids)
    test_ids = [x.id for x in d.instances if x.id not in train_set]
    return _subset(d, train_ids, "[train]"), _subset(d, test_ids, "[test]")


def kfold(d: Dataset, k: int, seed: int) -> List[Tuple[Dataset, Dataset]]:
    """分层 k 折，每个实例恰好出现在一个测试折中"""
    if k < 2:
        raise DatasetError(f"k must be at least 2, got {k}")
    counts = d.label_counts()
    # 至多允许一个测试折缺少某个类别
    for label in LABELS:
        if counts[label] < k - 1:
            raise DatasetError(
                f"class {label:+d} has {counts[label]} members, fewer than k-1={k - 1} for k={k}"
            )

    ordered = sorted(d.instances, key=lambda x: x.id)
    ids = np.asarray([x.id for x in ordered])
    labels = np.asarray([x.label for x in ordered])

    splitter = StratifiedKFold(n_splits=k, shuffle=True, random_state=seed)
    folds = []
    for i, (train_idx, test_idx) in enumerate(splitter.split(np.zeros(len(ids)), labels)):
        folds.append(
            (
                _subset(d, ids[train_idx].tolist(), f"[fold{i}:train]"),
                _subset(d, ids[test_idx].tolist(), f"[fold{i}:test]"),
            )
        )
    return folds


def _allocate(total: int, sizes: Dict[int, int]) -> Dict[int, int]:
    """最大余数法按类别比例分配 total 个名额，余数相同时正类优先"""
    n = sum(sizes.values())
    quotas = {label: total * sizes[label] / n for label in LABELS}
    alloc = {label: int(math.floor(quotas[label])) for label in LABELS}
    remainder = total - sum(alloc.values())
    order = sorted(LABELS, key=lambda label: (-(quotas[label] - alloc[label]), -label))
    for label in order[:remainder]:
        alloc[label] += 1
    return alloc


def make_class_split(train: Dataset, s_fraction: float, seed: int) -> ClassSplit:
    """
    从训练集中分层抽取探针集 S，其余按标签拆成 x0 (+1) 与 x1 (-1)
    """
    if not 0.0 < s_fraction <= 1.0:
        raise DatasetError(f"s_fraction must lie in (0, 1], got {s_fraction}")

    sizes = train.label_counts()
    total = _round_half_up(s_fraction * len(train))
    alloc = _allocate(total, sizes)

    rng = np.random.default_rng(seed)
    sample_ids = set()
    for label in LABELS:
        ids = _class_ids(train, label)
        chosen = ids[rng.permutation(len(ids))[: alloc[label]]]
        sample_ids.update(int(i) for i in chosen)

    ordered = sorted(train.instances, key=lambda x: x.id)
    s = tuple(x for x in ordered if x.id in sample_ids)
    x0 = tuple(x for x in ordered if x.id not in sample_ids and x.label == POSITIVE)
    x1 = tuple(x for x in ordered if x.id not in sample_ids and x.label == NEGATIVE)
    if not x0 or not x1:
        raise DatasetError(
            f"s_fraction {s_fraction} strips a class below usable size (|x0|={len(x0)}, |x1|={len(x1)})"
        )
    return ClassSplit(x0=x0, x1=x1, s=s)


def minmax_scale(train: Dataset, *others: Dataset) -> Tuple[Dataset, ...]:
    """按训练集拟合的最小最大值缩放所有数据集，常数列映射为 0"""
    matrix = np.asarray([x.features for x in train.instances], dtype=float)
    lo = matrix.min(axis=0)
    span = matrix.max(axis=0) - lo
    safe = np.where(span > 0, span, 1.0)

    def _apply(d: Dataset) -> Dataset:
        if not d.instances:
            return d
        values = (np.asarray([x.features for x in d.instances], dtype=float) - lo) / safe
        values[:, span == 0] = 0.0
        return Dataset(
            instances=tuple(
                Instance(id=x.id, features=tuple(float(v) for v in row), label=x.label)
                for x, row in zip(d.instances, values)
            ),
            feature_count=d.feature_count,
            name=d.name,
        )

    return tuple(_apply(d) for d in (train, *others))
