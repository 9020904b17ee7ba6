"""
评估与实验协议
混淆矩阵指标、ROC/AUC、k 折交叉验证、训练比例扫描与参数网格搜索
"""

import itertools
import logging
import math
import time
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import ValidationError
from scipy.stats import rankdata
from sklearn import metrics

from spt_graph.core.async_processor import ParallelProcessor
from spt_graph.core.base_framework import (
    METRIC_NAMES,
    ConfusionMatrix,
    Dataset,
    GridSection,
    HyperParams,
    InstancePool,
    MetricReport,
    NEGATIVE,
    POSITIVE,
)
from spt_graph.core.dataset import kfold, make_class_split, minmax_scale, split_train_test
from spt_graph.core.errors import EvaluationError, SptGraphError
from spt_graph.core.inference import classify_batch
from spt_graph.core.monitoring import RunMonitor
from spt_graph.core.training import nearest_indices, train
from spt_graph.utils import log
from spt_graph.utils.utils import format_real


logger = logging.getLogger(__name__)

Score = Tuple[float, int]


# ==================== 指标 ====================


def confusion_matrix(y_true: Sequence[int], y_pred: Sequence[int]) -> ConfusionMatrix:
    if len(y_true) != len(y_pred):
        raise EvaluationError(f"label count mismatch: {len(y_true)} vs {len(y_pred)}")
    if len(y_true) == 0:
        return ConfusionMatrix()
    tn, fp, fn, tp = metrics.confusion_matrix(y_true, y_pred, labels=[NEGATIVE, POSITIVE]).ravel()
    return ConfusionMatrix(tp=int(tp), fp=int(fp), tn=int(tn), fn=int(fn))


def _ratio(num: float, den: float) -> Optional[float]:
    # 0/0 记为未定义
    return num / den if den else None


def compute_metrics(cm: ConfusionMatrix) -> MetricReport:
    """由混淆矩阵计算 accuracy / sensitivity / specificity / precision / f1"""
    if cm.total == 0:
        raise EvaluationError("empty confusion matrix")

    sensitivity = _ratio(cm.tp, cm.tp + cm.fn)
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    if sensitivity is None or precision is None:
        f1 = None
    else:
        f1 = _ratio(2 * precision * sensitivity, precision + sensitivity)

    return MetricReport(
        accuracy=(cm.tp + cm.tn) / cm.total,
        sensitivity=sensitivity,
        specificity=_ratio(cm.tn, cm.tn + cm.fp),
        precision=precision,
        f1=f1,
    )


def roc_auc(scores: Sequence[Score]) -> Tuple[float, Tuple[Tuple[float, float], ...]]:
    """
    AUC 取 Mann–Whitney 统计量（得分相同计 1/2），并返回阶梯 ROC 曲线顶点

    Args:
        scores: (得分, 标签 ±1) 序列
    """
    values = np.asarray([s for s, _ in scores], dtype=float)
    labels = np.asarray([y for _, y in scores])
    positives = int(np.sum(labels == POSITIVE))
    negatives = int(np.sum(labels == NEGATIVE))
    if positives == 0 or negatives == 0:
        raise EvaluationError("ROC needs at least one positive and one negative score")

    # 平均秩处理并列
    ranks = rankdata(values)
    u_statistic = float(np.sum(ranks[labels == POSITIVE])) - positives * (positives + 1) / 2
    auc = u_statistic / (positives * negatives)

    # 保留每个不同得分处的顶点，首点为 (0, 0)
    fpr, tpr, _ = metrics.roc_curve(labels, values, pos_label=POSITIVE, drop_intermediate=False)
    return auc, tuple((float(x), float(y)) for x, y in zip(fpr, tpr))


def trapezoid_area(points: Sequence[Tuple[float, float]]) -> float:
    """ROC 顶点折线下的梯形面积"""
    return math.fsum(
        (x1 - x0) * (y0 + y1) / 2 for (x0, y0), (x1, y1) in zip(points, points[1:])
    )


# ==================== k-NN 基线 ====================


class KnnBaseline:
    """普通 k 近邻基线：k 个最近训练样本中正类占比作为得分，占比 ≥ 1/2 判为 +1"""

    def __init__(self, k: int = 5):
        if k < 1:
            raise EvaluationError(f"k must be at least 1, got {k}")
        self.k = k
        self.pool: Optional[InstancePool] = None

    def fit(self, train_set: Dataset) -> "KnnBaseline":
        self.pool = InstancePool(train_set.instances)
        return self

    def predict_scores(self, zs: Sequence[Sequence[float]]) -> List[float]:
        if self.pool is None:
            raise EvaluationError("KnnBaseline used before fit")
        labels = np.asarray([x.label for x in self.pool.instances])
        scores = []
        for z in zs:
            idx = nearest_indices(z, self.pool, self.k)
            scores.append(float(np.mean(labels[idx] == POSITIVE)))
        return scores


def knn_predict(train_set: Dataset, zs: Sequence[Sequence[float]], k: int = 5) -> List[int]:
    scores = KnnBaseline(k).fit(train_set).predict_scores(zs)
    return [POSITIVE if s >= 0.5 else NEGATIVE for s in scores]


# ==================== 单次划分评估 ====================


@dataclass(frozen=True)
class FoldResult:
    index: int
    size: int
    cm: ConfusionMatrix = field(default_factory=ConfusionMatrix)
    report: Optional[MetricReport] = None
    scores: Tuple[Score, ...] = ()
    error: Optional[str] = None
    # 耗时不参与比较，重复运行的结果仍然相等
    train_seconds: float = field(default=0.0, compare=False)

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class EvaluationSettings:
    classifier: str = "spt_cd"
    knn_k: int = 5
    scale: bool = False
    jobs: int = 1


def _predict(train_set: Dataset, test_set: Dataset, params: HyperParams, settings: EvaluationSettings):
    """返回 (预测标签, 得分, 训练耗时秒数)"""
    zs = [x.features for x in test_set.instances]
    start = time.perf_counter()
    if settings.classifier == "knn":
        baseline = KnnBaseline(settings.knn_k).fit(train_set)
        seconds = time.perf_counter() - start
        scores = baseline.predict_scores(zs)
        labels = [POSITIVE if s >= 0.5 else NEGATIVE for s in scores]
        return labels, scores, seconds

    split = make_class_split(train_set, params.s_fraction, params.seed)
    model = train(split, params, jobs=settings.jobs)
    seconds = time.perf_counter() - start
    predictions = classify_batch(zs, model, jobs=settings.jobs)
    return [p.label for p in predictions], [p.vote_share for p in predictions], seconds


def evaluate_split(
    index: int,
    train_set: Dataset,
    test_set: Dataset,
    params: HyperParams,
    settings: EvaluationSettings = EvaluationSettings(),
) -> FoldResult:
    """在一组训练/测试划分上训练并评估，模块内错误记入结果而不抛出"""
    try:
        if settings.scale:
            train_set, test_set = minmax_scale(train_set, test_set)
        y_pred, y_score, seconds = _predict(train_set, test_set, params, settings)
        y_true = [x.label for x in test_set.instances]
        cm = confusion_matrix(y_true, y_pred)
        report = compute_metrics(cm)
        scores = tuple(zip(y_score, y_true))
        try:
            auc, points = roc_auc(scores)
            report = replace(report, auc=auc, roc_points=points)
        except EvaluationError:
            pass
        return FoldResult(
            index=index, size=len(test_set), cm=cm, report=report, scores=scores, train_seconds=seconds
        )
    except SptGraphError as e:
        log.print_log(f"第 {index} 组评估失败: {e}", "warning")
        return FoldResult(index=index, size=len(test_set), error=str(e))


def _run_fold(item, params: HyperParams, settings: EvaluationSettings) -> FoldResult:
    index, (train_set, test_set) = item
    return evaluate_split(index, train_set, test_set, params, settings)


# ==================== 交叉验证 ====================


@dataclass(frozen=True)
class CrossValidationReport:
    dataset: str
    folds: Tuple[FoldResult, ...]
    mean: Dict[str, Optional[float]]
    minimum: Dict[str, Optional[float]]
    maximum: Dict[str, Optional[float]]
    pooled: MetricReport


def _reduce(values: List[Optional[float]]):
    # 排序后求和，结果与折的顺序无关
    defined = sorted(v for v in values if v is not None)
    if not defined:
        return None, None, None
    return math.fsum(defined) / len(defined), defined[0], defined[-1]


def aggregate(dataset_name: str, folds: Sequence[FoldResult]) -> CrossValidationReport:
    """汇总各折：每个指标的均值、最小值、最大值，以及合并混淆矩阵上的总体指标"""
    good = [f for f in folds if f.ok]
    if not good:
        raise EvaluationError(f"every fold failed for {dataset_name}")

    mean, minimum, maximum = {}, {}, {}
    for name in METRIC_NAMES:
        mean[name], minimum[name], maximum[name] = _reduce([getattr(f.report, name) for f in good])

    total = ConfusionMatrix()
    for f in good:
        total = total + f.cm
    pooled = compute_metrics(total)
    all_scores = [s for f in good for s in f.scores]
    try:
        auc, points = roc_auc(all_scores)
        pooled = replace(pooled, auc=auc, roc_points=points)
    except EvaluationError:
        pass

    return CrossValidationReport(
        dataset=dataset_name,
        folds=tuple(folds),
        mean=mean,
        minimum=minimum,
        maximum=maximum,
        pooled=pooled,
    )


def cross_validate(
    d: Dataset,
    params: HyperParams,
    k: int = 5,
    settings: EvaluationSettings = EvaluationSettings(),
) -> CrossValidationReport:
    """
    k 折交叉验证：每折在训练侧构造探针划分并训练，在测试侧评估
    """
    folds = kfold(d, k, params.seed)
    # 折之间并行时折内串行
    inner = EvaluationSettings(settings.classifier, settings.knn_k, settings.scale, jobs=1)
    processor = ParallelProcessor(settings.jobs, name="cross_validate")
    results = processor.map(partial(_run_fold, params=params, settings=inner), list(enumerate(folds)))
    # 子进程里的计时不会回传，这里按折补记
    monitor = RunMonitor.get_instance()
    for f in results:
        monitor.record(f"cv:fold={f.index}:train", f.train_seconds, f.ok)

    report = aggregate(d.name, results)
    log.print_log(
        f"{d.name}: {k} 折平均准确率 {format_real(report.mean['accuracy'])}", "info"
    )
    return report


# ==================== 训练比例扫描 ====================


@dataclass(frozen=True)
class SweepRow:
    ratio: float
    mean: Optional[float]
    minimum: Optional[float]
    maximum: Optional[float]
    repeats: int
    error: Optional[str] = None
    train_seconds: Tuple[float, ...] = field(default=(), compare=False)


def _sweep_point(ratio: float, d: Dataset, params: HyperParams, repeats: int, settings: EvaluationSettings) -> SweepRow:
    accuracies, seconds = [], []
    try:
        for r in range(repeats):
            train_set, test_set = split_train_test(d, ratio, params.seed + r)
            result = evaluate_split(r, train_set, test_set, params, settings)
            if not result.ok:
                raise EvaluationError(result.error)
            accuracies.append(result.report.accuracy)
            seconds.append(result.train_seconds)
    except SptGraphError as e:
        log.print_log(f"训练比例 {ratio} 评估失败: {e}", "warning")
        return SweepRow(
            ratio=ratio, mean=None, minimum=None, maximum=None, repeats=repeats, error=str(e),
            train_seconds=tuple(seconds),
        )

    mean, lo, hi = _reduce(accuracies)
    return SweepRow(
        ratio=ratio, mean=mean, minimum=lo, maximum=hi, repeats=repeats, train_seconds=tuple(seconds)
    )


def train_ratio_sweep(
    d: Dataset,
    params: HyperParams,
    ratios: Sequence[float],
    repeats: int = 5,
    settings: EvaluationSettings = EvaluationSettings(),
) -> List[SweepRow]:
    """每个训练比例做 repeats 次带种子的随机划分，输出准确率的均值与上下界"""
    if not ratios:
        raise EvaluationError("ratios list is empty")
    inner = EvaluationSettings(settings.classifier, settings.knn_k, settings.scale, jobs=1)
    processor = ParallelProcessor(settings.jobs, name="train_ratio_sweep")
    rows = processor.map(
        partial(_sweep_point, d=d, params=params, repeats=repeats, settings=inner), list(ratios)
    )

    monitor = RunMonitor.get_instance()
    for row in rows:
        for s in row.train_seconds:
            monitor.record(f"sweep:ratio={format_real(row.ratio)}:train", s)
    return rows


# ==================== 网格搜索 ====================


@dataclass(frozen=True)
class GridRow:
    overrides: Dict[str, object]
    mean_accuracy: Optional[float]
    pooled_auc: Optional[float]
    error: Optional[str] = None


@dataclass(frozen=True)
class GridResult:
    rows: Tuple[GridRow, ...]
    best: Optional[GridRow]


def grid_search(
    d: Dataset,
    base_params: HyperParams,
    grid: GridSection,
    k: int = 5,
    settings: EvaluationSettings = EvaluationSettings(),
) -> GridResult:
    """参数网格的笛卡尔积逐一做 k 折交叉验证，平均准确率最高者胜出（并列取先出现者）"""
    names = list(GridSection.model_fields.keys())
    values = [getattr(grid, name) for name in names]

    rows = []
    for combo in itertools.product(*values):
        overrides = dict(zip(names, combo))
        logger.debug(f"网格组合: {overrides}")
        try:
            params = HyperParams.model_validate({**base_params.model_dump(), **overrides})
            report = cross_validate(d, params, k, settings)
            rows.append(GridRow(overrides, report.mean["accuracy"], report.pooled.auc))
        except ValidationError as e:
            rows.append(GridRow(overrides, None, None, error=f"[config] {e.errors()[0]['msg']}"))
        except SptGraphError as e:
            rows.append(GridRow(overrides, None, None, error=str(e)))

    best = None
    for row in rows:
        if row.mean_accuracy is not None and (best is None or row.mean_accuracy > best.mean_accuracy):
            best = row
    return GridResult(rows=tuple(rows), best=best)


# ==================== 报告输出 ====================


def _write_csv(rows: List[Dict[str, str]], columns: List[str], path, sep=","):
    pd.DataFrame(rows, columns=columns).to_csv(path, index=False, sep=sep, lineterminator="\n")


def write_fold_report(report: CrossValidationReport, path):
    """每折一行，外加 mean / min / max / pooled 汇总行"""
    columns = ["dataset", "fold", *METRIC_NAMES, "error"]
    rows = []
    for f in report.folds:
        row = {"dataset": report.dataset, "fold": str(f.index), "error": f.error or ""}
        for name in METRIC_NAMES:
            row[name] = format_real(getattr(f.report, name)) if f.ok else ""
        rows.append(row)
    for label, values in (("mean", report.mean), ("min", report.minimum), ("max", report.maximum)):
        rows.append(
            {"dataset": report.dataset, "fold": label, "error": "",
             **{name: format_real(values[name]) for name in METRIC_NAMES}}
        )
    rows.append(
        {"dataset": report.dataset, "fold": "pooled", "error": "",
         **{name: format_real(getattr(report.pooled, name)) for name in METRIC_NAMES}}
    )
    _write_csv(rows, columns, path)


def write_roc_points(points: Sequence[Tuple[float, float]], path):
    _write_csv(
        [{"fpr": format_real(x), "tpr": format_real(y)} for x, y in points], ["fpr", "tpr"], path, sep="\t"
    )


def write_sweep_report(dataset_name: str, rows: Sequence[SweepRow], path):
    columns = ["dataset", "ratio", "mean", "min", "max", "error"]
    _write_csv(
        [
            {
                "dataset": dataset_name,
                "ratio": format_real(r.ratio),
                "mean": format_real(r.mean),
                "min": format_real(r.minimum),
                "max": format_real(r.maximum),
                "error": r.error or "",
            }
            for r in rows
        ],
        columns,
        path,
    )


def write_grid_report(dataset_name: str, result: GridResult, path):
    names = list(GridSection.model_fields.keys())
    columns = ["dataset", *names, "mean_accuracy", "pooled_auc", "best", "error"]
    rows = []
    for r in result.rows:
        row = {name: str(r.overrides[name]) for name in names}
        row.update(
            dataset=dataset_name,
            mean_accuracy=format_real(r.mean_accuracy),
            pooled_auc=format_real(r.pooled_auc),
            best="1" if r is result.best else "0",
            error=r.error or "",
        )
        rows.append(row)
    _write_csv(rows, columns, path)
