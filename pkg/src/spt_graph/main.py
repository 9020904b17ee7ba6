#!/usr/bin/python
# -*- coding: UTF-8 -*-

"""
命令行入口
子命令：train / classify / evaluate / sweep / grid
退出码：0 成功，1 运行错误，2 用法错误
"""

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from rich.console import Console
from rich.table import Table

from spt_graph import __version__
from spt_graph.config.config import Config
from spt_graph.core.base_framework import METRIC_NAMES, Objective, RunConfig
from spt_graph.core.dataset import load_csv, load_features_csv, make_class_split
from spt_graph.core.errors import ConfigError, SptGraphError
from spt_graph.core.evaluation import (
    CrossValidationReport,
    EvaluationSettings,
    cross_validate,
    grid_search,
    train_ratio_sweep,
    write_fold_report,
    write_grid_report,
    write_roc_points,
    write_sweep_report,
)
from spt_graph.core.inference import classify_batch
from spt_graph.core.monitoring import RunMonitor
from spt_graph.core.training import load_model, save_model, summarize_model, train
from spt_graph.utils import log
from spt_graph.utils.path_manager import PathManager
from spt_graph.utils.utils import file_sha256, format_real


EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

console = Console()


class UsageError(Exception):
    pass


# ==================== 参数解析 ====================


def _label_column(text: str):
    return int(text) if text.lstrip("-").isdigit() else text


def _ratios(text: str) -> List[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _common_parser() -> argparse.ArgumentParser:
    # 所有参数默认 None，表示沿用配置文件中的值
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="YAML / JSON 配置文件")
    parent.add_argument("--dataset", help="CSV 数据集路径")
    parent.add_argument("--label-col", dest="label_col", type=_label_column)
    parent.add_argument("--positive-label", dest="positive_label")
    parent.add_argument("--scale", action="store_true", default=None)
    parent.add_argument("--gamma", type=int)
    parent.add_argument("--boundary-alpha", dest="boundary_alpha", type=float)
    parent.add_argument("--beta-alpha", dest="beta_alpha", type=float)
    parent.add_argument("--best-spt", dest="best_spt", type=int)
    parent.add_argument("--k-neighbours", dest="k_neighbours", type=int)
    parent.add_argument("--k1", type=int)
    parent.add_argument("--s-fraction", dest="s_fraction", type=float)
    parent.add_argument("--seed", type=int)
    parent.add_argument("--enumeration-cap", dest="enumeration_cap", type=int)
    parent.add_argument("--objective", choices=[o.value for o in Objective])
    parent.add_argument(
        "--paper-literal-tiebreak", dest="paper_literal_tiebreak", action="store_true", default=None
    )
    parent.add_argument("--folds", type=int)
    parent.add_argument("--ratios", type=_ratios, help="逗号分隔的训练比例")
    parent.add_argument("--repeats", dest="sweep_repeats", type=int)
    parent.add_argument("--out", help="输出目录")
    parent.add_argument("--jobs", type=int)
    parent.add_argument("--model", help="模型文件路径")
    parent.add_argument("--input", help="待分类 CSV")
    parent.add_argument("--classifier", choices=["spt_cd", "knn"])
    parent.add_argument("--knn-k", dest="knn_k", type=int)
    parent.add_argument("--verbose", action="store_true")
    parent.add_argument("--quiet", action="store_true")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parent = _common_parser()
    parser = argparse.ArgumentParser(prog="spt_graph", description="子空间图生成树分类器")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("train", parents=[parent], help="训练并保存模型")
    sub.add_parser("classify", parents=[parent], help="用已保存的模型分类")
    sub.add_parser("evaluate", parents=[parent], help="k 折交叉验证")
    sub.add_parser("sweep", parents=[parent], help="训练比例扫描")
    sub.add_parser("grid", parents=[parent], help="参数网格搜索")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """配置文件 + 命令行覆盖，校验后返回 RunConfig"""
    config = Config.get_instance()
    config.reset()
    # 未指定 --config 时读取随包附带的 config.yaml
    path = args.config or PathManager.get_config_path()
    if (args.config or path.exists()) and not config.load_config(path):
        raise ConfigError(config.error_message)
    config.apply_overrides(vars(args))
    return config.build_run_config()


# ==================== 输出 ====================


def _metric_table(title: str, rows) -> Table:
    table = Table(title=title)
    table.add_column("dataset")
    for name in METRIC_NAMES:
        table.add_column(name, justify="right")
    for label, values in rows:
        table.add_row(label, *[_short(values[name]) for name in METRIC_NAMES])
    return table


def _short(value: Optional[float]) -> str:
    return "undefined" if value is None else f"{value:.4f}"


def headline_rows(report: CrossValidationReport):
    """折均值与按样本加权的合并指标各占一行"""
    pooled = {name: getattr(report.pooled, name) for name in METRIC_NAMES}
    return [(f"{report.dataset} (fold mean)", report.mean), (f"{report.dataset} (pooled)", pooled)]


def write_manifest(out_dir: Path, command: str, artifacts: List[Path]) -> Path:
    """运行清单：生效配置、产物哈希与版本号，不含时间戳"""
    config = Config.get_instance()
    config_copy = out_dir / "config.yaml"
    config.save_config(config_copy)

    manifest = {
        "command": command,
        "version": __version__,
        "config": config.get_config(),
        "artifacts": {
            p.name: file_sha256(p) for p in sorted([*artifacts, config_copy]) if p.exists()
        },
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _load_dataset(rc: RunConfig):
    if not rc.dataset.path:
        raise UsageError("missing dataset path (--dataset or dataset.path)")
    positive_label = rc.dataset.positive_label if rc.dataset.positive_label is not None else "1"
    return load_csv(rc.dataset.path, rc.dataset.label_column, positive_label)


def _settings(rc: RunConfig) -> EvaluationSettings:
    return EvaluationSettings(
        classifier=rc.run.classifier, knn_k=rc.run.knn_k, scale=rc.dataset.scale, jobs=rc.run.jobs
    )


# ==================== 子命令 ====================


def cmd_train(rc: RunConfig, out_dir: Path) -> List[Path]:
    d = _load_dataset(rc)
    if rc.dataset.scale:
        log.print_log("train 不做缩放：模型文件不保存缩放参数", "warning")

    monitor = RunMonitor.get_instance()
    monitor.start_timer("cmd_train")
    split = make_class_split(d, rc.params.s_fraction, rc.params.seed)
    model = train(split, rc.params, jobs=rc.run.jobs)
    elapsed = monitor.stop_timer("cmd_train")

    model_path = Path(rc.run.model) if rc.run.model else out_dir / "model.json"
    save_model(model, model_path)

    summary = summarize_model(model)
    table = Table(title=f"{d.name}: {summary.owner_count} owners")
    table.add_column("dictionary")
    for column in ("min", "mean", "max", "total"):
        table.add_column(column, justify="right")
    for name, stats in (("zeta0", summary.zeta0), ("zeta1", summary.zeta1)):
        table.add_row(name, str(stats.minimum), f"{stats.mean:.2f}", str(stats.maximum), str(stats.total))
    console.print(table)
    log.print_log(f"模型已保存到 {model_path}，训练耗时 {elapsed:.2f}s", "success")
    return [model_path]


def cmd_classify(rc: RunConfig, out_dir: Path) -> List[Path]:
    if not rc.run.model or not rc.run.input:
        raise UsageError("classify needs --model and --input")
    model = load_model(rc.run.model)
    rows = load_features_csv(rc.run.input, model.feature_count, rc.dataset.label_column)
    predictions = classify_batch(rows, model, jobs=rc.run.jobs)

    path = out_dir / "predictions.csv"
    lines = ["row_id,label,vote_share"]
    lines += [f"{i},{p.label},{format_real(p.vote_share)}" for i, p in enumerate(predictions)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    log.print_log(f"已分类 {len(predictions)} 条，结果写入 {path}", "success")
    return [path]


def cmd_evaluate(rc: RunConfig, out_dir: Path) -> List[Path]:
    d = _load_dataset(rc)
    report = cross_validate(d, rc.params, rc.run.folds, _settings(rc))

    folds_path = out_dir / "folds.csv"
    roc_path = out_dir / "roc.tsv"
    write_fold_report(report, folds_path)
    write_roc_points(report.pooled.roc_points, roc_path)

    console.print(_metric_table(f"{rc.run.folds}-fold", headline_rows(report)))
    failed = [f for f in report.folds if not f.ok]
    if failed:
        log.print_log(f"{len(failed)} 折评估失败，详见 {folds_path}", "warning")
    return [folds_path, roc_path]


def cmd_sweep(rc: RunConfig, out_dir: Path) -> List[Path]:
    d = _load_dataset(rc)
    rows = train_ratio_sweep(d, rc.params, rc.run.ratios, rc.run.sweep_repeats, _settings(rc))
    path = out_dir / "sweep.csv"
    write_sweep_report(d.name, rows, path)

    table = Table(title=f"{d.name}: train ratio sweep")
    for column in ("ratio", "mean", "min", "max", "error"):
        table.add_column(column)
    for r in rows:
        table.add_row(f"{r.ratio:g}", _short(r.mean), _short(r.minimum), _short(r.maximum), r.error or "")
    console.print(table)
    return [path]


def cmd_grid(rc: RunConfig, out_dir: Path) -> List[Path]:
    d = _load_dataset(rc)
    result = grid_search(d, rc.params, rc.grid, rc.run.folds, _settings(rc))
    path = out_dir / "grid.csv"
    write_grid_report(d.name, result, path)

    if result.best is None:
        log.print_log("网格中没有可用的参数组合", "warning")
    else:
        log.print_log(
            f"最优参数 {result.best.overrides}，平均准确率 {_short(result.best.mean_accuracy)}", "success"
        )
    return [path]


COMMANDS = {
    "train": cmd_train,
    "classify": cmd_classify,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "grid": cmd_grid,
}


def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    try:
        rc = resolve_config(args)
    except ConfigError as e:
        log.print_log(str(e), "error")
        return EXIT_USAGE

    try:
        out_dir = PathManager.get_output_dir(rc.run.out)
        if not PathManager.is_writable(out_dir):
            raise OSError(f"output directory {out_dir} is not writable")
    except OSError as e:
        log.print_log(f"[cli] {e}", "error")
        return EXIT_RUNTIME

    log.init_cli_mode(out_dir / "run.log", verbose=args.verbose, quiet=args.quiet)
    monitor = RunMonitor.get_instance()
    monitor.reset()
    monitor.start_timer(f"cli:{args.command}")

    status = EXIT_OK
    artifacts: List[Path] = []
    try:
        artifacts = COMMANDS[args.command](rc, out_dir)
    except UsageError as e:
        log.print_log(f"[cli] {e}", "error")
        status = EXIT_USAGE
    except SptGraphError as e:
        log.print_log(str(e), "error")
        monitor.record_error(args.command, str(e))
        status = EXIT_RUNTIME
    except OSError as e:
        log.print_log(f"[cli] {e}", "error")
        status = EXIT_RUNTIME
    except Exception as e:
        log.print_traceback(args.command, e)
        status = EXIT_RUNTIME
    finally:
        monitor.stop_timer(f"cli:{args.command}", success=status == EXIT_OK)
        try:
            monitor.export_metrics(out_dir / "timing.json")
            write_manifest(out_dir, args.command, artifacts)
        except OSError as e:
            log.print_log(f"[cli] cannot write run manifest: {e}", "error")
            status = status or EXIT_RUNTIME
        log.init_cli_mode(None)

    return status


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
