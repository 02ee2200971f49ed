"""End-to-end experiment runs: train, log, checkpoint, evaluate, report."""

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

from .config import ExperimentConfig
from .data import (DatasetRoot, class_pixel_counts, default_data_root,
                   load_image, load_split_samples, make_batches)
from .engine import EpochRecord, evaluate, fit
from .losses import class_weights as derive_class_weights
from .metrics import MetricReport
from .models import (build_model, freeze_encoder, load_checkpoint,
                     save_checkpoint, xavier_init)
from .plots import emit_plots
from .visualize import render_segmentation_map

METRICS_HEADER = "epoch,lr,train_loss,train_acc,train_miou,val_loss,val_acc,val_miou"
CHECKPOINT_NAME = "best.pt"
METRICS_NAME = "metrics.csv"
SUMMARY_NAME = "summary.json"
N_PREVIEW_IMAGES = 2


class RunnerError(RuntimeError):
    pass


@dataclass
class RunArtifacts:
    run_dir: Path
    config: ExperimentConfig
    records: List[EpochRecord]
    best_epoch: int
    stop_epoch: int
    checkpoint_path: Path
    metrics_path: Path
    summary_path: Path
    test: MetricReport


def _format_row(record: EpochRecord) -> str:
    fields = [str(record.epoch), str(record.lr),
              str(record.train.loss), str(record.train.pixel_accuracy),
              str(record.train.mean_iou),
              str(record.val.loss), str(record.val.pixel_accuracy),
              str(record.val.mean_iou)]
    return ",".join(fields)


def write_metrics_log(records, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(METRICS_HEADER + "\n")
        for record in records:
            fh.write(_format_row(record) + "\n")
    return Path(path)


def read_metrics_log(path) -> List[EpochRecord]:
    """Parse a metrics.csv back into epoch records (per-class IoU not logged)."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh]
    if not lines or lines[0] != METRICS_HEADER:
        raise RunnerError(f"{path}: bad or missing header; expected "
                          f"{METRICS_HEADER!r}")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 8:
            raise RunnerError(f"{path}:{lineno}: expected 8 fields, "
                              f"got {len(parts)}")
        try:
            epoch = int(parts[0])
            values = [float(p) for p in parts[1:]]
        except ValueError as exc:
            raise RunnerError(f"{path}:{lineno}: {exc}") from None
        records.append(EpochRecord(
            epoch=epoch, lr=values[0],
            train=MetricReport(loss=values[1], pixel_accuracy=values[2],
                               mean_iou=values[3]),
            val=MetricReport(loss=values[4], pixel_accuracy=values[5],
                             mean_iou=values[6])))
    return records


def _nan_to_none(values):
    return [None if (isinstance(v, float) and math.isnan(v)) else v
            for v in values]


def _report_dict(report: MetricReport):
    out = {"loss": report.loss, "pixel_accuracy": report.pixel_accuracy,
           "mean_iou": report.mean_iou}
    if report.iou_per_class is not None:
        out["iou_per_class"] = _nan_to_none(
            [float(v) for v in report.iou_per_class])
    return out


def _resolve_data_root(cfg: ExperimentConfig) -> Path:
    root = cfg.data_root or default_data_root()
    if root is None:
        raise RunnerError("no dataset location: set data_root in the config, "
                          "pass --data-root, or export VOCSEG_DATA_ROOT")
    return Path(root)


def run_experiment(cfg: ExperimentConfig) -> RunArtifacts:
    """Train one preset end to end and leave all artifacts in the run directory.

    Writes metrics.csv incrementally (one row per finished epoch), saves the
    best-validation-loss checkpoint, evaluates it once on the test split, and
    emits summary.json, training curves and a couple of predicted maps.
    """
    data_root = DatasetRoot(_resolve_data_root(cfg))
    run_dir = Path(cfg.out_dir or "runs") / cfg.name
    run_dir.mkdir(parents=True, exist_ok=True)

    train_samples = load_split_samples(data_root, "train")
    val_samples = load_split_samples(data_root, "val")
    test_samples = load_split_samples(data_root, "test")

    weights = None
    if cfg.class_weights:
        weights = derive_class_weights(class_pixel_counts(train_samples))

    model = build_model(cfg.arch, backbone_weights=cfg.backbone_weights)
    xavier_init(model, cfg.seed)
    if model.spec.frozen_prefix is not None:
        freeze_encoder(model)

    metrics_path = run_dir / METRICS_NAME
    with open(metrics_path, "w", encoding="utf-8") as log:
        log.write(METRICS_HEADER + "\n")
        log.flush()

        def on_epoch(record):
            log.write(_format_row(record) + "\n")
            log.flush()

        result = fit(model, train_samples, val_samples, cfg.train_config(),
                     class_weights=weights,
                     augment_policy=cfg.augment_policy(),
                     epoch_callback=on_epoch)

    best = next(r for r in result.records if r.epoch == result.best_epoch)
    model.load_state_dict(result.best_state)
    checkpoint_path = run_dir / CHECKPOINT_NAME
    save_checkpoint(checkpoint_path, model, epoch=result.best_epoch,
                    metrics=_report_dict(best.val))

    test_report = evaluate(model, make_batches(test_samples, cfg.batch_size),
                           class_weights=weights)

    summary = {
        "name": cfg.name,
        "arch": cfg.arch,
        "seed": cfg.seed,
        "best_epoch": result.best_epoch,
        "stop_epoch": result.stop_epoch,
        "val": _report_dict(best.val),
        "test": _report_dict(test_report),
    }
    if weights is not None:
        summary["class_weights"] = [float(w) for w in weights]
    summary_path = run_dir / SUMMARY_NAME
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")

    emit_plots(result.records, run_dir)
    _render_previews(model, test_samples[:N_PREVIEW_IMAGES], run_dir)

    return RunArtifacts(run_dir=run_dir, config=cfg, records=result.records,
                        best_epoch=result.best_epoch,
                        stop_epoch=result.stop_epoch,
                        checkpoint_path=checkpoint_path,
                        metrics_path=metrics_path, summary_path=summary_path,
                        test=test_report)


def _render_previews(model, samples, run_dir):
    import torch

    out_dir = Path(run_dir) / "predictions"
    out_dir.mkdir(exist_ok=True)
    model.eval()
    for sample in samples:
        with torch.no_grad():
            logits = model(sample.image.unsqueeze(0))
        render_segmentation_map(logits).save(out_dir / f"{sample.id}.png")


def render_prediction(checkpoint_path, image_path, out_path):
    """Segment a single image with a saved checkpoint and write the color map."""
    import torch

    model, _ = load_checkpoint(checkpoint_path)
    model.eval()
    image = load_image(image_path)
    with torch.no_grad():
        logits = model(image.unsqueeze(0))
    out_path = Path(out_path)
    if out_path.parent and not out_path.parent.exists():
        out_path.parent.mkdir(parents=True, exist_ok=True)
    render_segmentation_map(logits).save(out_path)
    return out_path


_TABLE_COLUMNS = ("run", "arch", "best_epoch", "epochs",
                  "val_acc_%", "val_miou", "val_loss",
                  "test_acc_%", "test_miou", "test_loss")


def _table_row(run_dir: Path):
    summary_path = run_dir / SUMMARY_NAME
    if not summary_path.exists():
        return [run_dir.name, "(failed)"] + ["-"] * (len(_TABLE_COLUMNS) - 2)
    with open(summary_path, "r", encoding="utf-8") as fh:
        summary = json.load(fh)

    def pct(x):
        return f"{100.0 * x:.2f}"

    def f4(x):
        return f"{x:.4f}"

    val, test = summary["val"], summary["test"]
    return [summary["name"], summary["arch"], str(summary["best_epoch"]),
            str(summary["stop_epoch"]),
            pct(val["pixel_accuracy"]), f4(val["mean_iou"]), f4(val["loss"]),
            pct(test["pixel_accuracy"]), f4(test["mean_iou"]), f4(test["loss"])]


def results_table(run_dirs, out_path=None) -> str:
    """Markdown comparison table across finished runs (4 d.p., accuracy in %)."""
    rows = [_table_row(Path(d)) for d in run_dirs]
    header = list(_TABLE_COLUMNS)
    all_rows = [header, ["---"] * len(header)] + rows
    text = "\n".join("| " + " | ".join(row) + " |" for row in all_rows) + "\n"
    if out_path is not None:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text
