"""Semantic segmentation experiments on Pascal VOC-layout data."""

from .config import PRESETS, ConfigError, ExperimentConfig, load_config, load_preset
from .data import (Batch, DataError, DatasetRoot, SegSample, class_pixel_counts,
                   decode_mask, load_sample, load_split, load_split_samples,
                   make_batches, resize_sample)
from .engine import (EarlyStopping, EpochRecord, FitResult, TrainConfig,
                     TrainingDiverged, cosine_lr, evaluate, fit, train_epoch)
from .losses import class_weights, cross_entropy, pixel_weight_total
from .metrics import (ConfusionMatrix, MetricReport, iou_per_class, mean_iou,
                      pixel_accuracy)
from .models import (ARCHITECTURES, ModelBuildError, SegNet, build_model,
                     freeze_encoder, load_checkpoint, model_spec, param_count,
                     save_checkpoint, xavier_init)
from .palette import CLASS_NAMES, NUM_CLASSES, voc_palette
from .runner import (RunArtifacts, RunnerError, read_metrics_log,
                     render_prediction, results_table, run_experiment,
                     write_metrics_log)
from .transforms import AugmentDraw, AugmentPolicy, apply, augment_train_batch, draw
from .visualize import colorize_mask, render_segmentation_map

__version__ = "0.1.0"

__all__ = [
    "ARCHITECTURES", "AugmentDraw", "AugmentPolicy", "Batch", "CLASS_NAMES",
    "ConfigError", "ConfusionMatrix", "DataError", "DatasetRoot",
    "EarlyStopping", "EpochRecord", "ExperimentConfig", "FitResult",
    "MetricReport", "ModelBuildError", "NUM_CLASSES", "PRESETS",
    "RunArtifacts", "RunnerError", "SegNet", "SegSample", "TrainConfig",
    "TrainingDiverged", "apply", "augment_train_batch", "build_model",
    "class_pixel_counts", "class_weights", "colorize_mask", "cosine_lr",
    "cross_entropy", "decode_mask", "draw", "evaluate", "fit",
    "freeze_encoder", "iou_per_class", "load_checkpoint", "load_config",
    "load_preset", "load_sample", "load_split", "load_split_samples",
    "make_batches", "mean_iou", "model_spec", "param_count",
    "pixel_accuracy", "pixel_weight_total", "read_metrics_log",
    "render_prediction", "render_segmentation_map", "resize_sample",
    "results_table", "run_experiment", "save_checkpoint", "train_epoch",
    "voc_palette", "write_metrics_log", "xavier_init",
]
