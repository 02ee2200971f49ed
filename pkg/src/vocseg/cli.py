"""Command-line entry points: run experiments, tabulate, render, plot."""

import argparse
import sys

from .config import PRESETS, ConfigError, resolve_config, with_overrides
from .data import DataError
from .engine import TrainingDiverged
from .models import ModelBuildError
from .runner import (RunnerError, read_metrics_log, render_prediction,
                     results_table, run_experiment)

_USAGE_ERRORS = (ConfigError, DataError, RunnerError, ModelBuildError,
                 TrainingDiverged, ValueError, OSError)


def _cmd_run(args) -> int:
    cfg = resolve_config(args.config)
    cfg = with_overrides(cfg, seed=args.seed, data_root=args.data_root,
                         out_dir=args.out)
    artifacts = run_experiment(cfg)
    best = next(r for r in artifacts.records if r.epoch == artifacts.best_epoch)
    print(f"{cfg.name}: stopped after epoch {artifacts.stop_epoch}, "
          f"best epoch {artifacts.best_epoch} "
          f"(val loss {best.val.loss:.4f}, val mIoU {best.val.mean_iou:.4f})")
    print(f"test: acc {artifacts.test.pixel_accuracy:.4f}, "
          f"mIoU {artifacts.test.mean_iou:.4f}, loss {artifacts.test.loss:.4f}")
    print(f"artifacts in {artifacts.run_dir}")
    return 0


def _cmd_table(args) -> int:
    text = results_table(args.run_dirs, out_path=args.out)
    print(text, end="")
    if args.out:
        print(f"written to {args.out}", file=sys.stderr)
    return 0


def _cmd_render(args) -> int:
    out = render_prediction(args.checkpoint, args.image, args.out_image)
    print(f"wrote {out}")
    return 0


def _cmd_plots(args) -> int:
    from pathlib import Path

    from .plots import emit_plots

    run_dir = Path(args.run_dir)
    records = read_metrics_log(run_dir / "metrics.csv")
    if not records:
        raise RunnerError(f"{run_dir}: metrics log has no epochs")
    written = emit_plots(records, run_dir)
    for path in written.values():
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vocseg",
        description="Semantic segmentation experiments on VOC-layout data.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="train one experiment preset or config file")
    run_p.add_argument("config",
                       help=f"preset name ({', '.join(PRESETS)}) or config path")
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--data-root", default=None,
                       help="dataset root (else VOCSEG_DATA_ROOT)")
    run_p.add_argument("--out", default=None, help="parent directory for runs")
    run_p.set_defaults(func=_cmd_run)

    table_p = sub.add_parser("table", help="comparison table across run dirs")
    table_p.add_argument("run_dirs", nargs="+")
    table_p.add_argument("--out", default=None, help="also write to this file")
    table_p.set_defaults(func=_cmd_table)

    render_p = sub.add_parser("render",
                              help="segment one image with a checkpoint")
    render_p.add_argument("checkpoint")
    render_p.add_argument("image")
    render_p.add_argument("out_image")
    render_p.set_defaults(func=_cmd_render)

    plots_p = sub.add_parser("plots", help="redraw curves from a run's metrics.csv")
    plots_p.add_argument("run_dir")
    plots_p.set_defaults(func=_cmd_plots)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
