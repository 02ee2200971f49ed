"""Training-curve figures written alongside each run."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_SERIES = (
    ("loss", "cross-entropy loss", lambda r: r.loss),
    ("accuracy", "pixel accuracy", lambda r: r.pixel_accuracy),
    ("iou", "mean IoU", lambda r: r.mean_iou),
)


def emit_plots(records, out_dir):
    """Write loss.png, accuracy.png and iou.png; returns {stem: path}."""
    if not records:
        raise ValueError("no epoch records to plot")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    epochs = [r.epoch for r in records]
    written = {}
    for stem, label, pick in _SERIES:
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(epochs, [pick(r.train) for r in records], label="train")
        ax.plot(epochs, [pick(r.val) for r in records], label="val")
        ax.set_xlabel("epoch")
        ax.set_ylabel(label)
        ax.legend()
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        path = out_dir / f"{stem}.png"
        fig.savefig(path)
        plt.close(fig)
        written[stem] = path
    return written
