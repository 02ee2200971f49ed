"""Turn predictions into palette-indexed images."""

import numpy as np
import torch
from PIL import Image

from .palette import NUM_CLASSES, voc_palette


def prediction_grid(logits) -> np.ndarray:
    """Class-index grid (H, W) from logits of shape (C, H, W) or (1, C, H, W)."""
    if isinstance(logits, torch.Tensor):
        logits = logits.detach().cpu().numpy()
    arr = np.asarray(logits)
    if arr.ndim == 4:
        if arr.shape[0] != 1:
            raise ValueError(f"expected a single image, got batch of {arr.shape[0]}")
        arr = arr[0]
    if arr.ndim != 3:
        raise ValueError(f"expected logits (C, H, W), got shape {arr.shape}")
    return np.argmax(arr, axis=0).astype(np.int64)


def colorize_mask(mask) -> Image.Image:
    """Palette PNG image for a class-index grid."""
    grid = np.asarray(mask)
    if grid.ndim != 2:
        raise ValueError(f"expected mask (H, W), got shape {grid.shape}")
    if grid.min() < 0 or grid.max() > 255:
        raise ValueError("mask values must fit uint8")
    img = Image.fromarray(grid.astype(np.uint8), mode="P")
    img.putpalette(voc_palette().reshape(-1).tolist())
    return img


def render_segmentation_map(logits) -> Image.Image:
    """Argmax the logits and colorize with the dataset palette."""
    grid = prediction_grid(logits)
    if grid.max() >= NUM_CLASSES:
        raise ValueError(f"prediction contains class {int(grid.max())}, "
                         f"model emits more channels than {NUM_CLASSES} classes")
    return colorize_mask(grid)
