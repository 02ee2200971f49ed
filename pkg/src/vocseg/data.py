"""VOC-layout dataset ingestion: split lists, images, palette masks, batching.

Expected directory layout under the dataset root:

    ImageSets/Segmentation/{train,val,test}.txt
    JPEGImages/<id>.jpg
    SegmentationClass/<id>.png   (palette-indexed PNG)
"""

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch
from PIL import Image

from .palette import NUM_CLASSES, VOID_INDEX

SPLITS = ("train", "val", "test")
INPUT_SIZE = 224


class DataError(RuntimeError):
    """Fatal dataset problem: missing files, bad mask values, bad geometry."""


@dataclass(frozen=True)
class SegSample:
    """One image/mask pair, already resized to the network input size.

    image: float32 tensor (3, H, W), values in [0, 1]
    mask:  int64 tensor (H, W), values in [0, NUM_CLASSES)
    """

    image: torch.Tensor
    mask: torch.Tensor
    id: str


@dataclass(frozen=True)
class Batch:
    images: torch.Tensor  # (B, 3, H, W) float32
    masks: torch.Tensor   # (B, H, W) int64
    ids: tuple

    def __len__(self):
        return self.images.shape[0]


@dataclass(frozen=True)
class DatasetRoot:
    path: Path

    def __post_init__(self):
        object.__setattr__(self, "path", Path(self.path))

    def split_file(self, split):
        return self.path / "ImageSets" / "Segmentation" / f"{split}.txt"

    def image_file(self, sample_id):
        return self.path / "JPEGImages" / f"{sample_id}.jpg"

    def mask_file(self, sample_id):
        return self.path / "SegmentationClass" / f"{sample_id}.png"


def load_split(root: DatasetRoot, split: str):
    """Read a split's id list, in file order, verifying every id resolves."""
    if split not in SPLITS:
        raise DataError(f"unknown split {split!r}, expected one of {SPLITS}")
    split_path = root.split_file(split)
    if not split_path.is_file():
        raise DataError(f"split file not found: {split_path}")
    with open(split_path) as f:
        ids = [line.strip() for line in f if line.strip()]
    for sample_id in ids:
        if not root.image_file(sample_id).is_file():
            raise DataError(f"sample {sample_id!r}: missing image file "
                            f"{root.image_file(sample_id)}")
        if not root.mask_file(sample_id).is_file():
            raise DataError(f"sample {sample_id!r}: missing mask file "
                            f"{root.mask_file(sample_id)}")
    return ids


def decode_mask(mask_image):
    """Palette-indexed raster -> int64 grid of class indices.

    The void index (255) is remapped to background (0). Any other index
    outside [0, NUM_CLASSES) is a fatal error.
    """
    indices = np.asarray(mask_image).astype(np.int64)
    bad = (indices >= NUM_CLASSES) & (indices != VOID_INDEX)
    bad |= indices < 0
    if bad.any():
        loc = np.unravel_index(int(np.argmax(bad)), bad.shape)
        raise DataError(
            f"mask contains illegal palette index {int(indices[loc])} "
            f"at pixel {tuple(int(v) for v in loc)}")
    decoded = indices.copy()
    decoded[decoded == VOID_INDEX] = 0
    return decoded


def _to_pil_image(image):
    if isinstance(image, Image.Image):
        return image.convert("RGB")
    arr = np.asarray(image)
    if arr.dtype != np.uint8:
        arr = np.clip(arr * 255.0, 0, 255).astype(np.uint8)
    return Image.fromarray(arr, mode="RGB")


def resize_sample(image, mask, target: int = INPUT_SIZE, sample_id: str = ""):
    """Resize an image/mask pair to target x target and wrap as a SegSample.

    Image is interpolated bilinearly and scaled to [0, 1]; the mask uses
    nearest-neighbor so no fractional class ids can appear.
    """
    pil = _to_pil_image(image)
    mask = np.asarray(mask)
    if pil.size[0] == 0 or pil.size[1] == 0:
        raise DataError(f"sample {sample_id!r}: degenerate image size {pil.size}")
    if mask.ndim != 2 or mask.shape[0] == 0 or mask.shape[1] == 0:
        raise DataError(f"sample {sample_id!r}: degenerate mask shape {mask.shape}")
    if (pil.size[1], pil.size[0]) != mask.shape:
        raise DataError(
            f"sample {sample_id!r}: image size {pil.size[1]}x{pil.size[0]} "
            f"does not match mask shape {mask.shape}")

    if pil.size != (target, target):
        pil = pil.resize((target, target), Image.BILINEAR)
    img = np.asarray(pil, dtype=np.float32) / 255.0        # (H, W, 3)
    img_t = torch.from_numpy(img.transpose(2, 0, 1)).contiguous()

    if mask.shape != (target, target):
        mask_pil = Image.fromarray(mask.astype(np.uint8), mode="L")
        mask_pil = mask_pil.resize((target, target), Image.NEAREST)
        mask = np.asarray(mask_pil)
    mask_t = torch.from_numpy(np.ascontiguousarray(mask.astype(np.int64)))
    return SegSample(image=img_t, mask=mask_t, id=sample_id)


def load_sample(root: DatasetRoot, sample_id: str, target: int = INPUT_SIZE):
    image = Image.open(root.image_file(sample_id)).convert("RGB")
    mask = decode_mask(Image.open(root.mask_file(sample_id)))
    return resize_sample(image, mask, target=target, sample_id=sample_id)


def load_split_samples(root: DatasetRoot, split: str, target: int = INPUT_SIZE):
    return [load_sample(root, sid, target=target) for sid in load_split(root, split)]


def load_image(path, target: int = INPUT_SIZE):
    """Image file -> normalized float32 tensor (3, target, target)."""
    pil = Image.open(path).convert("RGB")
    if pil.size[0] == 0 or pil.size[1] == 0:
        raise DataError(f"degenerate image size {pil.size} in {path}")
    pil = pil.resize((target, target), Image.BILINEAR)
    arr = np.asarray(pil, dtype=np.float32) / 255.0
    return torch.from_numpy(arr.transpose(2, 0, 1)).contiguous()


def make_batches(samples: Sequence[SegSample], batch_size: int = 16,
                 shuffle: bool = False, seed: int = 0):
    """Partition samples into batches; last batch may be smaller.

    The batch sequence is a pure function of (samples, batch_size, shuffle,
    seed) — no worker-count or timing dependence.
    """
    if batch_size < 1:
        raise DataError(f"batch_size must be >= 1, got {batch_size}")
    if len(samples) == 0:
        raise DataError("cannot batch an empty sample list")
    order = np.arange(len(samples))
    if shuffle:
        order = np.random.default_rng(seed).permutation(len(samples))
    batches = []
    for start in range(0, len(samples), batch_size):
        chunk = [samples[i] for i in order[start:start + batch_size]]
        batches.append(Batch(
            images=torch.stack([s.image for s in chunk]),
            masks=torch.stack([s.mask for s in chunk]),
            ids=tuple(s.id for s in chunk),
        ))
    return batches


def class_pixel_counts(samples: Sequence[SegSample], num_classes: int = NUM_CLASSES):
    """Pixel count per class over all masks; zeros for an empty split."""
    counts = np.zeros(num_classes, dtype=np.int64)
    for s in samples:
        counts += np.bincount(s.mask.numpy().ravel(), minlength=num_classes)
    return counts


def default_data_root() -> Optional[str]:
    """Dataset root from the VOCSEG_DATA_ROOT environment variable, if set."""
    return os.environ.get("VOCSEG_DATA_ROOT") or None
