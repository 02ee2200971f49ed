"""Shared fixtures: a toy on-disk VOC-layout dataset and in-memory samples."""

import numpy as np
import pytest
import torch
from PIL import Image

from vocseg.data import SegSample
from vocseg.palette import voc_palette

# saturated, well-separated colors keyed by class id
RGB_BY_CLASS = {
    0: (24, 24, 24),
    1: (230, 30, 30),
    2: (30, 230, 30),
    3: (30, 30, 230),
    4: (230, 230, 30),
    5: (230, 30, 230),
}

SHADES_BY_CLASS = {
    0: (0.05, 0.05, 0.05),
    1: (0.95, 0.10, 0.10),
    2: (0.10, 0.95, 0.10),
    3: (0.10, 0.10, 0.95),
    4: (0.95, 0.95, 0.10),
}


def save_palette_mask(mask, path):
    img = Image.fromarray(np.asarray(mask, dtype=np.uint8), mode="P")
    img.putpalette(voc_palette().reshape(-1).tolist())
    img.save(path)


def _paint(mask):
    img = np.zeros(mask.shape + (3,), dtype=np.uint8)
    for cls, rgb in RGB_BY_CLASS.items():
        img[mask == cls] = rgb
    return img


def build_voc_tree(root, split_sizes=None):
    """Write a miniature dataset in the expected directory layout."""
    split_sizes = dict(split_sizes or {"train": 10, "val": 6, "test": 6})
    (root / "ImageSets" / "Segmentation").mkdir(parents=True)
    (root / "JPEGImages").mkdir()
    (root / "SegmentationClass").mkdir()
    rng = np.random.default_rng(20260825)
    shapes = [(48, 64), (64, 48), (56, 56), (40, 72)]
    ids_by_split = {}
    counter = 0
    for split, n in split_sizes.items():
        ids = []
        for k in range(n):
            sid = f"{split}_{k:03d}"
            h, w = shapes[counter % len(shapes)]
            counter += 1
            cls = (counter % 5) + 1
            mask = np.zeros((h, w), dtype=np.uint8)
            mask[h // 4: 3 * h // 4, w // 4: 3 * w // 4] = cls
            if split == "train" and k == 0:
                mask[0, :] = 255  # a void row, remapped to background on load
            img = _paint(np.where(mask == 255, 0, mask))
            noise = rng.integers(-12, 13, img.shape)
            img = np.clip(img.astype(np.int64) + noise, 0, 255).astype(np.uint8)
            Image.fromarray(img, "RGB").save(
                root / "JPEGImages" / f"{sid}.jpg", quality=95)
            save_palette_mask(mask, root / "SegmentationClass" / f"{sid}.png")
            ids.append(sid)
        (root / "ImageSets" / "Segmentation" / f"{split}.txt").write_text(
            "\n".join(ids) + "\n")
        ids_by_split[split] = ids
    return ids_by_split


@pytest.fixture(scope="session")
def voc_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("toyvoc")
    build_voc_tree(root)
    return root


def half_split_samples(n=8, size=224):
    """Trivially learnable samples: left/right halves of two classes."""
    pairs = [(0, 1), (2, 0), (3, 4), (1, 2), (4, 0), (0, 3), (2, 4), (1, 3)]
    samples = []
    half = size // 2
    for i in range(n):
        a, b = pairs[i % len(pairs)]
        mask = np.zeros((size, size), dtype=np.int64)
        mask[:, :half] = a
        mask[:, half:] = b
        img = np.empty((size, size, 3), dtype=np.float32)
        img[:, :half] = SHADES_BY_CLASS[a]
        img[:, half:] = SHADES_BY_CLASS[b]
        samples.append(SegSample(
            image=torch.from_numpy(img.transpose(2, 0, 1)).contiguous(),
            mask=torch.from_numpy(mask),
            id=f"halves_{i}"))
    return samples


def random_samples(n, size=224, seed=0, num_classes=21):
    rng = np.random.default_rng(seed)
    samples = []
    for i in range(n):
        img = rng.random((3, size, size), dtype=np.float32)
        mask = rng.integers(0, num_classes, (size, size)).astype(np.int64)
        samples.append(SegSample(image=torch.from_numpy(img),
                                 mask=torch.from_numpy(mask),
                                 id=f"rand_{i}"))
    return samples


@pytest.fixture
def easy_samples():
    return half_split_samples()
