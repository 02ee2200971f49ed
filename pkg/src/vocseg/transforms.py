"""Geometry-synchronized train-time augmentation for image/mask pairs.

Pipeline per sample: optional horizontal flip, small random rotation,
deterministic center crop, resize back to the network input size. The mask
follows the exact same geometry with nearest-neighbor interpolation and a
background fill, so labels stay aligned with pixels.
"""

from dataclasses import dataclass

import numpy as np
import torch
import torchvision.transforms.functional as TF
from torchvision.transforms import InterpolationMode

from .data import Batch, SegSample

BACKGROUND_CLASS = 0


@dataclass(frozen=True)
class AugmentPolicy:
    flip_prob: float = 0.5
    rotation_range_deg: tuple = (-5.0, 5.0)
    crop_size: int = 180
    output_size: int = 224
    enabled: bool = True

    def __post_init__(self):
        if not 0.0 <= self.flip_prob <= 1.0:
            raise ValueError(f"flip_prob must be in [0, 1], got {self.flip_prob}")
        lo, hi = self.rotation_range_deg
        if lo != -hi:
            raise ValueError(f"rotation range must be symmetric about 0, got {self.rotation_range_deg}")
        if self.crop_size > self.output_size:
            raise ValueError(f"crop_size {self.crop_size} exceeds output_size {self.output_size}")


@dataclass(frozen=True)
class AugmentDraw:
    do_flip: bool
    angle_deg: float


def draw(policy: AugmentPolicy, rng: np.random.Generator) -> AugmentDraw:
    """Sample one transform: flip ~ Bernoulli(flip_prob), angle ~ U(range)."""
    do_flip = bool(rng.random() < policy.flip_prob)
    lo, hi = policy.rotation_range_deg
    angle = float(rng.uniform(lo, hi))
    return AugmentDraw(do_flip=do_flip, angle_deg=angle)


def apply(sample: SegSample, drawn: AugmentDraw, policy: AugmentPolicy) -> SegSample:
    """Apply one draw to image and mask with identical geometry.

    Image: flip -> rotate (bilinear, fill 0) -> center crop -> bilinear resize.
    Mask: same ops with nearest interpolation and background fill.
    """
    img = sample.image
    mask = sample.mask.to(torch.uint8).unsqueeze(0)

    if drawn.do_flip:
        img = TF.hflip(img)
        mask = TF.hflip(mask)
    if drawn.angle_deg != 0.0:
        img = TF.rotate(img, drawn.angle_deg,
                        interpolation=InterpolationMode.BILINEAR, fill=0.0)
        mask = TF.rotate(mask, drawn.angle_deg,
                         interpolation=InterpolationMode.NEAREST,
                         fill=BACKGROUND_CLASS)
    if policy.crop_size < policy.output_size:
        img = TF.center_crop(img, [policy.crop_size])
        mask = TF.center_crop(mask, [policy.crop_size])
        img = TF.resize(img, [policy.output_size],
                        interpolation=InterpolationMode.BILINEAR, antialias=True)
        mask = TF.resize(mask, [policy.output_size],
                         interpolation=InterpolationMode.NEAREST)

    return SegSample(image=img.contiguous(),
                     mask=mask.squeeze(0).to(torch.int64).contiguous(),
                     id=sample.id)


def augment_train_batch(batch: Batch, policy: AugmentPolicy,
                        rng: np.random.Generator) -> Batch:
    """Transform each sample of a training batch with an independent draw.

    Draws consume the rng in sample order. With the policy disabled the
    batch passes through untouched.
    """
    if not policy.enabled:
        return batch
    out_images, out_masks = [], []
    for i in range(len(batch)):
        sample = SegSample(image=batch.images[i], mask=batch.masks[i],
                           id=batch.ids[i])
        transformed = apply(sample, draw(policy, rng), policy)
        out_images.append(transformed.image)
        out_masks.append(transformed.mask)
    return Batch(images=torch.stack(out_images),
                 masks=torch.stack(out_masks),
                 ids=batch.ids)
