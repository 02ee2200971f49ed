"""Cross-entropy over per-pixel softmax, plain or class-weighted."""

from typing import Optional

import numpy as np
import torch
import torch.nn.functional as F


def class_weights(counts) -> np.ndarray:
    """Per-class loss weights from training-set pixel frequencies.

    w_i = 1 - n_i / sum_j n_j, so rare classes are penalized more when
    misclassified. For C classes the weights always sum to C - 1.
    """
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        raise ValueError("class counts are all zero; cannot derive weights")
    return 1.0 - counts / total


def cross_entropy(logits: torch.Tensor, targets: torch.Tensor,
                  weights=None) -> torch.Tensor:
    """Mean per-pixel cross-entropy of softmax(logits) against targets.

    logits: (B, C, H, W); targets: (B, H, W) int in [0, C). With weights,
    each pixel's term is scaled by the weight of its true class and the
    mean is normalized by the sum of applied weights, keeping the loss
    scale comparable to the unweighted case.
    """
    if logits.dim() != 4 or targets.dim() != 3:
        raise ValueError(f"expected logits (B,C,H,W) and targets (B,H,W), "
                         f"got {tuple(logits.shape)} and {tuple(targets.shape)}")
    if logits.shape[0] != targets.shape[0] or logits.shape[2:] != targets.shape[1:]:
        raise ValueError(f"logits {tuple(logits.shape)} do not match "
                         f"targets {tuple(targets.shape)}")
    if not torch.isfinite(logits).all():
        raise ValueError("non-finite values in logits")
    weight_t = None
    if weights is not None:
        weight_t = torch.as_tensor(np.asarray(weights), dtype=logits.dtype,
                                   device=logits.device)
        if weight_t.numel() != logits.shape[1]:
            raise ValueError(f"got {weight_t.numel()} class weights for "
                             f"{logits.shape[1]} classes")
    return F.cross_entropy(logits, targets, weight=weight_t)


def pixel_weight_total(targets: torch.Tensor,
                       weights: Optional[np.ndarray] = None) -> float:
    """Sum of per-pixel applied weights; the CE normalizer for this batch.

    Equals the pixel count when unweighted. Used to aggregate batch losses
    into an exact whole-split mean.
    """
    if weights is None:
        return float(targets.numel())
    w = np.asarray(weights, dtype=np.float64)
    return float(w[targets.numpy().ravel()].sum())
