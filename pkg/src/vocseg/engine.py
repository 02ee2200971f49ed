"""Training loop: Adam, optional cosine annealing, early stopping on val loss."""

import copy
import math
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np
import torch

from .data import make_batches
from .losses import cross_entropy, pixel_weight_total
from .metrics import ConfusionMatrix, MetricReport
from .transforms import AugmentPolicy, augment_train_batch

SCHEDULERS = ("none", "cosine")


class TrainingDiverged(RuntimeError):
    """Loss became NaN/inf; the run is aborted rather than logged."""


def cosine_lr(t_cur: int, t_max: int, lr_max: float, lr_min: float = 0.0) -> float:
    """Annealed learning rate after t_cur completed epochs.

    lr(t) = lr_min + (lr_max - lr_min) * (1 + cos(pi * t / t_max)) / 2,
    so t=0 gives lr_max and t=t_max gives lr_min; t past t_max stays at lr_min.
    """
    if t_max <= 0:
        raise ValueError(f"t_max must be positive, got {t_max}")
    if t_cur < 0:
        raise ValueError(f"t_cur must be non-negative, got {t_cur}")
    if t_cur > t_max:
        return lr_min
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + math.cos(math.pi * t_cur / t_max))


@dataclass(frozen=True)
class TrainConfig:
    lr_max: float = 0.005
    lr_min: float = 0.0
    epochs_max: int = 50
    patience: int = 5
    scheduler: str = "none"
    t_max: Optional[int] = None  # cosine period; defaults to epochs_max
    batch_size: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.lr_max <= 0:
            raise ValueError(f"lr_max must be positive, got {self.lr_max}")
        if self.lr_min < 0 or self.lr_min > self.lr_max:
            raise ValueError(f"lr_min must be in [0, lr_max], got {self.lr_min}")
        if self.epochs_max < 1:
            raise ValueError(f"epochs_max must be >= 1, got {self.epochs_max}")
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")
        if self.scheduler not in SCHEDULERS:
            raise ValueError(f"scheduler must be one of {SCHEDULERS}, "
                             f"got {self.scheduler!r}")
        if self.t_max is not None and self.t_max < 1:
            raise ValueError(f"t_max must be >= 1, got {self.t_max}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")

    @property
    def effective_t_max(self) -> int:
        return self.epochs_max if self.t_max is None else self.t_max

    def lr_for_epoch(self, epoch: int) -> float:
        """Rate applied during the given 1-based epoch (set before it runs)."""
        if self.scheduler == "none":
            return self.lr_max
        return cosine_lr(epoch - 1, self.effective_t_max, self.lr_max, self.lr_min)


class EarlyStopping:
    """Stop after `patience` consecutive epochs without a strictly lower loss."""

    def __init__(self, patience: int):
        if patience < 1:
            raise ValueError(f"patience must be >= 1, got {patience}")
        self.patience = patience
        self.best_loss = math.inf
        self.best_epoch = 0
        self._stale = 0

    def update(self, epoch: int, loss: float) -> bool:
        """Record one epoch's validation loss; True means stop now."""
        if loss < self.best_loss:
            self.best_loss = loss
            self.best_epoch = epoch
            self._stale = 0
            return False
        self._stale += 1
        return self._stale >= self.patience


@dataclass
class EpochRecord:
    epoch: int
    lr: float
    train: MetricReport
    val: MetricReport


@dataclass
class FitResult:
    records: List[EpochRecord]
    best_state: dict
    best_epoch: int
    stop_epoch: int


def _derive_seed(*entropy) -> int:
    return int(np.random.SeedSequence(list(entropy)).generate_state(1)[0])


def _predictions(logits: torch.Tensor) -> np.ndarray:
    # numpy argmax so ties resolve to the lowest class index
    return np.argmax(logits.detach().cpu().numpy(), axis=1)


def _accumulate(cm, logits, masks, loss_value, weights):
    if not math.isfinite(loss_value):
        raise TrainingDiverged(f"non-finite loss {loss_value}")
    cm.update(_predictions(logits), masks.cpu().numpy())
    denom = pixel_weight_total(masks, weights)
    return loss_value * denom, denom


def train_epoch(model, batches, optimizer, class_weights=None,
                augment_policy: Optional[AugmentPolicy] = None,
                rng: Optional[np.random.Generator] = None) -> MetricReport:
    """One optimization pass over the batches; metrics reflect what was trained on."""
    model.train()
    cm = None
    loss_sum = 0.0
    weight_sum = 0.0
    for batch in batches:
        if augment_policy is not None and augment_policy.enabled:
            if rng is None:
                raise ValueError("augmentation requires an rng")
            batch = augment_train_batch(batch, augment_policy, rng)
        logits = model(batch.images)
        loss = cross_entropy(logits, batch.masks, class_weights)
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        if cm is None:
            cm = ConfusionMatrix(logits.shape[1])
        part, denom = _accumulate(cm, logits, batch.masks, loss.item(), class_weights)
        loss_sum += part
        weight_sum += denom
    if cm is None:
        raise ValueError("train_epoch received no batches")
    return MetricReport.from_confusion(cm, loss=loss_sum / weight_sum)


def evaluate(model, batches, class_weights=None) -> MetricReport:
    """Loss + confusion metrics over a whole split, no parameter updates."""
    model.eval()
    cm = None
    loss_sum = 0.0
    weight_sum = 0.0
    with torch.no_grad():
        for batch in batches:
            logits = model(batch.images)
            loss = cross_entropy(logits, batch.masks, class_weights)
            if cm is None:
                cm = ConfusionMatrix(logits.shape[1])
            part, denom = _accumulate(cm, logits, batch.masks, loss.item(),
                                      class_weights)
            loss_sum += part
            weight_sum += denom
    if cm is None:
        raise ValueError("evaluate received no batches")
    return MetricReport.from_confusion(cm, loss=loss_sum / weight_sum)


def fit(model, train_samples, val_samples, cfg: TrainConfig, *,
        class_weights=None, augment_policy: Optional[AugmentPolicy] = None,
        epoch_callback: Optional[Callable[[EpochRecord], None]] = None) -> FitResult:
    """Full training run; returns the best-validation-loss parameters, not the last.

    Batches are reshuffled every epoch and the augmentation stream is
    re-seeded per epoch from cfg.seed, so two runs with the same seed and
    data produce identical logs.
    """
    if not train_samples:
        raise ValueError("no training samples")
    if not val_samples:
        raise ValueError("no validation samples")
    torch.manual_seed(cfg.seed)
    optimizer = torch.optim.Adam(
        [p for p in model.parameters() if p.requires_grad], lr=cfg.lr_max)
    stopper = EarlyStopping(cfg.patience)
    records: List[EpochRecord] = []
    best_state = None
    for epoch in range(1, cfg.epochs_max + 1):
        lr = cfg.lr_for_epoch(epoch)
        for group in optimizer.param_groups:
            group["lr"] = lr
        train_batches = make_batches(train_samples, cfg.batch_size, shuffle=True,
                                     seed=_derive_seed(cfg.seed, epoch, 0))
        aug_rng = np.random.default_rng(_derive_seed(cfg.seed, epoch, 1))
        train_report = train_epoch(model, train_batches, optimizer,
                                   class_weights, augment_policy, aug_rng)
        val_batches = make_batches(val_samples, cfg.batch_size)
        val_report = evaluate(model, val_batches, class_weights)
        record = EpochRecord(epoch=epoch, lr=lr, train=train_report, val=val_report)
        records.append(record)
        if epoch_callback is not None:
            epoch_callback(record)
        improved = val_report.loss < stopper.best_loss
        should_stop = stopper.update(epoch, val_report.loss)
        if improved:
            best_state = copy.deepcopy(model.state_dict())
        if should_stop:
            break
    return FitResult(records=records, best_state=best_state,
                     best_epoch=stopper.best_epoch,
                     stop_epoch=records[-1].epoch)
