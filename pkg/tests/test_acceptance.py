"""Acceptance suite: the package's hard guarantees, one test per clause.

Each test prints a single PASS line (visible with -s / on failure pytest
reports the clause that broke). Tolerances are part of the contract and are
asserted exactly as stated, not loosened.
"""

import dataclasses
import math
import os

import numpy as np
import pytest
import torch

from conftest import half_split_samples
from vocseg.config import load_preset, with_overrides
from vocseg.data import DatasetRoot, load_split_samples, make_batches
from vocseg.engine import EarlyStopping, cosine_lr, fit, train_epoch
from vocseg.losses import class_weights, cross_entropy
from vocseg.metrics import (ConfusionMatrix, iou_per_class, mean_iou,
                            pixel_accuracy)
from vocseg.models import (ARCHITECTURES, build_model, freeze_encoder,
                           trainable_parameters, xavier_init)
from vocseg.runner import run_experiment


def _ok(name):
    print(f"PASS: {name}")


def test_cosine_schedule_matches_closed_form():
    lr_max, lr_min = 0.005, 0.0
    for t_max in (30, 40):
        for t in range(t_max + 1):
            expected = lr_min + 0.5 * (lr_max - lr_min) * (
                1.0 + math.cos(math.pi * t / t_max))
            assert abs(cosine_lr(t, t_max, lr_max, lr_min) - expected) <= 1e-12
        # anchor points: start, midpoint, end of the period
        assert abs(cosine_lr(0, t_max, lr_max, lr_min) - 0.005) <= 1e-12
        assert abs(cosine_lr(t_max // 2, t_max, lr_max, lr_min) - 0.0025) <= 1e-12
        assert abs(cosine_lr(t_max, t_max, lr_max, lr_min) - 0.0) <= 1e-12
        assert cosine_lr(t_max + 3, t_max, lr_max, lr_min) == lr_min
    _ok("cosine schedule equals closed form within 1e-12 for periods 30 and 40")


def test_class_weights_sum_and_ordering():
    rng = np.random.default_rng(42)
    for _ in range(50):
        counts = rng.integers(1, 1_000_000, size=21)
        w = class_weights(counts)
        assert abs(w.sum() - 20.0) < 1e-9
        order = np.argsort(counts, kind="stable")
        for i, j in zip(order, order[1:]):
            if counts[j] > counts[i]:
                assert w[j] < w[i]
            else:
                assert w[j] == w[i]
    _ok("class weights sum to C-1 within 1e-9 and fall as counts rise")


def _bruteforce_metrics(preds, gts, n):
    per_class = []
    for c in range(n):
        tp = int(np.sum((preds == c) & (gts == c)))
        fp = int(np.sum((preds == c) & (gts != c)))
        fn = int(np.sum((preds != c) & (gts == c)))
        denom = tp + fp + fn
        per_class.append(math.nan if denom == 0 else tp / denom)
    acc = int(np.sum(preds == gts)) / preds.size
    arr = np.array(per_class)
    mean = float(arr[~np.isnan(arr)].mean())
    return acc, per_class, mean


def test_confusion_metrics_match_bruteforce_oracle():
    rng = np.random.default_rng(7)
    for _ in range(100):
        preds = rng.integers(0, 4, (8, 8))
        gts = rng.integers(0, 4, (8, 8))
        cm = ConfusionMatrix(4).update(preds, gts)
        acc, per_class, mean = _bruteforce_metrics(preds, gts, 4)
        assert pixel_accuracy(cm) == acc
        got = iou_per_class(cm)
        for c in range(4):
            if math.isnan(per_class[c]):
                assert math.isnan(got[c])
            else:
                assert got[c] == per_class[c]
        assert mean_iou(cm) == mean
    _ok("confusion-matrix metrics equal brute-force counting on 100 random grids")


def test_uniform_logits_loss_is_log_of_class_count():
    torch.manual_seed(0)
    logits = torch.zeros(2, 21, 16, 16)
    targets = torch.randint(0, 21, (2, 16, 16))
    loss = float(cross_entropy(logits, targets))
    assert abs(loss - math.log(21)) < 1e-5
    _ok("uniform logits score ln(21) within 1e-5")


@pytest.mark.parametrize("arch", ARCHITECTURES)
def test_all_architectures_emit_input_resolution_logits(arch):
    model = build_model(arch)
    model.eval()
    with torch.no_grad():
        out = model(torch.rand(2, 3, 224, 224))
    assert out.shape == (2, 21, 224, 224)
    _ok(f"{arch} maps (2,3,224,224) to (2,21,224,224) with aligned skips")


@pytest.mark.parametrize("arch", ARCHITECTURES)
def test_initialization_respects_fan_in_bounds(arch):
    model = xavier_init(build_model(arch), seed=13)
    prefix = (f"blocks.{model.spec.frozen_prefix}"
              if model.spec.frozen_prefix else None)
    checked = 0
    for name, module in model.named_modules():
        if prefix and name.startswith(prefix):
            continue
        if isinstance(module, (torch.nn.Conv2d, torch.nn.ConvTranspose2d)):
            fan_in = (module.in_channels
                      * module.kernel_size[0] * module.kernel_size[1])
            bound = 1.0 / math.sqrt(fan_in)
            max_abs = float(module.weight.detach().abs().max())
            assert max_abs <= bound * (1 + 1e-6)
            checked += 1
        elif isinstance(module, torch.nn.BatchNorm2d):
            assert torch.all(module.weight == 1.0)
            assert torch.all(module.bias == 0.0)
            checked += 1
    assert checked > 0
    _ok(f"{arch} weights stay within 1/sqrt(fan-in), norm layers at identity")


def test_frozen_encoder_survives_an_optimizer_step():
    model = xavier_init(build_model("transfer_resnet34"), seed=0)
    freeze_encoder(model)
    frozen_before = {n: p.detach().clone()
                     for n, p in model.named_parameters() if not p.requires_grad}
    trainable_before = {n: p.detach().clone()
                        for n, p in model.named_parameters() if p.requires_grad}
    assert frozen_before and trainable_before
    opt = torch.optim.Adam(trainable_parameters(model), lr=0.005)
    torch.manual_seed(0)
    x = torch.rand(2, 3, 224, 224)
    y = torch.randint(0, 21, (2, 224, 224))
    model.train()
    loss = cross_entropy(model(x), y)
    opt.zero_grad()
    loss.backward()
    opt.step()
    for n, p in model.named_parameters():
        if not p.requires_grad:
            assert torch.equal(frozen_before[n], p), n
    changed = sum(not torch.equal(trainable_before[n], p)
                  for n, p in model.named_parameters() if p.requires_grad)
    assert changed >= 1
    _ok("frozen encoder bit-identical after an optimizer step; decoder moved")


def test_early_stopping_gap_equals_patience():
    expected_pairs = [(10, 5), (13, 8), (37, 32), (15, 10), (17, 12),
                      (14, 9), (11, 6)]
    for stop_expected, best_expected in expected_pairs:
        stopper = EarlyStopping(patience=5)
        epoch = 0
        while True:
            epoch += 1
            loss = 2.0 - 0.1 * epoch if epoch <= best_expected else 2.0
            if stopper.update(epoch, loss):
                break
        assert epoch == stop_expected
        assert stopper.best_epoch == best_expected
        assert epoch - stopper.best_epoch == 5
    _ok("early stopping halts exactly patience epochs after the best one")


def test_tiny_set_overfit_reaches_target_accuracy():
    samples = half_split_samples(8)
    model = xavier_init(build_model("fcn_baseline"), seed=0)
    opt = torch.optim.Adam(model.parameters(), lr=0.005)
    batches = make_batches(samples, batch_size=8)
    initial = None
    final = None
    for _ in range(100):
        final = train_epoch(model, batches, opt)
        if initial is None:
            initial = final.loss
        if final.pixel_accuracy >= 0.95 and final.loss < 0.25 * initial:
            break
    assert final.pixel_accuracy >= 0.95, f"plateaued at {final.pixel_accuracy:.4f}"
    assert final.loss < 0.25 * initial, (
        f"loss only fell to {final.loss / initial:.2%} of the initial value")
    _ok("8-sample overfit: accuracy >= 0.95 and loss under 25% of start "
        "within 100 epochs")


@pytest.mark.parametrize("arch", ARCHITECTURES)
def test_gradients_reach_every_trainable_tensor(arch):
    model = xavier_init(build_model(arch), seed=1)
    if model.spec.frozen_prefix is not None:
        freeze_encoder(model)
    model.train()
    torch.manual_seed(1)
    x = torch.rand(2, 3, 224, 224)
    y = torch.randint(0, 21, (2, 224, 224))
    assert len(torch.unique(y)) >= 2
    loss = cross_entropy(model(x), y)
    loss.backward()
    silent = [n for n, p in model.named_parameters()
              if p.requires_grad and (p.grad is None
                                      or not bool((p.grad != 0).any()))]
    assert not silent, f"no gradient signal in: {silent[:5]}"
    _ok(f"{arch}: every trainable tensor received a nonzero gradient")


@pytest.mark.slow
@pytest.mark.skipif(not os.environ.get("VOCSEG_DATA_ROOT"),
                    reason="needs the real dataset (set VOCSEG_DATA_ROOT)")
def test_pretrained_encoder_beats_scratch_baseline_on_real_data():
    """Short-budget sanity check of the headline ranking on the real splits."""
    root = DatasetRoot(os.environ["VOCSEG_DATA_ROOT"])
    train = load_split_samples(root, "train")
    val = load_split_samples(root, "val")

    def best_val_miou(preset_name):
        cfg = load_preset(preset_name)
        cfg = dataclasses.replace(cfg, epochs_max=15)
        backbone = os.environ.get("VOCSEG_RESNET34_WEIGHTS")
        model = build_model(cfg.arch, backbone_weights=backbone)
        xavier_init(model, cfg.seed)
        if model.spec.frozen_prefix is not None:
            freeze_encoder(model)
        weights = None
        if cfg.class_weights:
            from vocseg.data import class_pixel_counts
            weights = class_weights(class_pixel_counts(train))
        result = fit(model, train, val, cfg.train_config(),
                     class_weights=weights,
                     augment_policy=cfg.augment_policy())
        return max(r.val.mean_iou for r in result.records)

    scratch = best_val_miou("baseline")
    pretrained = best_val_miou("transfer")
    assert pretrained > scratch, (
        f"transfer mIoU {pretrained:.4f} did not beat baseline {scratch:.4f}")
    _ok("frozen pretrained encoder outscores the scratch baseline on val mIoU")


def test_seeded_runs_produce_identical_logs(voc_root, tmp_path):
    base = load_preset("baseline")
    base = dataclasses.replace(base, epochs_max=2)
    logs = []
    for attempt in ("a", "b"):
        cfg = with_overrides(base, seed=123, data_root=str(voc_root),
                             out_dir=str(tmp_path / attempt))
        artifacts = run_experiment(cfg)
        logs.append(artifacts.metrics_path.read_bytes())
    assert logs[0] == logs[1]
    _ok("two identically-seeded runs wrote byte-identical metrics logs")
