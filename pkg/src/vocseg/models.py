"""The four encoder-decoder architectures, built from explicit layer plans.

Each architecture is a flat list of LayerPlan rows (mirroring its design
table) interpreted by a single SegNet module. Skip connections are wired by
naming the encoder layer whose output is concatenated onto a decoder
layer's input; channel and spatial arithmetic is validated when the plan is
assembled and again at runtime.

All models emit raw logits (B, num_classes, 224, 224); the softmax lives in
the loss / inference path.
"""

import math
from dataclasses import dataclass
from typing import Optional

import torch
import torchvision
from torch import nn

from .data import INPUT_SIZE
from .palette import NUM_CLASSES

ARCHITECTURES = ("fcn_baseline", "advanced_fcn", "transfer_resnet34", "unet")

# ImageNet channel statistics the pretrained encoder was trained with.
IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

BACKBONE_STRIDE = 32  # resnet34 total downsampling factor


class ModelBuildError(ValueError):
    """Unknown architecture or inconsistent layer plan."""


@dataclass(frozen=True)
class LayerPlan:
    name: str
    kind: str  # conv | transposed_conv | maxpool | backbone
    in_channels: int
    out_channels: int
    kernel: int = 3
    stride: int = 1
    padding: int = 1
    skip_source: Optional[str] = None  # encoder layer concatenated onto the input
    batch_norm: bool = True
    activation: str = "relu"  # relu | none


@dataclass(frozen=True)
class ModelSpec:
    arch_id: str
    num_classes: int
    layers: tuple
    frozen_prefix: Optional[str] = None  # layer name of the pretrained encoder
    bn_after_activation: bool = False


def _conv(name, cin, cout, k=3, s=2, p=1, skip=None):
    return LayerPlan(name, "conv", cin, cout, kernel=k, stride=s, padding=p,
                     skip_source=skip)


def _tconv(name, cin, cout, k=3, s=2, p=1, skip=None):
    return LayerPlan(name, "transposed_conv", cin, cout, kernel=k, stride=s,
                     padding=p, skip_source=skip)


def _pool(name, channels):
    return LayerPlan(name, "maxpool", channels, channels, kernel=2, stride=2,
                     padding=0, batch_norm=False, activation="none")


def _classifier(cin, cout):
    return LayerPlan("classifier", "conv", cin, cout, kernel=1, stride=1,
                     padding=0, batch_norm=False, activation="none")


def _fcn_baseline_layers(num_classes):
    return (
        _conv("conv1", 3, 32),
        _conv("conv2", 32, 64),
        _conv("conv3", 64, 128),
        _conv("conv4", 128, 256),
        _conv("conv5", 256, 512),
        _tconv("deconv1", 512, 512),
        _tconv("deconv2", 512, 256),
        _tconv("deconv3", 256, 128),
        _tconv("deconv4", 128, 64),
        _tconv("deconv5", 64, 32),
        _classifier(32, num_classes),
    )


def _advanced_fcn_layers(num_classes):
    return (
        _conv("conv1", 3, 32),
        _conv("conv2", 32, 64),
        _conv("conv3", 64, 128),
        _conv("conv4", 128, 256),
        _conv("conv5", 256, 512),
        _conv("conv6", 512, 1024, s=1),
        _conv("conv7", 1024, 2048, s=1),
        _tconv("deconv1", 2048, 2048, s=1),
        _tconv("deconv2", 2048 + 1024, 1024, s=1, skip="conv6"),
        _tconv("deconv3", 1024 + 512, 512, skip="conv5"),
        _tconv("deconv4", 512 + 256, 256, skip="conv4"),
        _tconv("deconv5", 256 + 128, 128, skip="conv3"),
        _tconv("deconv6", 128 + 64, 64, skip="conv2"),
        _tconv("deconv7", 64 + 32, 32, skip="conv1"),
        _classifier(32, num_classes),
    )


def _transfer_layers(num_classes):
    return (
        LayerPlan("backbone", "backbone", 3, 512, kernel=0, stride=BACKBONE_STRIDE,
                  padding=0, batch_norm=False, activation="none"),
        _tconv("deconv1", 512, 512),
        _tconv("deconv2", 512, 256),
        _tconv("deconv3", 256, 128),
        _tconv("deconv4", 128, 64),
        _tconv("deconv5", 64, 32),
        _classifier(32, num_classes),
    )


def _unet_layers(num_classes):
    return (
        _conv("conv1", 3, 64, s=1),
        _conv("conv2", 64, 64, s=1),
        _pool("pool1", 64),
        _conv("conv3", 64, 128, s=1),
        _conv("conv4", 128, 128, s=1),
        _pool("pool2", 128),
        _conv("conv5", 128, 256, s=1),
        _conv("conv6", 256, 256, s=1),
        _pool("pool3", 256),
        _conv("conv7", 256, 512, s=1),
        _conv("conv8", 512, 512, s=1),
        _pool("pool4", 512),
        _conv("conv9", 512, 1024, s=1),
        _conv("conv10", 1024, 1024, s=1),
        _tconv("deconv1", 1024, 512, k=2, s=2, p=0),
        _conv("conv11", 512 + 512, 512, s=1, skip="conv8"),
        _conv("conv12", 512, 512, s=1),
        _tconv("deconv2", 512, 256, k=2, s=2, p=0),
        _conv("conv13", 256 + 256, 256, s=1, skip="conv6"),
        _conv("conv14", 256, 256, s=1),
        _tconv("deconv3", 256, 128, k=2, s=2, p=0),
        _conv("conv15", 128 + 128, 128, s=1, skip="conv4"),
        _conv("conv16", 128, 128, s=1),
        _tconv("deconv4", 128, 64, k=2, s=2, p=0),
        _conv("conv17", 64 + 64, 64, s=1, skip="conv2"),
        _conv("conv18", 64, 64, s=1),
        _classifier(64, num_classes),
    )


_PLAN_BUILDERS = {
    "fcn_baseline": _fcn_baseline_layers,
    "advanced_fcn": _advanced_fcn_layers,
    "transfer_resnet34": _transfer_layers,
    "unet": _unet_layers,
}


def _output_padding(plan: LayerPlan) -> int:
    # chosen so a stride-s transposed conv upsamples by exactly s
    return max(plan.stride - plan.kernel + 2 * plan.padding, 0)


def _out_size(plan: LayerPlan, size: int) -> int:
    if plan.kind == "backbone":
        return size // BACKBONE_STRIDE
    if plan.kind == "transposed_conv":
        return ((size - 1) * plan.stride - 2 * plan.padding + plan.kernel
                + _output_padding(plan))
    return (size + 2 * plan.padding - plan.kernel) // plan.stride + 1


def model_spec(arch_id: str, num_classes: int = NUM_CLASSES) -> ModelSpec:
    """Assemble and validate the layer plan for one architecture."""
    if arch_id not in _PLAN_BUILDERS:
        raise ModelBuildError(f"unknown architecture {arch_id!r}; "
                              f"expected one of {ARCHITECTURES}")
    layers = _PLAN_BUILDERS[arch_id](num_classes)
    spec = ModelSpec(
        arch_id=arch_id,
        num_classes=num_classes,
        layers=layers,
        frozen_prefix="backbone" if arch_id == "transfer_resnet34" else None,
        bn_after_activation=arch_id in ("transfer_resnet34", "unet"),
    )
    _validate_plan(spec)
    return spec


def _validate_plan(spec: ModelSpec):
    channels = {}
    sizes = {}
    prev_channels = 3
    size = INPUT_SIZE
    prev_name = "input"
    for plan in spec.layers:
        expected_in = prev_channels
        if plan.skip_source is not None:
            if plan.skip_source not in channels:
                raise ModelBuildError(
                    f"{spec.arch_id}: layer {plan.name!r} references unknown "
                    f"skip source {plan.skip_source!r}")
            if sizes[plan.skip_source] != size:
                raise ModelBuildError(
                    f"{spec.arch_id}: concat at {plan.name!r} joins unequal "
                    f"spatial sizes {size} (from {prev_name}) and "
                    f"{sizes[plan.skip_source]} (from {plan.skip_source})")
            expected_in += channels[plan.skip_source]
        if expected_in != plan.in_channels:
            raise ModelBuildError(
                f"{spec.arch_id}: layer {plan.name!r} declares "
                f"{plan.in_channels} in-channels but receives {expected_in} "
                f"(from {prev_name}"
                + (f" + {plan.skip_source}" if plan.skip_source else "") + ")")
        size = _out_size(plan, size)
        channels[plan.name] = plan.out_channels
        sizes[plan.name] = size
        prev_channels = plan.out_channels
        prev_name = plan.name
    if prev_channels != spec.num_classes or size != INPUT_SIZE:
        raise ModelBuildError(
            f"{spec.arch_id}: final layer emits {prev_channels}x{size}x{size}, "
            f"expected {spec.num_classes}x{INPUT_SIZE}x{INPUT_SIZE}")


class _NormalizeInput(nn.Module):
    """Standardize [0,1] inputs with the pretrained encoder's statistics."""

    def __init__(self, mean=IMAGENET_MEAN, std=IMAGENET_STD):
        super().__init__()
        self.register_buffer("mean", torch.tensor(mean).view(1, 3, 1, 1))
        self.register_buffer("std", torch.tensor(std).view(1, 3, 1, 1))

    def forward(self, x):
        return (x - self.mean) / self.std


def _resnet34_trunk(weights_path=None):
    """resnet34 without the pooling/fully-connected head: (B,3,H,W) -> (B,512,H/32,W/32)."""
    net = torchvision.models.resnet34(weights=None)
    if weights_path is not None:
        state = torch.load(weights_path, map_location="cpu")
        net.load_state_dict(state)
    return nn.Sequential(_NormalizeInput(), *list(net.children())[:-2])


def _build_block(plan: LayerPlan, bn_after_activation: bool, backbone_weights):
    if plan.kind == "backbone":
        return _resnet34_trunk(backbone_weights)
    if plan.kind == "maxpool":
        return nn.MaxPool2d(plan.kernel, plan.stride)
    if plan.kind == "conv":
        op = nn.Conv2d(plan.in_channels, plan.out_channels, plan.kernel,
                       stride=plan.stride, padding=plan.padding)
    elif plan.kind == "transposed_conv":
        op = nn.ConvTranspose2d(plan.in_channels, plan.out_channels, plan.kernel,
                                stride=plan.stride, padding=plan.padding,
                                output_padding=_output_padding(plan))
    else:
        raise ModelBuildError(f"unknown layer kind {plan.kind!r}")
    stages = [op]
    if plan.activation == "relu" and plan.batch_norm:
        if bn_after_activation:
            stages += [nn.ReLU(inplace=True), nn.BatchNorm2d(plan.out_channels)]
        else:
            stages += [nn.BatchNorm2d(plan.out_channels), nn.ReLU(inplace=True)]
    elif plan.batch_norm:
        stages.append(nn.BatchNorm2d(plan.out_channels))
    elif plan.activation == "relu":
        stages.append(nn.ReLU(inplace=True))
    return stages[0] if len(stages) == 1 else nn.Sequential(*stages)


class SegNet(nn.Module):
    """Interprets a ModelSpec layer plan as a forward pass with skip concat."""

    def __init__(self, spec: ModelSpec, backbone_weights=None):
        super().__init__()
        self.spec = spec
        self.blocks = nn.ModuleDict({
            plan.name: _build_block(plan, spec.bn_after_activation, backbone_weights)
            for plan in spec.layers
        })
        self._skip_sources = frozenset(
            p.skip_source for p in spec.layers if p.skip_source is not None)

    @property
    def arch_id(self):
        return self.spec.arch_id

    def forward(self, x):
        if (x.dim() != 4 or x.shape[1] != 3
                or x.shape[2] != INPUT_SIZE or x.shape[3] != INPUT_SIZE):
            raise ValueError(f"expected input (B, 3, {INPUT_SIZE}, {INPUT_SIZE}), "
                             f"got {tuple(x.shape)}")
        stash = {}
        out = x
        for plan in self.spec.layers:
            if plan.skip_source is not None:
                skip = stash[plan.skip_source]
                if skip.shape[2:] != out.shape[2:]:
                    raise RuntimeError(
                        f"spatial mismatch at {plan.name!r}: decoder "
                        f"{tuple(out.shape[2:])} vs skip {plan.skip_source!r} "
                        f"{tuple(skip.shape[2:])}")
                out = torch.cat([out, skip], dim=1)
            out = self.blocks[plan.name](out)
            if plan.name in self._skip_sources:
                stash[plan.name] = out
        return out


def build_model(arch_id: str, num_classes: int = NUM_CLASSES,
                backbone_weights=None) -> SegNet:
    """Construct one of the four architectures (fresh, uninitialized decoder).

    backbone_weights, when given, is a path to a resnet34 classification
    state dict loaded into the transfer architecture's encoder; it is
    ignored by the other architectures.
    """
    spec = model_spec(arch_id, num_classes)
    if spec.frozen_prefix is None:
        backbone_weights = None
    return SegNet(spec, backbone_weights=backbone_weights)


def xavier_init(model: SegNet, seed: int = 0) -> SegNet:
    """Reinitialize all non-pretrained layers.

    Conv and transposed-conv weights are drawn from U(-1/sqrt(n), 1/sqrt(n))
    with n = in_channels * kernel^2; biases from N(0, 0.01); batch-norm
    resets to scale 1, shift 0. The pretrained encoder, when present, is
    left untouched.
    """
    gen = torch.Generator().manual_seed(seed)
    skip_prefix = None
    if model.spec.frozen_prefix is not None:
        skip_prefix = f"blocks.{model.spec.frozen_prefix}"
    for name, module in model.named_modules():
        if skip_prefix is not None and name.startswith(skip_prefix):
            continue
        if isinstance(module, (nn.Conv2d, nn.ConvTranspose2d)):
            fan_in = module.in_channels * module.kernel_size[0] * module.kernel_size[1]
            bound = 1.0 / math.sqrt(fan_in)
            with torch.no_grad():
                module.weight.uniform_(-bound, bound, generator=gen)
                if module.bias is not None:
                    module.bias.normal_(0.0, 0.01, generator=gen)
        elif isinstance(module, nn.BatchNorm2d):
            with torch.no_grad():
                module.weight.fill_(1.0)
                module.bias.zero_()
            module.reset_running_stats()
    return model


def freeze_encoder(model: SegNet) -> SegNet:
    """Mark the pretrained encoder non-trainable; decoder stays trainable."""
    if model.spec.frozen_prefix is None:
        raise ValueError(f"architecture {model.spec.arch_id!r} has no "
                         f"pretrained encoder to freeze")
    for p in model.blocks[model.spec.frozen_prefix].parameters():
        p.requires_grad_(False)
    return model


def param_count(model: nn.Module):
    """(total, trainable) parameter element counts."""
    total = sum(p.numel() for p in model.parameters())
    trainable = sum(p.numel() for p in model.parameters() if p.requires_grad)
    return total, trainable


def trainable_parameters(model: nn.Module):
    return [p for p in model.parameters() if p.requires_grad]


def save_checkpoint(path, model: SegNet, epoch=None, metrics=None):
    """Persist parameters plus enough descriptor to rebuild the model."""
    payload = {
        "arch_id": model.spec.arch_id,
        "num_classes": model.spec.num_classes,
        "state_dict": model.state_dict(),
        "epoch": epoch,
        "metrics": metrics,
    }
    torch.save(payload, path)
    return path


def load_checkpoint(path):
    """Rebuild the model a checkpoint was saved from; returns (model, payload)."""
    payload = torch.load(path, map_location="cpu", weights_only=True)
    model = build_model(payload["arch_id"], payload["num_classes"])
    model.load_state_dict(payload["state_dict"])
    if model.spec.frozen_prefix is not None:
        freeze_encoder(model)
    return model, payload
