"""Experiment configs: flat key = value files, plus the bundled presets."""

import dataclasses
from dataclasses import dataclass
from importlib import resources
from typing import Optional

from .engine import SCHEDULERS, TrainConfig
from .models import ARCHITECTURES
from .transforms import AugmentPolicy

PRESETS = ("baseline", "annealing", "augmentation", "weights",
           "adv_fcn", "transfer", "unet")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    arch: str
    scheduler: str = "none"
    t_max: Optional[int] = None
    augment: bool = False
    class_weights: bool = False
    lr_max: float = 0.005
    lr_min: float = 0.0
    epochs_max: int = 50
    patience: int = 5
    batch_size: int = 16
    seed: int = 0
    data_root: Optional[str] = None
    out_dir: Optional[str] = None
    backbone_weights: Optional[str] = None

    def __post_init__(self):
        if self.arch not in ARCHITECTURES:
            raise ConfigError(f"arch must be one of {ARCHITECTURES}, "
                              f"got {self.arch!r}")
        if self.scheduler not in SCHEDULERS:
            raise ConfigError(f"scheduler must be one of {SCHEDULERS}, "
                              f"got {self.scheduler!r}")
        if not self.name:
            raise ConfigError("name must be non-empty")
        # delegate numeric range checks
        self.train_config()

    def train_config(self) -> TrainConfig:
        try:
            return TrainConfig(lr_max=self.lr_max, lr_min=self.lr_min,
                               epochs_max=self.epochs_max, patience=self.patience,
                               scheduler=self.scheduler, t_max=self.t_max,
                               batch_size=self.batch_size, seed=self.seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def augment_policy(self) -> Optional[AugmentPolicy]:
        return AugmentPolicy() if self.augment else None


_BOOL_VALUES = {"true": True, "false": False, "1": True, "0": False,
                "yes": True, "no": False}

_COERCERS = {
    "name": str,
    "arch": str,
    "scheduler": str,
    "t_max": int,
    "augment": "bool",
    "class_weights": "bool",
    "lr_max": float,
    "lr_min": float,
    "epochs_max": int,
    "patience": int,
    "batch_size": int,
    "seed": int,
    "data_root": str,
    "out_dir": str,
    "backbone_weights": str,
}


def _coerce(key, raw, source, lineno):
    where = f"{source}:{lineno}"
    kind = _COERCERS[key]
    if kind == "bool":
        if raw.lower() not in _BOOL_VALUES:
            raise ConfigError(f"{where}: {key} expects true/false, got {raw!r}")
        return _BOOL_VALUES[raw.lower()]
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{where}: {key} expects {kind.__name__}, "
                          f"got {raw!r}") from None


def parse_config_text(text: str, source: str = "<config>") -> ExperimentConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', "
                              f"got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _COERCERS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = _coerce(key, raw, source, lineno)
    try:
        return ExperimentConfig(**values)
    except TypeError:
        missing = [f.name for f in dataclasses.fields(ExperimentConfig)
                   if f.default is dataclasses.MISSING and f.name not in values]
        raise ConfigError(f"{source}: missing required keys {missing}") from None


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), source=str(path))


def load_preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; expected one of {PRESETS}")
    text = (resources.files("vocseg") / "presets" / f"{name}.cfg").read_text()
    return parse_config_text(text, source=f"preset:{name}")


def resolve_config(name_or_path: str) -> ExperimentConfig:
    """Treat the argument as a preset name first, else a config file path."""
    if name_or_path in PRESETS:
        return load_preset(name_or_path)
    return load_config(name_or_path)


def with_overrides(cfg: ExperimentConfig, seed: Optional[int] = None,
                   data_root: Optional[str] = None,
                   out_dir: Optional[str] = None) -> ExperimentConfig:
    updates = {}
    if seed is not None:
        updates["seed"] = seed
    if data_root is not None:
        updates["data_root"] = data_root
    if out_dir is not None:
        updates["out_dir"] = out_dir
    return dataclasses.replace(cfg, **updates) if updates else cfg
