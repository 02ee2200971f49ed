"""Config parsing, preset catalogue, overrides."""

import pytest

from vocseg.config import (PRESETS, ConfigError, ExperimentConfig, load_config,
                           load_preset, parse_config_text, resolve_config,
                           with_overrides)

GOOD = """\
# comment line
name = demo
arch = fcn_baseline
scheduler = cosine
t_max = 50
augment = true
class_weights = false
lr_max = 0.005
epochs_max = 10
patience = 5
batch_size = 4
seed = 3
"""


def test_parse_round_trip():
    cfg = parse_config_text(GOOD)
    assert cfg.name == "demo"
    assert cfg.arch == "fcn_baseline"
    assert cfg.scheduler == "cosine"
    assert cfg.t_max == 50
    assert cfg.augment is True
    assert cfg.class_weights is False
    assert cfg.lr_max == 0.005
    assert cfg.seed == 3


def test_unknown_key_is_named_with_line():
    text = GOOD + "warmup = 3\n"
    with pytest.raises(ConfigError, match=r"13: unknown key 'warmup'"):
        parse_config_text(text)


def test_duplicate_key_rejected():
    with pytest.raises(ConfigError, match="duplicate key 'name'"):
        parse_config_text(GOOD + "name = again\n")


def test_bad_value_type_is_reported():
    with pytest.raises(ConfigError, match="epochs_max expects int"):
        parse_config_text(GOOD.replace("epochs_max = 10", "epochs_max = ten"))
    with pytest.raises(ConfigError, match="augment expects true/false"):
        parse_config_text(GOOD.replace("augment = true", "augment = maybe"))


def test_line_without_equals_rejected():
    with pytest.raises(ConfigError, match="key = value"):
        parse_config_text("name demo\n")


def test_missing_required_keys_are_listed():
    with pytest.raises(ConfigError, match="missing required keys.*arch"):
        parse_config_text("name = x\n")


def test_unknown_arch_and_scheduler_rejected():
    with pytest.raises(ConfigError, match="arch must be one of"):
        parse_config_text(GOOD.replace("arch = fcn_baseline", "arch = vgg"))
    with pytest.raises(ConfigError, match="scheduler must be one of"):
        parse_config_text(GOOD.replace("scheduler = cosine", "scheduler = step"))


def test_numeric_ranges_validated():
    with pytest.raises(ConfigError):
        parse_config_text(GOOD.replace("lr_max = 0.005", "lr_max = 0"))
    with pytest.raises(ConfigError):
        parse_config_text(GOOD.replace("patience = 5", "patience = 0"))


def test_every_preset_loads_and_validates():
    seen = set()
    for name in PRESETS:
        cfg = load_preset(name)
        assert cfg.name == name
        cfg.train_config()
        seen.add((cfg.arch, cfg.scheduler, cfg.augment, cfg.class_weights))
    assert len(PRESETS) == 7
    # presets form a cumulative ladder plus three architecture swaps
    assert ("fcn_baseline", "none", False, False) in seen
    assert ("fcn_baseline", "cosine", True, True) in seen


def test_presets_toggle_features_cumulatively():
    base = load_preset("baseline")
    ann = load_preset("annealing")
    aug = load_preset("augmentation")
    wts = load_preset("weights")
    assert base.scheduler == "none" and not base.augment and not base.class_weights
    assert ann.scheduler == "cosine" and not ann.augment
    assert aug.scheduler == "cosine" and aug.augment and not aug.class_weights
    assert wts.scheduler == "cosine" and wts.augment and wts.class_weights
    assert {load_preset(n).arch for n in ("adv_fcn", "transfer", "unet")} == {
        "advanced_fcn", "transfer_resnet34", "unet"}


def test_preset_cosine_periods():
    assert load_preset("annealing").t_max == 50
    assert load_preset("adv_fcn").t_max == 30
    assert load_preset("transfer").t_max == 40
    assert load_preset("unet").t_max == 40


def test_unknown_preset_rejected():
    with pytest.raises(ConfigError, match="unknown preset"):
        load_preset("imagenet")


def test_load_config_from_file(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text(GOOD)
    cfg = load_config(path)
    assert cfg.name == "demo"


def test_resolve_config_prefers_presets(tmp_path):
    assert resolve_config("unet").arch == "unet"
    path = tmp_path / "run.cfg"
    path.write_text(GOOD)
    assert resolve_config(str(path)).name == "demo"


def test_with_overrides_replaces_only_given_fields():
    cfg = load_preset("baseline")
    out = with_overrides(cfg, seed=9, data_root="/data", out_dir="/runs")
    assert (out.seed, out.data_root, out.out_dir) == (9, "/data", "/runs")
    assert out.arch == cfg.arch
    same = with_overrides(cfg)
    assert same == cfg


def test_augment_policy_only_when_enabled():
    assert load_preset("baseline").augment_policy() is None
    policy = load_preset("weights").augment_policy()
    assert policy is not None and policy.flip_prob == 0.5
    assert policy.crop_size == 180 and policy.output_size == 224
    assert policy.rotation_range_deg == (-5.0, 5.0)


def test_experiment_config_direct_construction_validates():
    with pytest.raises(ConfigError):
        ExperimentConfig(name="x", arch="nope")
    with pytest.raises(ConfigError):
        ExperimentConfig(name="", arch="unet")
