"""Layered run configuration: defaults < config file < command-line overrides.

Every tunable default lives here under a flat dotted key so a run can be
reproduced from its config-lock file alone. Unknown keys are rejected rather
than silently ignored; values must keep the type of their default.
"""

from __future__ import annotations

import json
import os

from .beamforming import KINECT_OFFSETS
from .dsp import StftConfig
from .net.train import TrainConfig
from .room import ScenePriors
from .wpe import WpeConfig

DEFAULTS = {
    "sample_rate": 16000,
    "stft.frame_len": 400,
    "stft.hop": 160,
    "stft.fft_size": 512,
    "beam.mic_offsets": list(KINECT_OFFSETS),
    "room.absorption": 0.35,
    "room.max_order": 10,
    "scene.nominal_height": 2.5,
    "scene.nominal_width": 6.0,
    "scene.nominal_depth": 6.0,
    "scene.dim_jitter": 0.2,
    "scene.speech_aoi_deg": 45.0,
    "scene.noise_aoi_deg": -45.0,
    "scene.aoi_jitter_deg": 30.0,
    "scene.elev_jitter_deg": 10.0,
    "scene.dist_min": 1.6,
    "scene.dist_max": 2.4,
    "scene.clearance": 1.0,
    "scene.max_rejects": 10000,
    "dataset.count_train": 100,
    "dataset.count_dev": 20,
    "dataset.count_test": 20,
    "model.channels": 257,
    "model.taps": 3,
    "model.dilations": [1, 2, 4, 8],
    "model.fusion": "cbp",
    "model.input_mode": "both",
    "model.d_out": 0,  # 0 means: match model.channels
    "model.bn_eps": 1e-5,
    "model.bn_momentum": 0.1,
    "train.lr": 1e-3,
    "train.beta1": 0.9,
    "train.beta2": 0.999,
    "train.eps": 1e-8,
    "train.batch_size": 8,
    "train.max_epochs": 100,
    "train.window_frames": 160,
    "train.log_features": False,
    "wpe.taps": 10,
    "wpe.delay": 3,
    "wpe.iterations": 3,
    "wpe.power_floor": 1e-10,
    "eval.max_lag": 800,
}

LOCK_FILENAME = "config-lock.json"


def _check_value(key: str, value):
    default = DEFAULTS[key]
    # bool is an int subclass, so test it first
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ValueError(f"config key {key!r} expects a bool, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"config key {key!r} expects an int, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"config key {key!r} expects a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ValueError(f"config key {key!r} expects a string, got {value!r}")
        return value
    if isinstance(default, list):
        if not isinstance(value, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        ):
            raise ValueError(f"config key {key!r} expects a list of numbers, got {value!r}")
        return list(value)
    raise TypeError(f"unsupported default type for {key!r}")


def _merge(cfg: dict, updates: dict, source: str) -> None:
    unknown = sorted(set(updates) - set(DEFAULTS))
    if unknown:
        raise ValueError(f"unknown config keys from {source}: {unknown}")
    for key, value in updates.items():
        cfg[key] = _check_value(key, value)


def load_config(path=None, overrides: dict | None = None) -> dict:
    """Merge DEFAULTS, then an optional JSON file, then explicit overrides."""
    cfg = {k: (list(v) if isinstance(v, list) else v) for k, v in DEFAULTS.items()}
    if path is not None:
        if not os.path.isfile(path):
            raise FileNotFoundError(f"config file not found: {path}")
        with open(path) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError("config file must hold a JSON object")
        _merge(cfg, data, f"file {path}")
    if overrides:
        _merge(cfg, overrides, "command line")
    return cfg


def parse_overrides(pairs) -> dict:
    """Parse KEY=VALUE strings; values are JSON, falling back to raw strings."""
    out = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise ValueError(f"override must look like KEY=VALUE, got {pair!r}")
        key, _, raw = pair.partition("=")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def write_config_lock(cfg: dict, out_dir) -> None:
    """Echo the effective config into the output directory.

    The lock holds only the merged settings (no paths, no timestamps), so two
    runs with equal settings produce byte-identical locks.
    """
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, LOCK_FILENAME), "w") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---- adapters into the module-level config types ----------------------------


def stft_config(cfg: dict) -> StftConfig:
    return StftConfig(frame_len=cfg["stft.frame_len"], hop=cfg["stft.hop"],
                      fft_size=cfg["stft.fft_size"])


def scene_priors(cfg: dict) -> ScenePriors:
    return ScenePriors(
        nominal_height=cfg["scene.nominal_height"],
        nominal_width=cfg["scene.nominal_width"],
        nominal_depth=cfg["scene.nominal_depth"],
        dim_jitter=cfg["scene.dim_jitter"],
        speech_aoi_deg=cfg["scene.speech_aoi_deg"],
        noise_aoi_deg=cfg["scene.noise_aoi_deg"],
        aoi_jitter_deg=cfg["scene.aoi_jitter_deg"],
        elev_jitter_deg=cfg["scene.elev_jitter_deg"],
        dist_min=cfg["scene.dist_min"],
        dist_max=cfg["scene.dist_max"],
        clearance=cfg["scene.clearance"],
        absorption=cfg["room.absorption"],
        max_order=cfg["room.max_order"],
        mic_offsets=tuple(cfg["beam.mic_offsets"]),
        max_rejects=cfg["scene.max_rejects"],
    )


def model_kwargs(cfg: dict, seed: int) -> dict:
    return {
        "channels": cfg["model.channels"],
        "dilations": tuple(cfg["model.dilations"]),
        "taps": cfg["model.taps"],
        "fusion": cfg["model.fusion"],
        "input_mode": cfg["model.input_mode"],
        "d_out": cfg["model.d_out"] or None,
        "bn_eps": cfg["model.bn_eps"],
        "bn_momentum": cfg["model.bn_momentum"],
        "seed": seed,
    }


def train_config(cfg: dict, seed: int) -> TrainConfig:
    return TrainConfig(lr=cfg["train.lr"], beta1=cfg["train.beta1"],
                       beta2=cfg["train.beta2"], eps=cfg["train.eps"],
                       batch_size=cfg["train.batch_size"],
                       max_epochs=cfg["train.max_epochs"], seed=seed)


def wpe_config(cfg: dict) -> WpeConfig:
    return WpeConfig(taps=cfg["wpe.taps"], delay=cfg["wpe.delay"],
                     iterations=cfg["wpe.iterations"],
                     power_floor=cfg["wpe.power_floor"])
