import json
import os

import pytest

from beamsep import config as cfgmod
from beamsep.dsp import StftConfig
from beamsep.net.train import TrainConfig
from beamsep.room import ScenePriors
from beamsep.wpe import WpeConfig


class TestLoadConfig:
    def test_defaults_round_trip(self):
        cfg = cfgmod.load_config()
        assert cfg == cfgmod.DEFAULTS
        assert cfg is not cfgmod.DEFAULTS
        # mutating the copy must not leak into the defaults
        cfg["model.dilations"].append(16)
        assert cfgmod.DEFAULTS["model.dilations"] == [1, 2, 4, 8]

    def test_file_merge(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"train.lr": 0.01, "model.fusion": "concat"}))
        cfg = cfgmod.load_config(path)
        assert cfg["train.lr"] == 0.01
        assert cfg["model.fusion"] == "concat"
        assert cfg["train.batch_size"] == cfgmod.DEFAULTS["train.batch_size"]

    def test_overrides_beat_file(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"train.lr": 0.01}))
        cfg = cfgmod.load_config(path, {"train.lr": 0.5})
        assert cfg["train.lr"] == 0.5

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"train.momentum": 0.9}))
        with pytest.raises(ValueError, match="train.momentum"):
            cfgmod.load_config(path)
        with pytest.raises(ValueError, match="no.such"):
            cfgmod.load_config(None, {"no.such": 1})

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            cfgmod.load_config(tmp_path / "nope.json")

    def test_non_object_file(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text("[1, 2]")
        with pytest.raises(ValueError, match="JSON object"):
            cfgmod.load_config(path)

    def test_type_checks(self):
        with pytest.raises(ValueError, match="int"):
            cfgmod.load_config(None, {"train.batch_size": 2.5})
        with pytest.raises(ValueError, match="bool"):
            cfgmod.load_config(None, {"train.log_features": 1})
        with pytest.raises(ValueError, match="string"):
            cfgmod.load_config(None, {"model.fusion": 3})
        with pytest.raises(ValueError, match="list"):
            cfgmod.load_config(None, {"model.dilations": "1,2"})
        # ints are acceptable where a float is expected
        cfg = cfgmod.load_config(None, {"train.lr": 1})
        assert cfg["train.lr"] == 1.0
        assert isinstance(cfg["train.lr"], float)

    def test_bool_not_accepted_as_int(self):
        with pytest.raises(ValueError):
            cfgmod.load_config(None, {"train.batch_size": True})


class TestOverrideParsing:
    def test_json_values(self):
        out = cfgmod.parse_overrides(["train.lr=0.01", "model.dilations=[1,2]",
                                      "train.log_features=true"])
        assert out == {"train.lr": 0.01, "model.dilations": [1, 2],
                       "train.log_features": True}

    def test_raw_string_fallback(self):
        assert cfgmod.parse_overrides(["model.fusion=concat"]) == {
            "model.fusion": "concat"}

    def test_missing_equals(self):
        with pytest.raises(ValueError, match="KEY=VALUE"):
            cfgmod.parse_overrides(["train.lr"])


class TestConfigLock:
    def test_lock_is_settings_only_and_stable(self, tmp_path):
        cfg = cfgmod.load_config(None, {"train.lr": 0.01})
        cfgmod.write_config_lock(cfg, tmp_path / "a")
        cfgmod.write_config_lock(cfg, tmp_path / "b")
        lock_a = (tmp_path / "a" / cfgmod.LOCK_FILENAME).read_bytes()
        lock_b = (tmp_path / "b" / cfgmod.LOCK_FILENAME).read_bytes()
        assert lock_a == lock_b
        data = json.loads(lock_a)
        assert data == cfg
        assert not any(os.sep in str(v) for v in data.values() if isinstance(v, str))

    def test_lock_reloads_identically(self, tmp_path):
        cfg = cfgmod.load_config(None, {"model.fusion": "concat"})
        cfgmod.write_config_lock(cfg, tmp_path)
        again = cfgmod.load_config(tmp_path / cfgmod.LOCK_FILENAME)
        assert again == cfg


class TestAdapters:
    def test_stft_config(self):
        cfg = cfgmod.load_config(None, {"stft.hop": 200})
        sc = cfgmod.stft_config(cfg)
        assert isinstance(sc, StftConfig)
        assert (sc.frame_len, sc.hop, sc.fft_size) == (400, 200, 512)

    def test_scene_priors(self):
        cfg = cfgmod.load_config(None, {"scene.dist_min": 1.0,
                                        "room.absorption": 0.5})
        pr = cfgmod.scene_priors(cfg)
        assert isinstance(pr, ScenePriors)
        assert pr.dist_min == 1.0
        assert pr.absorption == 0.5
        assert pr.mic_offsets == tuple(cfg["beam.mic_offsets"])

    def test_model_kwargs_d_out_zero_means_channels(self):
        cfg = cfgmod.load_config()
        kw = cfgmod.model_kwargs(cfg, seed=7)
        assert kw["d_out"] is None
        assert kw["seed"] == 7
        assert kw["dilations"] == (1, 2, 4, 8)
        kw2 = cfgmod.model_kwargs(cfgmod.load_config(None, {"model.d_out": 64}), 0)
        assert kw2["d_out"] == 64

    def test_train_and_wpe_config(self):
        cfg = cfgmod.load_config(None, {"train.max_epochs": 3, "wpe.taps": 4})
        tc = cfgmod.train_config(cfg, seed=5)
        assert isinstance(tc, TrainConfig)
        assert (tc.max_epochs, tc.seed) == (3, 5)
        wc = cfgmod.wpe_config(cfg)
        assert isinstance(wc, WpeConfig)
        assert wc.taps == 4
