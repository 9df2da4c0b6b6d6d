"""Config dataclass validation and the key=value file format."""

import dataclasses

import numpy as np
import pytest

from minimax_dsac.config import (
    TrainConfig,
    config_to_text,
    load_config,
    parse_config,
    save_config,
)
from minimax_dsac.env import EnvConfig


class TestDefaults:
    def test_reference_values(self):
        cfg = TrainConfig()
        assert cfg.buffer_capacity == 500
        assert cfg.batch_size == 256
        assert cfg.hidden_sizes == (256, 256)
        assert cfg.adam_beta1 == 0.9 and cfg.adam_beta2 == 0.999
        assert (cfg.actor_lr_start, cfg.actor_lr_end) == (5e-5, 5e-6)
        assert (cfg.critic_lr_start, cfg.critic_lr_end) == (1e-4, 1e-5)
        assert (cfg.alpha_lr_start, cfg.alpha_lr_end) == (5e-5, 5e-6)
        assert cfg.gamma == 0.99
        assert cfg.tau == 0.001
        assert cfg.target_entropy == -1.0  # minus the protagonist action dims
        assert cfg.clip_boundary == 20.0
        assert cfg.lambda_a == 0.1 and cfg.lambda_u == 0.1
        assert cfg.eval_episodes == 20

    def test_validation(self):
        with pytest.raises(ValueError, match="gamma"):
            TrainConfig(gamma=0.0)
        with pytest.raises(ValueError, match="tau"):
            TrainConfig(tau=1.5)
        with pytest.raises(ValueError, match="exceed"):
            TrainConfig(actor_lr_start=1e-6, actor_lr_end=1e-5)
        with pytest.raises(ValueError, match="batch"):
            TrainConfig(batch_size=501, buffer_capacity=500)
        with pytest.raises(ValueError, match="algo"):
            TrainConfig(algo="ppo")


class TestFileFormat:
    def test_round_trip_every_field(self, tmp_path):
        cfg = TrainConfig(
            algo="dsac", seed=7, total_steps=123, hidden_sizes=(8, 4),
            gamma=0.95, buffer_capacity=999, batch_size=17,
            env=EnvConfig(dt=0.05, v_max=9.0),
        )
        path = tmp_path / "cfg.txt"
        save_config(cfg, path)
        assert load_config(path) == cfg

    def test_all_fields_addressable(self):
        text = config_to_text(TrainConfig())
        keys = {
            line.split("=")[0].strip()
            for line in text.splitlines()
            if "=" in line
        }
        for f in dataclasses.fields(TrainConfig):
            if f.name != "env":
                assert f.name in keys
        for f in dataclasses.fields(EnvConfig):
            assert f"env.{f.name}" in keys

    def test_comments_and_blanks_ignored(self):
        cfg = parse_config(
            """
            # a comment
            seed = 3   # trailing comment

            gamma = 0.9
            """
        )
        assert cfg.seed == 3
        assert cfg.gamma == 0.9

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError, match="unknown config key 'learning_rate'"):
            parse_config("learning_rate = 0.1")
        with pytest.raises(ValueError, match="env.bogus"):
            parse_config("env.bogus = 1")

    def test_malformed_line_rejected(self):
        with pytest.raises(ValueError, match="key = value"):
            parse_config("this is not a config line")

    def test_env_fields(self):
        cfg = parse_config("env.dt = 0.2\nenv.max_episode_steps = 50")
        assert cfg.env.dt == 0.2
        assert cfg.env.max_episode_steps == 50

    def test_tuple_field(self):
        cfg = parse_config("hidden_sizes = 32,16")
        assert cfg.hidden_sizes == (32, 16)

    def test_base_overrides(self):
        base = TrainConfig(seed=5, gamma=0.9)
        cfg = parse_config("seed = 6", base=base)
        assert cfg.seed == 6
        assert cfg.gamma == 0.9

    def test_validation_applies_to_parsed_values(self):
        with pytest.raises(ValueError, match="gamma"):
            parse_config("gamma = 1.5")
