"""Training configuration and its flat key=value file format.

Every field of TrainConfig and the nested EnvConfig (prefixed ``env.``) is
addressable in the config file, one ``key = value`` per line with ``#``
comments. Unknown keys are rejected rather than ignored.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .env import EnvConfig

ALGO_DSAC = "dsac"
ALGO_MINIMAX = "minimax-dsac"


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one training run.

    Defaults follow the reference setup: tiny 500-transition buffer,
    256 batches, GELU 256x256 networks, Adam, linearly decayed learning
    rates, discount 0.99, slow target tracking, entropy target -1 (one
    protagonist action dimension), target clipping band 20, and risk
    weights 0.1 for both agents.
    """

    algo: str = ALGO_MINIMAX
    seed: int = 0
    total_steps: int = 100_000
    updates_per_env_step: int = 1
    buffer_capacity: int = 500
    batch_size: int = 256
    hidden_sizes: tuple[int, ...] = (256, 256)
    gamma: float = 0.99
    tau: float = 0.001
    actor_lr_start: float = 5e-5
    actor_lr_end: float = 5e-6
    critic_lr_start: float = 1e-4
    critic_lr_end: float = 1e-5
    alpha_lr_start: float = 5e-5
    alpha_lr_end: float = 5e-6
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    target_entropy: float = -1.0
    clip_boundary: float = 20.0
    lambda_a: float = 0.1
    lambda_u: float = 0.1
    alpha_init: float = 0.01
    std_floor: float = 1e-3
    log_std_min: float = -5.0
    log_std_max: float = 2.0
    log_interval: int = 500
    eval_interval: int = 10_000
    eval_episodes: int = 20
    env: EnvConfig = field(default_factory=EnvConfig)

    def __post_init__(self):
        if self.algo not in (ALGO_DSAC, ALGO_MINIMAX):
            raise ValueError(
                f"algo must be {ALGO_DSAC!r} or {ALGO_MINIMAX!r}, got {self.algo!r}"
            )
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must be in (0, 1], got {self.tau}")
        for name in ("actor_lr", "critic_lr", "alpha_lr"):
            start = getattr(self, f"{name}_start")
            end = getattr(self, f"{name}_end")
            if not (start > 0 and end > 0):
                raise ValueError(f"{name} bounds must be positive")
            if end > start:
                raise ValueError(f"{name}_end must not exceed {name}_start")
        if self.batch_size > self.buffer_capacity:
            raise ValueError(
                f"batch size {self.batch_size} exceeds buffer capacity "
                f"{self.buffer_capacity}"
            )
        if self.total_steps < 0 or self.updates_per_env_step < 0:
            raise ValueError("step counts must be non-negative")
        if self.eval_episodes < 1 or self.eval_interval < 1 or self.log_interval < 1:
            raise ValueError("intervals and episode counts must be >= 1")
        if not self.clip_boundary > 0:
            raise ValueError("clip_boundary must be positive")
        if self.lambda_a < 0 or self.lambda_u < 0:
            raise ValueError("risk weights must be non-negative")
        if not self.std_floor > 0:
            raise ValueError("std_floor must be positive")
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def _parse_value(text: str, ftype):
    text = text.strip()
    if ftype is int:
        return int(text)
    if ftype is float:
        return float(text)
    if ftype is bool:
        if text.lower() in ("true", "1", "yes"):
            return True
        if text.lower() in ("false", "0", "no"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if ftype is str:
        return text
    # tuple-typed fields (e.g. hidden_sizes): comma-separated ints
    if "tuple" in str(ftype):
        if not text:
            return ()
        return tuple(int(v) for v in text.split(","))
    raise ValueError(f"unsupported config field type {ftype}")


def _field_map(cls):
    return {f.name: f for f in dataclasses.fields(cls)}


def config_to_text(cfg: TrainConfig) -> str:
    """Serialize a TrainConfig (env fields prefixed env.) to file text."""
    lines = ["# minimax-dsac training configuration"]
    for f in dataclasses.fields(TrainConfig):
        if f.name == "env":
            continue
        lines.append(f"{f.name} = {_format_value(getattr(cfg, f.name))}")
    for f in dataclasses.fields(EnvConfig):
        lines.append(f"env.{f.name} = {_format_value(getattr(cfg.env, f.name))}")
    return "\n".join(lines) + "\n"


def parse_config(text: str, base: TrainConfig | None = None) -> TrainConfig:
    """Parse config file text; keys not set keep the base (or default) value."""
    base = base if base is not None else TrainConfig()
    train_fields = _field_map(TrainConfig)
    env_fields = _field_map(EnvConfig)
    train_kwargs = {}
    env_kwargs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key.startswith("env."):
            name = key[4:]
            if name not in env_fields:
                raise ValueError(f"line {lineno}: unknown config key {key!r}")
            env_kwargs[name] = _parse_value(value, _resolve(env_fields[name]))
        else:
            if key == "env" or key not in train_fields:
                raise ValueError(f"line {lineno}: unknown config key {key!r}")
            train_kwargs[key] = _parse_value(value, _resolve(train_fields[key]))
    env_cfg = dataclasses.replace(base.env, **env_kwargs) if env_kwargs else base.env
    return dataclasses.replace(base, env=env_cfg, **train_kwargs)


_TYPE_NAMES = {"int": int, "float": float, "bool": bool, "str": str}


def _resolve(f: dataclasses.Field):
    # dataclass field types are strings under `from __future__ import annotations`
    t = f.type
    if isinstance(t, str):
        return _TYPE_NAMES.get(t, t)
    return t


def load_config(path, base: TrainConfig | None = None) -> TrainConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), base)


def save_config(cfg: TrainConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(config_to_text(cfg))
