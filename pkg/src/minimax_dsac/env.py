"""Unsignalized-intersection simulator.

One protagonist vehicle crosses from down to up; two adversarial vehicles
cross right-to-left and left-to-right. Every vehicle follows a fixed path
parameterized by the signed distance d to the intersection center (positive
approaching, negative after passing); the action is a scalar acceleration.
Both crossing paths intersect the protagonist's path at its center point,
giving one conflict point per adversary.

Kinematics per step: v' = clamp(v + a*dt, 0, v_max), d' = d - v'*dt.
Reward: -1 per step, replaced by +110 on a successful pass and -110 on a
collision. An episode also ends at the step limit (reward stays -1).
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class EnvConfig:
    """Geometry, kinematics and reward bookkeeping constants."""

    dt: float = 0.1
    protagonist_start_d: float = 25.0
    adversary_start_d_min: float = 20.0
    adversary_start_d_max: float = 30.0
    start_v_min: float = 2.0
    start_v_max: float = 8.0
    protagonist_accel_limit: float = 3.0
    adversary_accel_limit: float = 2.0
    v_max: float = 12.0
    conflict_half_length: float = 2.0
    pass_threshold: float = -15.0
    max_episode_steps: int = 200
    obs_d_scale: float = 25.0
    obs_v_scale: float = 10.0
    pass_reward: float = 110.0
    collision_reward: float = -110.0
    step_reward: float = -1.0

    def __post_init__(self):
        for name in ("dt", "v_max", "conflict_half_length", "obs_d_scale",
                     "obs_v_scale", "protagonist_accel_limit",
                     "adversary_accel_limit"):
            if not getattr(self, name) > 0:
                raise ValueError(f"EnvConfig.{name} must be positive")
        if self.max_episode_steps < 1:
            raise ValueError("max_episode_steps must be >= 1")


@dataclass(frozen=True)
class VehicleState:
    """Signed path distance to the intersection center and speed (>= 0)."""

    d: float
    v: float


@dataclass(frozen=True)
class EnvState:
    protagonist: VehicleState
    adversary1: VehicleState  # right -> left
    adversary2: VehicleState  # left -> right
    step_count: int = 0


class OutcomeKind(enum.Enum):
    RUNNING = "running"
    COLLISION = "collision"
    PASS = "pass"
    TIME_LIMIT = "time_limit"


@dataclass(frozen=True)
class StepOutcome:
    reward: float
    done: bool
    kind: OutcomeKind


class AdversaryMode(enum.Enum):
    """Scripted traffic behaviors for evaluation and the baseline trainer."""

    AGGRESSIVE = "aggressive"
    CONSERVATIVE = "conservative"
    RANDOM = "random"
    TRAIN_RANDOM = "train_random"


def reset(cfg: EnvConfig, rng: np.random.Generator) -> EnvState:
    """Draw a fresh initial state; protagonist distance is fixed."""
    def v0():
        return float(rng.uniform(cfg.start_v_min, cfg.start_v_max))

    def d0():
        return float(rng.uniform(cfg.adversary_start_d_min, cfg.adversary_start_d_max))

    return EnvState(
        protagonist=VehicleState(cfg.protagonist_start_d, v0()),
        adversary1=VehicleState(d0(), v0()),
        adversary2=VehicleState(d0(), v0()),
        step_count=0,
    )


def _advance(vehicle: VehicleState, accel: float, cfg: EnvConfig) -> VehicleState:
    v = min(max(vehicle.v + accel * cfg.dt, 0.0), cfg.v_max)
    return VehicleState(vehicle.d - v * cfg.dt, v)


def clamp_accelerations(a_phys: float, u_phys, cfg: EnvConfig):
    """Clamp to the physical bounds; returns (a, u, number clamped)."""
    u_phys = np.asarray(u_phys, dtype=np.float64)
    lim_a = cfg.protagonist_accel_limit
    lim_u = cfg.adversary_accel_limit
    a_c = min(max(float(a_phys), -lim_a), lim_a)
    u_c = np.clip(u_phys, -lim_u, lim_u)
    n_clamped = int(a_c != a_phys) + int(np.sum(u_c != u_phys))
    return a_c, u_c, n_clamped


def check_termination(state: EnvState, cfg: EnvConfig) -> OutcomeKind:
    """Episode status of a state; collision beats pass beats the time limit."""
    half = cfg.conflict_half_length
    protagonist_in_zone = abs(state.protagonist.d) < half
    if protagonist_in_zone and (
        abs(state.adversary1.d) < half or abs(state.adversary2.d) < half
    ):
        return OutcomeKind.COLLISION
    if state.protagonist.d < cfg.pass_threshold:
        return OutcomeKind.PASS
    if state.step_count >= cfg.max_episode_steps:
        return OutcomeKind.TIME_LIMIT
    return OutcomeKind.RUNNING


def step(
    state: EnvState, a_phys: float, u_phys, cfg: EnvConfig
) -> tuple[EnvState, StepOutcome]:
    """Advance one step under (already clamped) physical accelerations."""
    u_phys = np.asarray(u_phys, dtype=np.float64)
    new_state = EnvState(
        protagonist=_advance(state.protagonist, float(a_phys), cfg),
        adversary1=_advance(state.adversary1, float(u_phys[0]), cfg),
        adversary2=_advance(state.adversary2, float(u_phys[1]), cfg),
        step_count=state.step_count + 1,
    )
    kind = check_termination(new_state, cfg)
    if kind is OutcomeKind.COLLISION:
        reward = cfg.collision_reward
    elif kind is OutcomeKind.PASS:
        reward = cfg.pass_reward
    else:
        reward = cfg.step_reward
    return new_state, StepOutcome(reward, kind is not OutcomeKind.RUNNING, kind)


def observe(state: EnvState, cfg: EnvConfig) -> np.ndarray:
    """Normalized 6-vector [d_p, v_p, d_a1, v_a1, d_a2, v_a2] / scales."""
    return np.array([
        state.protagonist.d / cfg.obs_d_scale,
        state.protagonist.v / cfg.obs_v_scale,
        state.adversary1.d / cfg.obs_d_scale,
        state.adversary1.v / cfg.obs_v_scale,
        state.adversary2.d / cfg.obs_d_scale,
        state.adversary2.v / cfg.obs_v_scale,
    ])


def denormalize_observation(obs, cfg: EnvConfig) -> EnvState:
    """Inverse of observe (step counter not recoverable; set to 0)."""
    obs = np.asarray(obs, dtype=np.float64)
    return EnvState(
        protagonist=VehicleState(obs[0] * cfg.obs_d_scale, obs[1] * cfg.obs_v_scale),
        adversary1=VehicleState(obs[2] * cfg.obs_d_scale, obs[3] * cfg.obs_v_scale),
        adversary2=VehicleState(obs[4] * cfg.obs_d_scale, obs[5] * cfg.obs_v_scale),
        step_count=0,
    )


def scripted_adversary(
    mode: AdversaryMode, rng: np.random.Generator, adversary_accel_limit: float = 2.0
) -> np.ndarray:
    """Physical accelerations (m/s^2) for both adversarial vehicles.

    Aggressive draws both from [1, 2], conservative from [-2, -1]; random
    mixes one conservative (vehicle 1) with one aggressive (vehicle 2).
    train_random, used when training without a learned adversary, covers the
    whole physical range.
    """
    if mode is AdversaryMode.AGGRESSIVE:
        return rng.uniform(1.0, 2.0, 2)
    if mode is AdversaryMode.CONSERVATIVE:
        return rng.uniform(-2.0, -1.0, 2)
    if mode is AdversaryMode.RANDOM:
        return np.array([rng.uniform(-2.0, -1.0), rng.uniform(1.0, 2.0)])
    if mode is AdversaryMode.TRAIN_RANDOM:
        lim = adversary_accel_limit
        return rng.uniform(-lim, lim, 2)
    raise ValueError(f"unknown adversary mode {mode!r}")


class IntersectionEnv:
    """Stateful wrapper around the functional core, with a clamp counter."""

    def __init__(self, cfg: EnvConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.state: EnvState | None = None
        self.clamp_events = 0

    def reset(self) -> EnvState:
        self.state = reset(self.cfg, self.rng)
        return self.state

    def step(self, a_phys: float, u_phys) -> tuple[EnvState, StepOutcome]:
        if self.state is None:
            raise RuntimeError("step called before reset")
        a_c, u_c, n = clamp_accelerations(a_phys, u_phys, self.cfg)
        self.clamp_events += n
        self.state, outcome = step(self.state, a_c, u_c, self.cfg)
        return self.state, outcome


TRAJECTORY_COLUMNS = (
    "t", "d_p", "v_p", "d_a1", "v_a1", "d_a2", "v_a2", "a", "u1", "u2", "r",
    "outcome",
)


@dataclass
class TrajectoryRecorder:
    """Collects per-step rows for one episode and writes them as CSV."""

    rows: list = field(default_factory=list)

    def record(self, t: float, state: EnvState, a: float, u, r: float,
               kind: OutcomeKind) -> None:
        self.rows.append((
            t, state.protagonist.d, state.protagonist.v,
            state.adversary1.d, state.adversary1.v,
            state.adversary2.d, state.adversary2.v,
            float(a), float(u[0]), float(u[1]), r, kind.value,
        ))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRAJECTORY_COLUMNS)
            writer.writerows(self.rows)
