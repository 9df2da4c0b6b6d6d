"""Synchronous training loop: interact, replay, update, track targets.

Per environment step (after the buffer holds one batch) the learner runs one
update round in fixed order: critic, protagonist, adversary (when trained),
temperature, then soft target updates. The ``dsac`` baseline allocates no
adversary networks; scripted uniform traffic supplies the adversary actions
both in the environment and in the critic's inputs.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import env as env_mod
from .checkpoint import save_checkpoint
from .config import ALGO_MINIMAX, TrainConfig, config_to_text
from .critic import (
    ADVERSARY_ACTION_DIM,
    CRITIC_IN_DIM,
    OBS_DIM,
    PROTAGONIST_ACTION_DIM,
    assemble_inputs,
    clipped_critic_update,
    td_target_batch,
)
from .env import AdversaryMode, IntersectionEnv, OutcomeKind, TrajectoryRecorder
from .nets import AdamState, Architecture, NetParams, adam_init, adam_step, init_params
from .policies import (
    StochasticPolicy,
    TemperatureState,
    adversary_loss_and_grad,
    deterministic_action,
    protagonist_loss_and_grad,
    sample_action,
    sample_actions_batch,
    temperature_loss_and_grad,
)
from .replay import ReplayBuffer, Transition

RECENT_RETURN_WINDOW = 20

EVAL_MODES = (
    AdversaryMode.AGGRESSIVE,
    AdversaryMode.CONSERVATIVE,
    AdversaryMode.RANDOM,
    AdversaryMode.TRAIN_RANDOM,
)


class TrainingDiverged(RuntimeError):
    """Raised when an update produces non-finite values; message carries context."""


def soft_update(online: NetParams, target: NetParams, tau: float) -> NetParams:
    """Blend target toward online parameters: x' <- tau*x + (1-tau)*x'."""
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must be in (0, 1], got {tau}")
    if online.arch != target.arch:
        raise ValueError(
            f"cannot blend parameters of {online.arch} into {target.arch}"
        )
    return target.replace_values(tau * online.values + (1.0 - tau) * target.values)


def lr_schedule(start: float, end: float, step: int, total: int) -> float:
    """Linear interpolation from start (step 0) to end (step == total)."""
    if total < 1:
        raise ValueError(f"schedule length must be >= 1, got {total}")
    if not 0 <= step <= total:
        raise ValueError(f"step {step} outside schedule [0, {total}]")
    frac = step / total
    return start * (1.0 - frac) + end * frac


@dataclass(frozen=True)
class EvalSummary:
    """Aggregate of one scripted-adversary evaluation."""

    mode: str
    returns: tuple[float, ...]
    mean: float
    std: float
    pass_rate: float
    collision_rate: float
    mean_crossing_time: float  # seconds over successful episodes, nan if none
    steps: tuple[int, ...]
    outcomes: tuple[str, ...]


def evaluate(
    protagonist: StochasticPolicy,
    mode: AdversaryMode,
    episodes: int,
    cfg: TrainConfig,
    rng: np.random.Generator,
    record_first_trajectory: bool = False,
) -> tuple[EvalSummary, list | None]:
    """Run scripted-adversary episodes with the deterministic policy head."""
    if episodes < 1:
        raise ValueError(f"episodes must be >= 1, got {episodes}")
    ecfg = cfg.env
    returns, steps_taken, outcomes = [], [], []
    trajectory = None
    for ep in range(episodes):
        recorder = TrajectoryRecorder() if record_first_trajectory and ep == 0 else None
        state = env_mod.reset(ecfg, rng)
        ep_return = 0.0
        while True:
            obs = env_mod.observe(state, ecfg)
            a_phys = float(deterministic_action(protagonist, obs)[0])
            u_phys = env_mod.scripted_adversary(mode, rng, ecfg.adversary_accel_limit)
            state, outcome = env_mod.step(state, a_phys, u_phys, ecfg)
            ep_return += outcome.reward
            if recorder is not None:
                recorder.record(
                    state.step_count * ecfg.dt, state, a_phys, u_phys,
                    outcome.reward, outcome.kind,
                )
            if outcome.done:
                break
        returns.append(ep_return)
        steps_taken.append(state.step_count)
        outcomes.append(outcome.kind.value)
        if recorder is not None:
            trajectory = recorder.rows
    returns_arr = np.asarray(returns)
    passes = [s for s, o in zip(steps_taken, outcomes) if o == OutcomeKind.PASS.value]
    summary = EvalSummary(
        mode=mode.value,
        returns=tuple(float(r) for r in returns),
        mean=float(returns_arr.mean()),
        std=float(returns_arr.std(ddof=1)) if episodes > 1 else 0.0,
        pass_rate=outcomes.count(OutcomeKind.PASS.value) / episodes,
        collision_rate=outcomes.count(OutcomeKind.COLLISION.value) / episodes,
        mean_crossing_time=(
            float(np.mean(passes) * ecfg.dt) if passes else float("nan")
        ),
        steps=tuple(steps_taken),
        outcomes=tuple(outcomes),
    )
    return summary, trajectory


@dataclass
class RunArtifacts:
    """Everything a finished run produced, in memory plus any files written."""

    config: TrainConfig
    log_rows: list[dict] = field(default_factory=list)
    eval_summaries: dict[str, EvalSummary] = field(default_factory=dict)
    trajectories: dict[str, list] = field(default_factory=dict)
    checkpoint_paths: list[str] = field(default_factory=list)
    nets: dict[str, NetParams] = field(default_factory=dict)
    log_alpha: float = 0.0
    env_steps: int = 0
    out_dir: str | None = None


@dataclass
class _Learner:
    """Mutable bundle of everything the update round touches."""

    cfg: TrainConfig
    theta: NetParams
    theta_target: NetParams
    protagonist: StochasticPolicy
    protagonist_target: StochasticPolicy
    adversary: StochasticPolicy | None
    adversary_target: StochasticPolicy | None
    adam_critic: AdamState
    adam_protagonist: AdamState
    adam_adversary: AdamState | None
    temp: TemperatureState
    alpha_m: float = 0.0
    alpha_v: float = 0.0
    alpha_t: int = 0
    last_losses: dict = field(default_factory=dict)
    updates: int = 0


def _copy_params(p: NetParams) -> NetParams:
    return NetParams(p.arch, p.values.copy())


def build_learner(cfg: TrainConfig, rng: np.random.Generator) -> _Learner:
    hidden = cfg.hidden_sizes
    theta = init_params(Architecture(CRITIC_IN_DIM, hidden, 2), rng)
    phi = init_params(Architecture(OBS_DIM, hidden, 2 * PROTAGONIST_ACTION_DIM), rng)
    minimax = cfg.algo == ALGO_MINIMAX
    mu = (
        init_params(Architecture(OBS_DIM, hidden, 2 * ADVERSARY_ACTION_DIM), rng)
        if minimax
        else None
    )

    def policy(params, adim, scale):
        return StochasticPolicy(
            params, adim, scale, cfg.log_std_min, cfg.log_std_max
        )

    b1, b2, eps = cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps
    return _Learner(
        cfg=cfg,
        theta=theta,
        theta_target=_copy_params(theta),
        protagonist=policy(phi, PROTAGONIST_ACTION_DIM, cfg.env.protagonist_accel_limit),
        protagonist_target=policy(
            _copy_params(phi), PROTAGONIST_ACTION_DIM, cfg.env.protagonist_accel_limit
        ),
        adversary=(
            policy(mu, ADVERSARY_ACTION_DIM, cfg.env.adversary_accel_limit)
            if minimax
            else None
        ),
        adversary_target=(
            policy(
                _copy_params(mu), ADVERSARY_ACTION_DIM, cfg.env.adversary_accel_limit
            )
            if minimax
            else None
        ),
        adam_critic=adam_init(theta.arch.param_count, b1, b2, eps),
        adam_protagonist=adam_init(phi.arch.param_count, b1, b2, eps),
        adam_adversary=(
            adam_init(mu.arch.param_count, b1, b2, eps) if minimax else None
        ),
        temp=TemperatureState(math.log(cfg.alpha_init), cfg.target_entropy),
    )


def _scalar_adam_step(value, grad, m, v, t, lr, b1, b2, eps):
    t += 1
    m = b1 * m + (1.0 - b1) * grad
    v = b2 * v + (1.0 - b2) * grad * grad
    mhat = m / (1.0 - b1 ** t)
    vhat = v / (1.0 - b2 ** t)
    return value - lr * mhat / (math.sqrt(vhat) + eps), m, v, t


def update_round(
    learner: _Learner,
    batch: dict,
    rng: np.random.Generator,
    critic_lr: float,
    actor_lr: float,
    alpha_lr: float,
) -> dict:
    """One full learner round on a sampled batch; returns the loss values."""
    cfg = learner.cfg
    alpha = learner.temp.alpha
    minimax = learner.adversary is not None

    def sample_protagonist_next(s2, rng):
        xi = rng.standard_normal((s2.shape[0], PROTAGONIST_ACTION_DIM))
        _, logp, norm = sample_actions_batch(learner.protagonist_target, s2, xi)
        return norm, logp

    if minimax:
        def sample_adversary_next(s2, rng):
            xi = rng.standard_normal((s2.shape[0], ADVERSARY_ACTION_DIM))
            _, _, norm = sample_actions_batch(learner.adversary_target, s2, xi)
            return norm
    else:
        def sample_adversary_next(s2, rng):
            return rng.uniform(-1.0, 1.0, (s2.shape[0], ADVERSARY_ACTION_DIM))

    # critic: clipped sampled soft targets, Gaussian NLL
    x = assemble_inputs(batch["s"], batch["a"], batch["u"])
    y_raw = td_target_batch(
        learner.theta_target, batch["s2"], batch["r"], batch["done"],
        alpha, cfg.gamma, rng,
        sample_protagonist_next, sample_adversary_next, cfg.std_floor,
    )
    critic_loss, critic_grads, _ = clipped_critic_update(
        learner.theta, x, y_raw, cfg.clip_boundary, cfg.std_floor
    )
    learner.theta, learner.adam_critic = adam_step(
        learner.adam_critic, learner.theta, critic_grads, critic_lr
    )

    # protagonist: risk-averse maximum-entropy ascent
    prot_loss, prot_grads = protagonist_loss_and_grad(
        learner.protagonist, learner.theta, batch["s"], batch["u"],
        alpha, cfg.lambda_a, rng, cfg.std_floor,
    )
    new_phi, learner.adam_protagonist = adam_step(
        learner.adam_protagonist, learner.protagonist.params, prot_grads, actor_lr
    )
    learner.protagonist = learner.protagonist.replace_params(new_phi)

    # adversary: risk-seeking descent (trained variant only)
    adv_loss = float("nan")
    if minimax:
        adv_loss, adv_grads = adversary_loss_and_grad(
            learner.adversary, learner.theta, batch["s"], batch["a"],
            cfg.lambda_u, rng, cfg.std_floor,
        )
        new_mu, learner.adam_adversary = adam_step(
            learner.adam_adversary, learner.adversary.params, adv_grads, actor_lr
        )
        learner.adversary = learner.adversary.replace_params(new_mu)

    # temperature: fresh samples from the just-updated protagonist
    xi = rng.standard_normal((batch["s"].shape[0], PROTAGONIST_ACTION_DIM))
    _, logps, _ = sample_actions_batch(learner.protagonist, batch["s"], xi)
    temp_loss, temp_grad = temperature_loss_and_grad(learner.temp, logps)
    new_log_alpha, learner.alpha_m, learner.alpha_v, learner.alpha_t = _scalar_adam_step(
        learner.temp.log_alpha, temp_grad,
        learner.alpha_m, learner.alpha_v, learner.alpha_t,
        alpha_lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps,
    )
    learner.temp = TemperatureState(new_log_alpha, learner.temp.target_entropy)

    # slow target tracking, all networks
    learner.theta_target = soft_update(learner.theta, learner.theta_target, cfg.tau)
    learner.protagonist_target = learner.protagonist_target.replace_params(
        soft_update(learner.protagonist.params,
                    learner.protagonist_target.params, cfg.tau)
    )
    if minimax:
        learner.adversary_target = learner.adversary_target.replace_params(
            soft_update(learner.adversary.params,
                        learner.adversary_target.params, cfg.tau)
        )

    learner.updates += 1
    losses = {
        "critic_loss": critic_loss,
        "protagonist_loss": prot_loss,
        "adversary_loss": adv_loss,
        "temperature_loss": temp_loss,
        "alpha": learner.temp.alpha,
    }
    learner.last_losses = losses
    return losses


def _learner_nets(learner: _Learner) -> dict[str, NetParams]:
    nets = {
        "critic": learner.theta,
        "critic_target": learner.theta_target,
        "protagonist": learner.protagonist.params,
        "protagonist_target": learner.protagonist_target.params,
    }
    if learner.adversary is not None:
        nets["adversary"] = learner.adversary.params
        nets["adversary_target"] = learner.adversary_target.params
    return nets


def train(
    cfg: TrainConfig,
    out_dir: str | Path | None = None,
    final_eval: bool = True,
    progress_every: int = 0,
) -> RunArtifacts:
    """Run one full training job; optionally persist checkpoints and CSVs."""
    # the batched gemms here are small enough that BLAS thread fan-out costs
    # more than it saves; pin to one thread for the duration of the run
    with threadpool_limits(limits=1, user_api="blas"):
        return _train_impl(cfg, out_dir, final_eval, progress_every)


def _train_impl(
    cfg: TrainConfig,
    out_dir: str | Path | None,
    final_eval: bool,
    progress_every: int,
) -> RunArtifacts:
    rng = np.random.default_rng(cfg.seed)
    learner = build_learner(cfg, rng)
    buffer = ReplayBuffer(cfg.buffer_capacity)
    world = IntersectionEnv(cfg.env, rng)
    state = world.reset()
    artifacts = RunArtifacts(config=cfg, out_dir=str(out_dir) if out_dir else None)

    out_path = None
    if out_dir is not None:
        out_path = Path(out_dir)
        (out_path / "checkpoints").mkdir(parents=True, exist_ok=True)
        (out_path / "config.txt").write_text(config_to_text(cfg), encoding="utf-8")

    def checkpoint(tag: str, env_steps: int):
        if out_path is None:
            return
        path = out_path / "checkpoints" / f"ckpt_{tag}.bin"
        save_checkpoint(
            path, _learner_nets(learner), learner.temp.log_alpha,
            cfg.algo, env_steps, config_to_text(cfg),
        )
        artifacts.checkpoint_paths.append(str(path))

    recent_returns = deque(maxlen=RECENT_RETURN_WINDOW)
    episode_return = 0.0
    lim_u = cfg.env.adversary_accel_limit

    checkpoint("step0000000", 0)
    for step_i in range(1, cfg.total_steps + 1):
        obs = env_mod.observe(state, cfg.env)
        xi_a = rng.standard_normal(PROTAGONIST_ACTION_DIM)
        a_phys, _, a_norm = sample_action(learner.protagonist, obs, xi_a)
        if learner.adversary is not None:
            xi_u = rng.standard_normal(ADVERSARY_ACTION_DIM)
            u_phys, _, u_norm = sample_action(learner.adversary, obs, xi_u)
        else:
            u_phys = env_mod.scripted_adversary(
                AdversaryMode.TRAIN_RANDOM, rng, lim_u
            )
            u_norm = u_phys / lim_u
        state, outcome = world.step(float(a_phys[0]), u_phys)
        next_obs = env_mod.observe(state, cfg.env)
        stored_done = outcome.kind in (OutcomeKind.COLLISION, OutcomeKind.PASS)
        buffer.push(Transition(obs, a_norm, u_norm, outcome.reward, next_obs, stored_done))
        episode_return += outcome.reward
        if outcome.done:
            recent_returns.append(episode_return)
            episode_return = 0.0
            state = world.reset()

        if len(buffer) >= cfg.batch_size:
            critic_lr = lr_schedule(
                cfg.critic_lr_start, cfg.critic_lr_end, step_i, cfg.total_steps
            )
            actor_lr = lr_schedule(
                cfg.actor_lr_start, cfg.actor_lr_end, step_i, cfg.total_steps
            )
            alpha_lr = lr_schedule(
                cfg.alpha_lr_start, cfg.alpha_lr_end, step_i, cfg.total_steps
            )
            for _ in range(cfg.updates_per_env_step):
                batch = buffer.sample_batch(cfg.batch_size, rng)
                try:
                    update_round(learner, batch, rng, critic_lr, actor_lr, alpha_lr)
                except ValueError as err:
                    raise TrainingDiverged(
                        f"update diverged at env step {step_i} "
                        f"(updates so far {learner.updates}): {err}; "
                        f"batch reward mean {batch['r'].mean():.3f} "
                        f"range [{batch['r'].min():.1f}, {batch['r'].max():.1f}], "
                        f"alpha {learner.temp.alpha:.3e}"
                    ) from err

        if step_i % cfg.log_interval == 0:
            row = {
                "iteration": learner.updates,
                "env_steps": step_i,
                "avg_return": (
                    float(np.mean(recent_returns)) if recent_returns else float("nan")
                ),
                "critic_loss": learner.last_losses.get("critic_loss", float("nan")),
                "protagonist_loss": learner.last_losses.get(
                    "protagonist_loss", float("nan")
                ),
                "adversary_loss": learner.last_losses.get(
                    "adversary_loss", float("nan")
                ),
                "alpha": learner.temp.alpha,
            }
            artifacts.log_rows.append(row)
            if progress_every and (step_i % progress_every == 0):
                print(
                    f"[{cfg.algo} seed={cfg.seed}] step {step_i}/{cfg.total_steps} "
                    f"avg_return {row['avg_return']:.1f} alpha {row['alpha']:.4f}",
                    flush=True,
                )
        if step_i % cfg.eval_interval == 0:
            checkpoint(f"step{step_i:07d}", step_i)

    artifacts.env_steps = cfg.total_steps
    artifacts.nets = _learner_nets(learner)
    artifacts.log_alpha = learner.temp.log_alpha
    checkpoint("final", cfg.total_steps)

    if final_eval:
        for k, mode in enumerate(EVAL_MODES):
            eval_rng = np.random.default_rng([cfg.seed, 1000 + k])
            summary, trajectory = evaluate(
                learner.protagonist, mode, cfg.eval_episodes, cfg, eval_rng,
                record_first_trajectory=True,
            )
            artifacts.eval_summaries[mode.value] = summary
            artifacts.trajectories[mode.value] = trajectory

    if out_path is not None:
        from .reports import write_run_csvs

        write_run_csvs(artifacts, out_path)
    return artifacts
