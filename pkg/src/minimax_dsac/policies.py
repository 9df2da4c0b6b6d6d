"""Stochastic policies and their risk-sensitive losses.

Both agents use tanh-squashed Gaussians. The network emits, per action
dimension, a mean and an unconstrained log-std (clamped to a fixed range);
sampling draws x = mean + std * xi, squashes to tanh(x) and scales by the
physical acceleration bound. Log-densities are over the normalized (tanh)
action and include the change-of-variables correction.

The protagonist descends  alpha*log_pi - Q + lambda_a*sigma  (maximize value,
prefer low return spread); the adversary descends  Q - lambda_u*sigma
(minimize value, prefer high spread) and carries no entropy term. Gradients
flow through the sampled action into the critic via its input gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import critic as critic_mod
from .critic import DEFAULT_STD_FLOOR, LOG_2PI, sigmoid, std_from_raw
from .nets import NetParams, mlp_forward_cached, mlp_backward_cached

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0

_LOG2 = float(np.log(2.0))


@dataclass(frozen=True)
class StochasticPolicy:
    """Policy network plus action geometry (dimension and physical scale)."""

    params: NetParams
    action_dim: int
    action_scale: float
    log_std_min: float = LOG_STD_MIN
    log_std_max: float = LOG_STD_MAX

    def __post_init__(self):
        if self.params.arch.out_dim != 2 * self.action_dim:
            raise ValueError(
                f"policy network emits {self.params.arch.out_dim} outputs, "
                f"need {2 * self.action_dim} (mean and log-std per dimension)"
            )
        if not self.action_scale > 0:
            raise ValueError(f"action scale must be positive, got {self.action_scale}")

    def replace_params(self, params: NetParams) -> "StochasticPolicy":
        return StochasticPolicy(
            params, self.action_dim, self.action_scale,
            self.log_std_min, self.log_std_max,
        )


@dataclass(frozen=True)
class TemperatureState:
    """Log-parameterized entropy temperature; alpha = exp(log_alpha) > 0."""

    log_alpha: float
    target_entropy: float

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha))


def _log1m_tanh_sq(x):
    """log(1 - tanh(x)^2) = 2*(log 2 - x - softplus(-2x)), overflow-free."""
    return 2.0 * (_LOG2 - x - critic_mod.softplus(-2.0 * x))


def _policy_internals(policy: StochasticPolicy, obs: np.ndarray, xi: np.ndarray):
    """Forward pass plus every intermediate the losses need for backprop."""
    obs = np.ascontiguousarray(np.atleast_2d(obs), dtype=np.float64)
    xi = np.ascontiguousarray(np.atleast_2d(xi), dtype=np.float64)
    if xi.shape != (obs.shape[0], policy.action_dim):
        raise ValueError(
            f"noise shape {xi.shape} does not match batch "
            f"({obs.shape[0]}, {policy.action_dim})"
        )
    out, cache = mlp_forward_cached(policy.params, obs)
    adim = policy.action_dim
    mean = out[:, :adim]
    raw = out[:, adim:]
    logstd = np.clip(raw, policy.log_std_min, policy.log_std_max)
    clamp_open = (raw > policy.log_std_min) & (raw < policy.log_std_max)
    std = np.exp(logstd)
    x = mean + std * xi
    t = np.tanh(x)
    log_corr = _log1m_tanh_sq(x)
    logp = (-0.5 * LOG_2PI - logstd - 0.5 * xi * xi - log_corr).sum(axis=1)
    return {
        "obs": obs, "cache": cache, "mean": mean, "raw": raw,
        "logstd": logstd, "clamp_open": clamp_open, "std": std,
        "xi": xi, "x": x, "t": t, "logp": logp,
    }


def sample_actions_batch(policy: StochasticPolicy, obs, xi):
    """Reparameterized batch sample: (physical, log_prob, normalized)."""
    it = _policy_internals(policy, obs, xi)
    return policy.action_scale * it["t"], it["logp"], it["t"]


def sample_action(policy: StochasticPolicy, obs, xi):
    """Single-observation sample: (physical, log_prob, normalized)."""
    phys, logp, norm = sample_actions_batch(
        policy, np.atleast_2d(obs), np.atleast_2d(xi)
    )
    return phys[0], float(logp[0]), norm[0]


def deterministic_action(policy: StochasticPolicy, obs) -> np.ndarray:
    """Evaluation-time action: scale * tanh(mean head), no sampling."""
    obs2 = np.atleast_2d(np.asarray(obs, dtype=np.float64))
    out, _ = mlp_forward_cached(policy.params, obs2)
    act = policy.action_scale * np.tanh(out[:, : policy.action_dim])
    return act[0] if np.asarray(obs).ndim == 1 else act


def log_prob(policy: StochasticPolicy, obs, a_norm) -> np.ndarray:
    """Log-density of given normalized actions (|a| < 1) under the policy."""
    obs2 = np.ascontiguousarray(np.atleast_2d(obs), dtype=np.float64)
    a2 = np.atleast_2d(np.asarray(a_norm, dtype=np.float64))
    out, _ = mlp_forward_cached(policy.params, obs2)
    adim = policy.action_dim
    mean = out[:, :adim]
    logstd = np.clip(out[:, adim:], policy.log_std_min, policy.log_std_max)
    std = np.exp(logstd)
    x = np.arctanh(a2)
    z = (x - mean) / std
    lp = (-0.5 * LOG_2PI - logstd - 0.5 * z * z - _log1m_tanh_sq(x)).sum(axis=1)
    return lp[0] if np.asarray(a_norm).ndim == 1 else lp


def _critic_value_terms(theta, obs, a_norm, u_norm, std_floor):
    x = critic_mod.assemble_inputs(obs, a_norm, u_norm)
    out, cache = mlp_forward_cached(theta, x)
    q_mean = out[:, 0]
    q_raw = out[:, 1]
    sigma = std_from_raw(q_raw, std_floor)
    return x, cache, q_mean, q_raw, sigma


def protagonist_loss_and_grad(
    policy: StochasticPolicy,
    theta: NetParams,
    obs: np.ndarray,
    u_stored: np.ndarray,
    alpha: float,
    lambda_a: float,
    rng: np.random.Generator,
    std_floor: float = DEFAULT_STD_FLOOR,
):
    """Risk-averse maximum-entropy objective, as a loss to descend.

    loss = mean[ alpha*log_pi(a|s) - Q(s,a,u) + lambda_a*sigma(s,a,u) ],
    a freshly reparameterized, u taken from the replayed transitions.
    """
    obs = np.atleast_2d(obs)
    batch = obs.shape[0]
    xi = rng.standard_normal((batch, policy.action_dim))
    it = _policy_internals(policy, obs, xi)
    x_c, cache_c, q_mean, q_raw, sigma = _critic_value_terms(
        theta, obs, it["t"], u_stored, std_floor
    )
    loss = float(np.mean(alpha * it["logp"] - q_mean + lambda_a * sigma))
    if not np.isfinite(loss):
        raise ValueError("non-finite protagonist loss")

    gy_c = np.empty((batch, 2))
    gy_c[:, 0] = -1.0 / batch
    gy_c[:, 1] = lambda_a * sigmoid(q_raw) / batch
    _, dx_c = mlp_backward_cached(theta, x_c, cache_c, gy_c)
    a_lo = obs.shape[1]
    dt = dx_c[:, a_lo:a_lo + policy.action_dim]

    # logp contributes alpha/batch per sample; d logp / dx = 2*tanh(x),
    # d logp / dlogstd = -1 (plus the path through x).
    w_logp = alpha / batch
    dx = dt * (1.0 - it["t"] ** 2) + w_logp * 2.0 * it["t"]
    dmean = dx
    dlogstd = dx * it["std"] * it["xi"] - w_logp
    draw = np.where(it["clamp_open"], dlogstd, 0.0)
    gy_p = np.ascontiguousarray(np.hstack([dmean, draw]))
    grads, _ = mlp_backward_cached(policy.params, it["obs"], it["cache"], gy_p)
    return loss, grads


def adversary_loss_and_grad(
    policy: StochasticPolicy,
    theta: NetParams,
    obs: np.ndarray,
    a_stored: np.ndarray,
    lambda_u: float,
    rng: np.random.Generator,
    std_floor: float = DEFAULT_STD_FLOOR,
):
    """Risk-seeking adversary objective, as a loss to descend.

    loss = mean[ Q(s,a,u) - lambda_u*sigma(s,a,u) ], u freshly
    reparameterized, a taken from the replayed transitions. No entropy term.
    """
    obs = np.atleast_2d(obs)
    a_stored = np.atleast_2d(np.asarray(a_stored, dtype=np.float64))
    batch = obs.shape[0]
    xi = rng.standard_normal((batch, policy.action_dim))
    it = _policy_internals(policy, obs, xi)
    x_c, cache_c, q_mean, q_raw, sigma = _critic_value_terms(
        theta, obs, a_stored, it["t"], std_floor
    )
    loss = float(np.mean(q_mean - lambda_u * sigma))
    if not np.isfinite(loss):
        raise ValueError("non-finite adversary loss")

    gy_c = np.empty((batch, 2))
    gy_c[:, 0] = 1.0 / batch
    gy_c[:, 1] = -lambda_u * sigmoid(q_raw) / batch
    _, dx_c = mlp_backward_cached(theta, x_c, cache_c, gy_c)
    u_lo = obs.shape[1] + a_stored.shape[1]
    dt = dx_c[:, u_lo:u_lo + policy.action_dim]

    dx = dt * (1.0 - it["t"] ** 2)
    dmean = dx
    dlogstd = dx * it["std"] * it["xi"]
    draw = np.where(it["clamp_open"], dlogstd, 0.0)
    gy_p = np.ascontiguousarray(np.hstack([dmean, draw]))
    grads, _ = mlp_backward_cached(policy.params, it["obs"], it["cache"], gy_p)
    return loss, grads


def temperature_loss_and_grad(temp: TemperatureState, log_probs):
    """Temperature objective mean[-alpha*(log_pi + target_entropy)].

    Returns the loss and its derivative with respect to log_alpha; descent
    raises alpha when policy entropy falls below the target.
    """
    log_probs = np.asarray(log_probs, dtype=np.float64)
    alpha = temp.alpha
    excess = float(np.mean(log_probs + temp.target_entropy))
    loss = -alpha * excess
    grad = -alpha * excess
    return loss, grad
