"""Gaussian return-distribution critic.

The critic maps (observation, protagonist action, adversary action) to the
mean and spread of the soft return seen from that joint action. Two output
heads: head 0 is the mean (the soft Q-value), head 1 is an unconstrained
spread whose positive transform is std = std_floor + softplus(raw).

Training regresses the distribution onto sampled one-step bootstrap targets
by Gaussian negative log-likelihood, with the target clipped into a band
around the current mean to bound the gradient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nets import NetParams, mlp_forward, mlp_forward_cached, mlp_backward_cached

OBS_DIM = 6
PROTAGONIST_ACTION_DIM = 1
ADVERSARY_ACTION_DIM = 2
CRITIC_IN_DIM = OBS_DIM + PROTAGONIST_ACTION_DIM + ADVERSARY_ACTION_DIM

DEFAULT_STD_FLOOR = 1e-3

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class GaussianReturn:
    """Mean and standard deviation of the return distribution at one input."""

    mean: float
    std: float

    def __post_init__(self):
        if not (self.std > 0.0):
            raise ValueError(f"return std must be positive, got {self.std}")


def softplus(x):
    """log(1 + e^x), overflow-free."""
    x = np.asarray(x, dtype=np.float64)
    return np.log1p(np.exp(-np.abs(x))) + np.maximum(x, 0.0)


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def assemble_inputs(obs, a, u) -> np.ndarray:
    """Stack (obs, protagonist action, adversary action) into critic inputs."""
    obs = np.atleast_2d(np.asarray(obs, dtype=np.float64))
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    u = np.atleast_2d(np.asarray(u, dtype=np.float64))
    if a.shape == (1, obs.shape[0]) and obs.shape[0] > 1:
        a = a.T
    return np.ascontiguousarray(np.hstack([obs, a, u]))


def std_from_raw(raw, std_floor: float = DEFAULT_STD_FLOOR):
    return std_floor + softplus(raw)


def critic_forward(
    theta: NetParams, obs, a, u, std_floor: float = DEFAULT_STD_FLOOR
) -> GaussianReturn:
    """Evaluate the return distribution at a single (obs, a, u)."""
    x = assemble_inputs(obs, a, u)
    if x.shape[1] != theta.arch.in_dim:
        raise ValueError(
            f"critic input width {x.shape[1]} does not match network {theta.arch.in_dim}"
        )
    out = mlp_forward(theta, x)[0]
    if not np.all(np.isfinite(out)):
        raise ValueError(f"critic produced non-finite output {out}")
    return GaussianReturn(float(out[0]), float(std_from_raw(out[1], std_floor)))


def critic_forward_batch(
    theta: NetParams, x: np.ndarray, std_floor: float = DEFAULT_STD_FLOOR
):
    """Batched (mean, std) for pre-assembled critic inputs x of shape (B, in)."""
    out = mlp_forward(theta, x)
    return out[:, 0].copy(), std_from_raw(out[:, 1], std_floor)


def clip_target(y, q_current, b: float):
    """Clamp bootstrap targets into [q_current - b, q_current + b]."""
    if not b > 0:
        raise ValueError(f"clipping boundary must be positive, got {b}")
    return np.minimum(np.maximum(y, q_current - b), q_current + b)


def td_target(
    theta_target: NetParams,
    transition,
    alpha: float,
    gamma: float,
    rng: np.random.Generator,
    sample_protagonist,
    sample_adversary,
    std_floor: float = DEFAULT_STD_FLOOR,
) -> float:
    """One-step soft bootstrap target for a single stored transition.

    sample_protagonist(s', rng) -> (a', log_prob) and
    sample_adversary(s', rng) -> u' supply the target-policy draws, so the
    same code serves both the learned and the scripted adversary. Done
    transitions return the terminal reward with no bootstrap.
    """
    if transition.done:
        return float(transition.r)
    a2, logp = sample_protagonist(transition.s2, rng)
    u2 = sample_adversary(transition.s2, rng)
    dist = critic_forward(theta_target, transition.s2, a2, u2, std_floor)
    z = dist.mean + dist.std * rng.standard_normal()
    return float(transition.r + gamma * (z - alpha * logp))


def td_target_batch(
    theta_target: NetParams,
    s2: np.ndarray,
    r: np.ndarray,
    done: np.ndarray,
    alpha: float,
    gamma: float,
    rng: np.random.Generator,
    sample_protagonist_batch,
    sample_adversary_batch,
    std_floor: float = DEFAULT_STD_FLOOR,
) -> np.ndarray:
    """Vectorized td_target over a batch; identical rng draw order per row."""
    a2, logp = sample_protagonist_batch(s2, rng)
    u2 = sample_adversary_batch(s2, rng)
    mean, std = critic_forward_batch(
        theta_target, assemble_inputs(s2, a2, u2), std_floor
    )
    z = mean + std * rng.standard_normal(mean.shape[0])
    y = r + gamma * (z - alpha * logp)
    return np.where(done, r, y)


def _nll_from_heads(theta, x, cache, mean, raw, std, targets):
    batch = x.shape[0]
    err = targets - mean
    nll = 0.5 * (err / std) ** 2 + np.log(std) + 0.5 * LOG_2PI
    loss = float(nll.mean())
    if not np.isfinite(loss):
        bad = int(np.flatnonzero(~np.isfinite(nll))[0])
        raise ValueError(f"non-finite critic loss at batch index {bad}")
    dmean = (mean - targets) / (std * std) / batch
    dstd = (1.0 / std - (err * err) / (std ** 3)) / batch
    draw = dstd * sigmoid(raw)
    gy = np.ascontiguousarray(np.stack([dmean, draw], axis=1))
    grads, _ = mlp_backward_cached(theta, x, cache, gy)
    return loss, grads


def _forward_heads(theta, x, std_floor):
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape[0] == 0:
        raise ValueError("critic loss needs a non-empty batch")
    out, cache = mlp_forward_cached(theta, x)
    return x, cache, out[:, 0], out[:, 1], std_from_raw(out[:, 1], std_floor)


def critic_loss_and_grad(
    theta: NetParams,
    x: np.ndarray,
    targets: np.ndarray,
    std_floor: float = DEFAULT_STD_FLOOR,
):
    """Mean Gaussian NLL of already-clipped targets, plus exact gradients.

    Per sample: (y - mean)^2 / (2 std^2) + log std + log(2 pi)/2. No gradient
    flows through the targets.
    """
    targets = np.asarray(targets, dtype=np.float64)
    x, cache, mean, raw, std = _forward_heads(theta, x, std_floor)
    return _nll_from_heads(theta, x, cache, mean, raw, std, targets)


def clipped_critic_update(
    theta: NetParams,
    x: np.ndarray,
    raw_targets: np.ndarray,
    b: float,
    std_floor: float = DEFAULT_STD_FLOOR,
):
    """clip_target against the current mean head, then the NLL loss/grads.

    Identical to composing clip_target with critic_loss_and_grad (the mean
    used for clipping comes from the same parameters); one forward pass
    instead of two. Returns (loss, grads, clipped_targets).
    """
    x, cache, mean, raw, std = _forward_heads(theta, x, std_floor)
    y = clip_target(np.asarray(raw_targets, dtype=np.float64), mean, b)
    loss, grads = _nll_from_heads(theta, x, cache, mean, raw, std, y)
    return loss, grads, y
