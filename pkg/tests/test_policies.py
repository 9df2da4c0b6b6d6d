"""Squashed-Gaussian policies, risk-sensitive losses, temperature tuning."""

import math

import numpy as np
import pytest

from minimax_dsac.critic import CRITIC_IN_DIM, DEFAULT_STD_FLOOR, sigmoid, softplus
from minimax_dsac.nets import Architecture, NetParams, init_params, zeros_params
from minimax_dsac.policies import (
    StochasticPolicy,
    TemperatureState,
    adversary_loss_and_grad,
    deterministic_action,
    log_prob,
    protagonist_loss_and_grad,
    sample_action,
    sample_actions_batch,
    temperature_loss_and_grad,
)


class ZeroNoise:
    """rng stand-in that returns zero noise (and passes through uniforms)."""

    def standard_normal(self, shape=None):
        return np.zeros(shape) if shape is not None else 0.0


def make_policy(rng, action_dim=1, scale=3.0, hidden=(8, 8)) -> StochasticPolicy:
    params = init_params(Architecture(6, hidden, 2 * action_dim), rng)
    return StochasticPolicy(params, action_dim, scale)


def pinned_policy(a_norm: float, scale: float = 3.0) -> StochasticPolicy:
    """Linear policy emitting exactly a_norm at zero noise (tiny spread)."""
    arch = Architecture(6, (), 2)
    values = np.zeros(arch.param_count)
    values[-2] = math.atanh(a_norm)  # mean bias
    values[-1] = -20.0               # log-std raw, clamps to -5
    return StochasticPolicy(NetParams(arch, values), 1, scale)


def constant_critic(q: float, sigma_raw: float,
                    u_weight_on: str | None = None, w: float = 1.0) -> NetParams:
    """Linear critic; optionally make one head depend on an action column.

    u_weight_on: None, 'q_a', 'q_u', 'sigma_a', or 'sigma_u' selects which
    head gets weight w on the protagonist (a) or adversary (u) inputs.
    """
    arch = Architecture(CRITIC_IN_DIM, (), 2)
    values = np.zeros(arch.param_count)
    if u_weight_on is not None:
        head = 0 if u_weight_on.startswith("q") else 1
        cols = [6] if u_weight_on.endswith("a") else [7, 8]
        for c in cols:
            values[c * 2 + head] = w
    values[-2] = q
    values[-1] = sigma_raw
    return NetParams(arch, values)


class TestSampling:
    def test_zero_noise_gives_tanh_of_mean_head(self):
        rng = np.random.default_rng(0)
        policy = make_policy(rng)
        obs = rng.standard_normal(6)
        from minimax_dsac.nets import mlp_forward

        mean_head = mlp_forward(policy.params, obs)[0]
        phys, _, norm = sample_action(policy, obs, np.zeros(1))
        assert np.isclose(norm[0], np.tanh(mean_head))
        assert np.isclose(phys[0], 3.0 * np.tanh(mean_head))

    def test_log_prob_at_origin_standard_normal(self):
        # mean 0, std 1, zero noise: density correction vanishes at tanh(0)
        arch = Architecture(6, (), 2)
        values = np.zeros(arch.param_count)  # mean bias 0, raw log-std 0 -> std 1
        policy = StochasticPolicy(NetParams(arch, values), 1, 3.0)
        _, logp, norm = sample_action(policy, np.zeros(6), np.zeros(1))
        assert norm[0] == 0.0
        assert abs(logp - (-0.5 * math.log(2 * math.pi))) < 1e-12

    def test_empirical_density_matches_log_prob(self):
        rng = np.random.default_rng(13)
        policy = make_policy(rng, hidden=(8,))
        obs = rng.standard_normal(6)
        n = 100_000
        xi = rng.standard_normal((n, 1))
        _, _, norm = sample_actions_batch(policy, np.tile(obs, (n, 1)), xi)
        samples = norm[:, 0]
        edges = np.linspace(-0.9, 0.9, 25)
        counts, _ = np.histogram(samples, bins=edges)
        widths = np.diff(edges)
        centers = 0.5 * (edges[:-1] + edges[1:])
        dens_emp = counts / (n * widths)
        dens_model = np.exp(
            [log_prob(policy, obs, np.array([c])) for c in centers]
        )
        heavy = counts > 500
        assert heavy.any(), "test setup produced no well-populated bins"
        rel = np.abs(dens_emp[heavy] - dens_model[heavy]) / dens_model[heavy]
        assert rel.max() < 0.1, f"worst bin density mismatch {rel.max():.3f}"

    def test_log_prob_integrates_to_one(self):
        rng = np.random.default_rng(17)
        policy = make_policy(rng)
        grid = np.linspace(-1 + 1e-6, 1 - 1e-6, 4001)
        for _ in range(10):
            obs = rng.standard_normal(6)
            dens = np.exp(log_prob(policy, np.tile(obs, (grid.size, 1)), grid[:, None]))
            integral = np.trapezoid(dens, grid)
            assert abs(integral - 1.0) < 1e-2, f"integral {integral}"

    def test_physical_actions_within_bounds(self):
        rng = np.random.default_rng(19)
        policy = make_policy(rng, action_dim=2, scale=2.0)
        total = 0
        for _ in range(10):
            xi = rng.standard_normal((100_000, 2))
            obs = rng.standard_normal((100_000, 6))
            phys, _, norm = sample_actions_batch(policy, obs, xi)
            assert np.all(np.abs(phys) <= 2.0)
            assert np.all(np.abs(norm) <= 1.0)
            total += phys.size
        assert total == 2_000_000

    def test_noise_shape_checked(self):
        policy = make_policy(np.random.default_rng(0))
        with pytest.raises(ValueError, match="noise"):
            sample_action(policy, np.zeros(6), np.zeros(2))

    def test_deterministic_action_is_tanh_mean(self):
        rng = np.random.default_rng(23)
        policy = make_policy(rng)
        obs = rng.standard_normal(6)
        phys, _, norm = sample_action(policy, obs, np.zeros(1))
        det = deterministic_action(policy, obs)
        assert np.allclose(det, phys)


def _fd_loss_over_params(loss_fn, policy, h=1e-5):
    """Central differences of a loss over every policy parameter."""
    base = policy.params
    fd = np.empty(base.arch.param_count)
    for i in range(fd.size):
        v = base.values.copy()
        v[i] += h
        up = loss_fn(policy.replace_params(NetParams(base.arch, v)))
        v[i] -= 2 * h
        dn = loss_fn(policy.replace_params(NetParams(base.arch, v)))
        fd[i] = (up - dn) / (2 * h)
    return fd


class TestProtagonistLoss:
    def test_reduces_to_negative_q_when_alpha_and_lambda_zero(self):
        rng = np.random.default_rng(31)
        policy = make_policy(rng, hidden=(8,))
        theta = init_params(Architecture(CRITIC_IN_DIM, (8,), 2), rng)
        obs = rng.standard_normal((6, 6))
        u = rng.uniform(-1, 1, (6, 2))

        def loss_fn(p):
            l, _ = protagonist_loss_and_grad(
                p, theta, obs, u, 0.0, 0.0, np.random.default_rng(99)
            )
            return l

        loss, grads = protagonist_loss_and_grad(
            policy, theta, obs, u, 0.0, 0.0, np.random.default_rng(99)
        )
        # value check: with alpha = lambda = 0 the loss is exactly mean(-Q)
        from minimax_dsac.critic import assemble_inputs, critic_forward_batch
        from minimax_dsac.policies import sample_actions_batch as sab

        xi = np.random.default_rng(99).standard_normal((6, 1))
        _, _, a = sab(policy, obs, xi)
        q, _ = critic_forward_batch(theta, assemble_inputs(obs, a, u))
        assert np.isclose(loss, -q.mean())
        fd = _fd_loss_over_params(loss_fn, policy)
        err = np.abs(fd - grads) / np.maximum(np.abs(fd), 1e-6)
        assert err.max() < 1e-4, f"worst rel err {err.max():.2e}"

    def test_constant_critic_leaves_only_entropy_gradient(self):
        rng = np.random.default_rng(37)
        policy = make_policy(rng, hidden=(8,))
        theta = constant_critic(5.0, 1.0)  # both heads flat in all inputs
        obs = rng.standard_normal((5, 6))
        u = rng.uniform(-1, 1, (5, 2))
        alpha = 0.7
        _, grads = protagonist_loss_and_grad(
            policy, theta, obs, u, alpha, 0.3, np.random.default_rng(5)
        )

        def entropy_only(p):
            xi = np.random.default_rng(5).standard_normal((5, 1))
            _, logp, _ = sample_actions_batch(p, obs, xi)
            return alpha * logp.mean()

        fd = _fd_loss_over_params(entropy_only, policy)
        err = np.abs(fd - grads) / np.maximum(np.abs(fd), 1e-6)
        assert err.max() < 1e-4, f"worst rel err {err.max():.2e}"

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(41)
        for trial in range(3):
            policy = make_policy(rng, hidden=(6,))
            theta = init_params(Architecture(CRITIC_IN_DIM, (6,), 2), rng)
            obs = rng.standard_normal((4, 6))
            u = rng.uniform(-1, 1, (4, 2))
            alpha, lam = 0.3, 0.25
            seed = 100 + trial

            def loss_fn(p):
                l, _ = protagonist_loss_and_grad(
                    p, theta, obs, u, alpha, lam, np.random.default_rng(seed)
                )
                return l

            _, grads = protagonist_loss_and_grad(
                policy, theta, obs, u, alpha, lam, np.random.default_rng(seed)
            )
            fd = _fd_loss_over_params(loss_fn, policy)
            err = np.abs(fd - grads) / np.maximum(np.abs(fd), 1e-6)
            assert err.max() < 1e-4, f"trial {trial}: worst rel err {err.max():.2e}"

    def test_risk_aversion_exact_gap(self):
        # identical Q, sigma increasing in a: loss(a1) - loss(a2) must equal
        # lambda_a * (sigma(a1) - sigma(a2)) exactly when alpha = 0
        lam = 0.1
        theta = constant_critic(3.0, 0.0, u_weight_on="sigma_a", w=2.0)
        obs = np.zeros((1, 6))
        u = np.zeros((1, 2))
        zero_rng = ZeroNoise()
        a1, a2 = -0.5, 0.5

        def sigma_of(a_norm):
            raw = 2.0 * a_norm + 0.0
            return DEFAULT_STD_FLOOR + softplus(raw)

        losses = {}
        for a in (a1, a2):
            loss, _ = protagonist_loss_and_grad(
                pinned_policy(a), theta, obs, u, 0.0, lam, zero_rng
            )
            losses[a] = loss
        want = lam * (sigma_of(a2) - sigma_of(a1))
        got = losses[a2] - losses[a1]
        assert abs(got - want) < 1e-12, f"{got} vs {want}"
        assert losses[a1] < losses[a2], "low-spread action should score better"


class TestAdversaryLoss:
    def test_descends_q_when_lambda_zero(self):
        # Q increasing in u: gradient on the mean-head biases must be
        # positive, so descent pushes u downward
        rng = np.random.default_rng(43)
        theta = constant_critic(0.0, 0.0, u_weight_on="q_u", w=1.5)
        policy = make_policy(rng, action_dim=2, scale=2.0, hidden=())
        obs = rng.standard_normal((8, 6))
        a = rng.uniform(-1, 1, (8, 1))
        _, grads = adversary_loss_and_grad(
            policy, theta, obs, a, 0.0, np.random.default_rng(3)
        )
        mean_bias = grads[-4:-2]  # output layer biases: [mean1, mean2, raw1, raw2]
        assert np.all(mean_bias > 0.0), f"expected positive bias grads, got {mean_bias}"

    def test_seeks_variance_when_q_constant(self):
        # sigma increasing in u, Q flat: descent must raise the mean actions
        rng = np.random.default_rng(47)
        theta = constant_critic(0.0, 0.0, u_weight_on="sigma_u", w=1.5)
        policy = make_policy(rng, action_dim=2, scale=2.0, hidden=())
        obs = rng.standard_normal((8, 6))
        a = rng.uniform(-1, 1, (8, 1))
        _, grads = adversary_loss_and_grad(
            policy, theta, obs, a, 0.1, np.random.default_rng(3)
        )
        mean_bias = grads[-4:-2]
        assert np.all(mean_bias < 0.0), f"expected negative bias grads, got {mean_bias}"

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(53)
        for trial in range(3):
            policy = make_policy(rng, action_dim=2, scale=2.0, hidden=(6,))
            theta = init_params(Architecture(CRITIC_IN_DIM, (6,), 2), rng)
            obs = rng.standard_normal((4, 6))
            a = rng.uniform(-1, 1, (4, 1))
            seed = 300 + trial

            def loss_fn(p):
                l, _ = adversary_loss_and_grad(
                    p, theta, obs, a, 0.2, np.random.default_rng(seed)
                )
                return l

            _, grads = adversary_loss_and_grad(
                policy, theta, obs, a, 0.2, np.random.default_rng(seed)
            )
            fd = _fd_loss_over_params(loss_fn, policy)
            err = np.abs(fd - grads) / np.maximum(np.abs(fd), 1e-6)
            assert err.max() < 1e-4, f"trial {trial}: worst rel err {err.max():.2e}"

    def test_risk_seeking_exact_gap(self):
        lam = 0.1
        theta = constant_critic(3.0, 0.0, u_weight_on="sigma_u", w=1.0)
        obs = np.zeros((1, 6))
        a = np.zeros((1, 1))
        zero_rng = ZeroNoise()

        def adv_pinned(u_norm):
            arch = Architecture(6, (), 4)
            values = np.zeros(arch.param_count)
            values[-4] = math.atanh(u_norm)
            values[-3] = math.atanh(u_norm)
            values[-2] = values[-1] = -20.0
            return StochasticPolicy(NetParams(arch, values), 2, 2.0)

        def sigma_of(u_norm):
            return DEFAULT_STD_FLOOR + softplus(2.0 * u_norm)

        u1, u2 = -0.4, 0.4
        losses = {}
        for u in (u1, u2):
            loss, _ = adversary_loss_and_grad(
                adv_pinned(u), theta, obs, a, lam, zero_rng
            )
            losses[u] = loss
        want = -lam * (sigma_of(u2) - sigma_of(u1))
        got = losses[u2] - losses[u1]
        assert abs(got - want) < 1e-12
        assert losses[u2] < losses[u1], "high-spread action should score better"


class TestTemperature:
    def test_gradient_zero_at_target_entropy(self):
        temp = TemperatureState(math.log(0.01), target_entropy=-1.0)
        # entropy == target means mean log-prob equals -target_entropy
        loss, grad = temperature_loss_and_grad(temp, np.array([1.0, 1.0, 1.0]))
        assert abs(grad) < 1e-15
        assert abs(loss) < 1e-15

    def test_low_entropy_drives_alpha_up(self):
        temp = TemperatureState(math.log(0.01), target_entropy=-1.0)
        # entropy below target: mean log-prob above -target_entropy
        _, grad = temperature_loss_and_grad(temp, np.array([2.0, 2.5]))
        assert grad < 0.0, "descent on log_alpha should increase alpha"
        _, grad_hi = temperature_loss_and_grad(temp, np.array([-3.0, -2.5]))
        assert grad_hi > 0.0, "excess entropy should decrease alpha"

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(61)
        logps = rng.standard_normal(32)
        temp = TemperatureState(-2.3, -1.0)
        _, grad = temperature_loss_and_grad(temp, logps)
        h = 1e-6
        up, _ = temperature_loss_and_grad(TemperatureState(-2.3 + h, -1.0), logps)
        dn, _ = temperature_loss_and_grad(TemperatureState(-2.3 - h, -1.0), logps)
        fd = (up - dn) / (2 * h)
        assert abs(fd - grad) / max(abs(fd), 1e-9) < 1e-6

    def test_alpha_stays_positive_through_updates(self):
        rng = np.random.default_rng(67)
        temp = TemperatureState(math.log(0.01), -1.0)
        log_alpha = temp.log_alpha
        for _ in range(1000):
            _, grad = temperature_loss_and_grad(
                TemperatureState(log_alpha, -1.0), rng.standard_normal(8) * 5
            )
            log_alpha -= 0.1 * grad
            assert math.exp(log_alpha) > 0.0
        assert np.isfinite(log_alpha)


def test_policy_rejects_bad_head_count():
    params = zeros_params(Architecture(6, (), 3))
    with pytest.raises(ValueError, match="outputs"):
        StochasticPolicy(params, 2, 1.0)
