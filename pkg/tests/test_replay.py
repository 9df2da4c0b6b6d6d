"""Replay buffer: FIFO eviction and uniform with-replacement sampling."""

from collections import deque

import numpy as np
import pytest

from minimax_dsac.replay import ReplayBuffer, Transition


def make_transition(tag: float) -> Transition:
    return Transition(
        s=np.full(6, tag), a=np.full(1, 0.1), u=np.full(2, -0.2),
        r=float(tag), s2=np.full(6, tag + 0.5), done=False,
    )


class TestPush:
    def test_push_to_empty(self):
        buf = ReplayBuffer(4)
        buf.push(make_transition(1.0))
        assert len(buf) == 1

    def test_eviction_at_capacity(self):
        buf = ReplayBuffer(500)
        for i in range(501):
            buf.push(make_transition(float(i)))
        assert len(buf) == 500
        stored = {t.r for t in buf.transitions()}
        assert 0.0 not in stored, "oldest transition should have been evicted"
        assert 500.0 in stored

    def test_matches_deque_oracle_over_random_ops(self):
        rng = np.random.default_rng(0)
        buf = ReplayBuffer(37)
        oracle: deque = deque(maxlen=37)
        for i in range(10_000):
            buf.push(make_transition(float(i)))
            oracle.append(float(i))
            if i % 500 == 0:
                assert [t.r for t in buf.transitions()] == list(oracle)
        assert [t.r for t in buf.transitions()] == list(oracle)

    def test_capacity_must_be_positive(self):
        with pytest.raises(ValueError):
            ReplayBuffer(0)


class TestSample:
    def test_single_element(self):
        buf = ReplayBuffer(8)
        buf.push(make_transition(3.0))
        batch = buf.sample_batch(1, np.random.default_rng(0))
        assert batch["r"][0] == 3.0
        assert batch["s"].shape == (1, 6)

    def test_error_before_warmup(self):
        buf = ReplayBuffer(500)
        for i in range(255):
            buf.push(make_transition(float(i)))
        with pytest.raises(ValueError, match="warm-up"):
            buf.sample_batch(256, np.random.default_rng(0))

    def test_default_batch_size_supported(self):
        buf = ReplayBuffer(500)
        for i in range(300):
            buf.push(make_transition(float(i)))
        batch = buf.sample_batch(256, np.random.default_rng(1))
        assert batch["r"].shape == (256,)

    def test_sampling_uniform_within_three_sigma(self):
        # sampling is with replacement but capped at the buffer size per
        # call (the warm-up signal), so accumulate over repeated batches
        buf = ReplayBuffer(10)
        for i in range(10):
            buf.push(make_transition(float(i)))
        rng = np.random.default_rng(12345)
        n = 100_000
        draws = np.concatenate([
            buf.sample_batch(10, rng)["r"] for _ in range(n // 10)
        ]).astype(int)
        counts = np.bincount(draws, minlength=10)
        expected = n / 10
        sigma = np.sqrt(n * 0.1 * 0.9)
        assert np.all(np.abs(counts - expected) <= 3 * sigma), counts

    def test_sampling_does_not_mutate(self):
        buf = ReplayBuffer(16)
        for i in range(16):
            buf.push(make_transition(float(i)))
        before = [t.r for t in buf.transitions()]
        buf.sample_batch(16, np.random.default_rng(0))
        assert [t.r for t in buf.transitions()] == before

    def test_deterministic_given_rng(self):
        buf = ReplayBuffer(32)
        for i in range(32):
            buf.push(make_transition(float(i)))
        b1 = buf.sample_batch(8, np.random.default_rng(5))
        b2 = buf.sample_batch(8, np.random.default_rng(5))
        assert np.array_equal(b1["r"], b2["r"])
