"""Minimal feed-forward networks over flat parameter vectors.

All three learned functions (return-distribution critic, protagonist policy,
adversary policy) are plain MLPs: GELU hidden layers, affine output. The
parameters of a network live in a single float64 vector so that target-network
blending, checkpointing and Adam are simple vector operations.

GELU uses the tanh form

    gelu(z) = 0.5 * z * (1 + tanh(sqrt(2/pi) * (z + 0.044715 * z^3)))

and the backward pass differentiates exactly this expression, so analytic
gradients and finite differences agree to numerical precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass(frozen=True)
class Architecture:
    """Shape of one MLP: input width, hidden widths, output width.

    `hidden` may be empty, in which case the network is a single affine map.
    """

    in_dim: int
    hidden: tuple[int, ...]
    out_dim: int

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise ValueError(f"invalid architecture widths: {self}")
        if any(h < 1 for h in self.hidden):
            raise ValueError(f"invalid hidden widths: {self.hidden}")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    @property
    def dims(self) -> np.ndarray:
        return np.array((self.in_dim, *self.hidden, self.out_dim), dtype=np.int64)

    @property
    def param_count(self) -> int:
        dims = self.dims
        return int(sum(dims[i] * dims[i + 1] + dims[i + 1] for i in range(len(dims) - 1)))

    def layer_slices(self):
        """Yield (weight_slice, bias_slice, in_width, out_width) per layer."""
        dims = self.dims
        offset = 0
        for i in range(len(dims) - 1):
            din, dout = int(dims[i]), int(dims[i + 1])
            yield (
                slice(offset, offset + din * dout),
                slice(offset + din * dout, offset + din * dout + dout),
                din,
                dout,
            )
            offset += din * dout + dout


@dataclass(frozen=True)
class NetParams:
    """One network's flat parameter vector plus its immutable architecture."""

    arch: Architecture
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.arch.param_count,):
            raise ValueError(
                f"parameter vector has length {self.values.shape}, architecture "
                f"{self.arch} needs {self.arch.param_count}"
            )

    def replace_values(self, values: np.ndarray) -> "NetParams":
        return NetParams(self.arch, values)


def init_params(arch: Architecture, rng: np.random.Generator) -> NetParams:
    """Uniform fan-in initialization: weights and biases in +-1/sqrt(fan_in)."""
    values = np.empty(arch.param_count)
    for wsl, bsl, din, _ in arch.layer_slices():
        bound = 1.0 / np.sqrt(din)
        values[wsl] = rng.uniform(-bound, bound, wsl.stop - wsl.start)
        values[bsl] = rng.uniform(-bound, bound, bsl.stop - bsl.start)
    return NetParams(arch, values)


def zeros_params(arch: Architecture) -> NetParams:
    return NetParams(arch, np.zeros(arch.param_count))


def _as_batch(x, width: int, what: str) -> tuple[np.ndarray, bool]:
    x = np.ascontiguousarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x.reshape(1, -1)
    if x.ndim != 2 or x.shape[1] != width:
        raise ValueError(f"{what} has shape {x.shape}, expected width {width}")
    return x, single


def mlp_forward(params: NetParams, x) -> np.ndarray:
    """Forward pass; accepts a single input vector or a (B, in_dim) batch."""
    xb, single = _as_batch(x, params.arch.in_dim, "input")
    y = kernels.forward(params.values, params.arch.dims, xb)
    return y[0] if single else y


def mlp_forward_cached(params: NetParams, x: np.ndarray):
    """Batched forward pass returning (output, cache) for a later backward."""
    xb, _ = _as_batch(x, params.arch.in_dim, "input")
    return kernels.forward_cached(params.values, params.arch.dims, xb)


def mlp_backward_cached(
    params: NetParams, x: np.ndarray, cache: np.ndarray, output_grad: np.ndarray
):
    """Reverse-mode gradients of <output, output_grad> w.r.t. params and input."""
    xb, _ = _as_batch(x, params.arch.in_dim, "input")
    gy, _ = _as_batch(output_grad, params.arch.out_dim, "output_grad")
    if gy.shape[0] != xb.shape[0]:
        raise ValueError(
            f"output_grad batch {gy.shape[0]} does not match input batch {xb.shape[0]}"
        )
    return kernels.backward(params.values, params.arch.dims, xb, cache, gy)


def mlp_backward(params: NetParams, x, output_grad):
    """Gradients of <output, output_grad> for a single input vector or a batch.

    Runs its own forward pass; use the cached variants inside training loops
    to avoid recomputing.
    """
    xb, single = _as_batch(x, params.arch.in_dim, "input")
    gy, gsingle = _as_batch(output_grad, params.arch.out_dim, "output_grad")
    if single != gsingle or gy.shape[0] != xb.shape[0]:
        raise ValueError("input and output_grad batch shapes do not match")
    _, cache = kernels.forward_cached(params.values, params.arch.dims, xb)
    dparams, dx = kernels.backward(params.values, params.arch.dims, xb, cache, gy)
    return (dparams, dx[0]) if single else (dparams, dx)


@dataclass(frozen=True)
class AdamState:
    """Adam moment estimates for one parameter vector."""

    m: np.ndarray
    v: np.ndarray
    t: int
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.m.shape != self.v.shape:
            raise ValueError("Adam moment vectors have mismatched shapes")
        if self.t < 0:
            raise ValueError(f"Adam step counter must be >= 0, got {self.t}")


def adam_init(n: int, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    return AdamState(np.zeros(n), np.zeros(n), 0, beta1, beta2, eps)


def adam_step(
    state: AdamState, params: NetParams, grads: np.ndarray, lr: float
) -> tuple[NetParams, AdamState]:
    """One bias-corrected Adam update; rejects non-finite gradients."""
    grads = np.asarray(grads, dtype=np.float64)
    if grads.shape != params.values.shape:
        raise ValueError(
            f"gradient length {grads.shape} does not match parameters {params.values.shape}"
        )
    if not np.all(np.isfinite(grads)):
        bad = int(np.flatnonzero(~np.isfinite(grads))[0])
        raise ValueError(f"non-finite gradient component at index {bad}")
    p2, m2, v2, t2 = kernels.adam_update(
        params.values, grads, state.m, state.v, state.t,
        lr, state.beta1, state.beta2, state.eps,
    )
    return (
        params.replace_values(p2),
        AdamState(m2, v2, int(t2), state.beta1, state.beta2, state.eps),
    )
