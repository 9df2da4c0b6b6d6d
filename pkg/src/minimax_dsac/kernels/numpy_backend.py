"""Pure-numpy implementations of the hot numeric kernels.

Fallback path for machines without numba (or with MINIMAX_DSAC_BACKEND=numpy).
Semantics are identical to the numba backend; see that module for the shared
conventions (flat parameter layout, cache layout).
"""

import numpy as np

GELU_TANH_COEF = 0.7978845608028654  # sqrt(2/pi)
GELU_CUBIC_COEF = 0.044715


def gelu(z):
    """Tanh-form GELU: 0.5*z*(1 + tanh(sqrt(2/pi)*(z + 0.044715*z^3)))."""
    u = z * z
    u *= z
    u *= GELU_CUBIC_COEF
    u += z
    u *= GELU_TANH_COEF
    np.tanh(u, out=u)
    u += 1.0
    u *= z
    u *= 0.5
    return u


def gelu_vjp(z, g):
    """g * gelu'(z), with gelu'(z) = 0.5*(1+t) + 0.5*z*(1-t^2)*u'(z)."""
    zsq = z * z
    u = zsq * z
    u *= GELU_CUBIC_COEF
    u += z
    u *= GELU_TANH_COEF
    np.tanh(u, out=u)  # t
    du = zsq
    du *= 3.0 * GELU_CUBIC_COEF
    du += 1.0
    du *= GELU_TANH_COEF  # u'(z)
    inner = 1.0 - u * u  # sech^2 = 1 - t^2
    inner *= du
    inner *= z
    out = u + 1.0
    out += inner
    out *= 0.5
    out *= g
    return out


def _hidden_width_total(dims):
    total = 0
    for k in range(1, len(dims) - 1):
        total += dims[k]
    return total


def cache_size(dims, batch):
    """Length of the flat forward cache: pre- and post-activations per hidden layer."""
    return 2 * batch * _hidden_width_total(dims)


def forward(params, dims, x):
    """Batched MLP forward pass; x is (B, dims[0]), returns (B, dims[-1])."""
    n_layers = len(dims) - 1
    h = x
    offset = 0
    for layer in range(n_layers):
        din = dims[layer]
        dout = dims[layer + 1]
        w = params[offset:offset + din * dout].reshape(din, dout)
        offset += din * dout
        b = params[offset:offset + dout]
        offset += dout
        z = h @ w
        z += b
        h = gelu(z) if layer < n_layers - 1 else z
    return h


def forward_cached(params, dims, x):
    """Forward pass that also records hidden pre/post-activations for backward.

    Cache layout, per hidden layer k=1..L-1 in order:
    [Z_k flattened row-major, H_k flattened row-major], each (B, dims[k]).
    """
    n_layers = len(dims) - 1
    batch = x.shape[0]
    cache = np.empty(cache_size(dims, batch))
    h = x
    offset = 0
    coff = 0
    for layer in range(n_layers):
        din = dims[layer]
        dout = dims[layer + 1]
        w = params[offset:offset + din * dout].reshape(din, dout)
        offset += din * dout
        b = params[offset:offset + dout]
        offset += dout
        z = h @ w
        z += b
        if layer < n_layers - 1:
            n = batch * dout
            cache[coff:coff + n] = z.ravel()
            coff += n
            h = gelu(z)
            cache[coff:coff + n] = h.ravel()
            coff += n
        else:
            h = z
    return h, cache


def backward(params, dims, x, cache, gy):
    """Reverse-mode pass for <output, gy>; returns (param grads, input grads).

    `cache` must come from forward_cached on the same (params, x).
    """
    n_layers = len(dims) - 1
    batch = x.shape[0]
    dparams = np.empty_like(params)

    # per-layer parameter offsets
    offsets = []
    offset = 0
    for layer in range(n_layers):
        offsets.append(offset)
        offset += dims[layer] * dims[layer + 1] + dims[layer + 1]

    # per-hidden-layer cache offsets
    coffs = []
    coff = 0
    for k in range(1, n_layers):
        coffs.append(coff)
        coff += 2 * batch * dims[k]

    delta = gy
    for layer in range(n_layers - 1, -1, -1):
        din = dims[layer]
        dout = dims[layer + 1]
        o = offsets[layer]
        w = params[o:o + din * dout].reshape(din, dout)
        if layer == 0:
            h_in = x
        else:
            c = coffs[layer - 1]
            n = batch * din
            h_in = cache[c + n:c + 2 * n].reshape(batch, din)
        dparams[o:o + din * dout] = (h_in.T @ delta).ravel()
        dparams[o + din * dout:o + din * dout + dout] = delta.sum(axis=0)
        dh = delta @ w.T
        if layer > 0:
            c = coffs[layer - 1]
            n = batch * din
            z = cache[c:c + n].reshape(batch, din)
            delta = gelu_vjp(z, dh)
        else:
            dx = dh
    return dparams, dx


def adam_update(params, grads, m, v, t, lr, beta1, beta2, eps):
    """One Adam step with bias correction; returns fresh (params, m, v, t)."""
    t2 = t + 1
    m2 = beta1 * m + (1.0 - beta1) * grads
    v2 = beta2 * v + (1.0 - beta2) * (grads * grads)
    mhat = m2 / (1.0 - beta1 ** t2)
    vhat = v2 / (1.0 - beta2 ** t2)
    step = np.sqrt(vhat)
    step += eps
    np.divide(mhat, step, out=step)
    step *= lr
    return params - step, m2, v2, t2
