"""Numba-compiled implementations of the hot numeric kernels.

Shared conventions (both backends):

- A network is described by `dims`, an int64 array [d0, h1, ..., hk, dout].
  Layer l maps dims[l] -> dims[l+1]; hidden layers use GELU, the output
  layer is affine.
- Parameters live in one flat float64 vector: for each layer in order,
  W (dims[l] x dims[l+1], row-major) followed by the bias (dims[l+1],).
- `forward_cached` writes, per hidden layer k in order, the pre-activation
  Z_k then the activation H_k (each (B, dims[k]) row-major) into one flat
  cache vector consumed by `backward`.
- tanh is evaluated as (1 - e^{-2|y|}) / (1 + e^{-2|y|}) with the sign
  restored, which is overflow-free and agrees with np.tanh to 1 ulp.

All arrays must be C-contiguous float64; the wrappers in `nets` enforce
this before dispatching.
"""

import numpy as np
from numba import njit

GELU_TANH_COEF = 0.7978845608028654  # sqrt(2/pi)
GELU_CUBIC_COEF = 0.044715


@njit(cache=True, fastmath=True)
def _tanh(y):
    if y >= 0.0:
        t = np.exp(-2.0 * y)
        return (1.0 - t) / (1.0 + t)
    t = np.exp(2.0 * y)
    return (t - 1.0) / (t + 1.0)


@njit(cache=True, fastmath=True)
def _gelu_scalar(z):
    u = GELU_TANH_COEF * (z + GELU_CUBIC_COEF * z * z * z)
    return 0.5 * z * (1.0 + _tanh(u))


@njit(cache=True, fastmath=True)
def _gelu_grad_scalar(z):
    u = GELU_TANH_COEF * (z + GELU_CUBIC_COEF * z * z * z)
    t = _tanh(u)
    du = GELU_TANH_COEF * (1.0 + 3.0 * GELU_CUBIC_COEF * z * z)
    return 0.5 * (1.0 + t) + 0.5 * z * (1.0 - t * t) * du


@njit(cache=True)
def gelu(z):
    out = np.empty_like(z)
    zf = z.ravel()
    of = out.ravel()
    for i in range(zf.size):
        of[i] = _gelu_scalar(zf[i])
    return out


@njit(cache=True)
def gelu_vjp(z, g):
    out = np.empty_like(z)
    zf = z.ravel()
    gf = g.ravel()
    of = out.ravel()
    for i in range(zf.size):
        of[i] = gf[i] * _gelu_grad_scalar(zf[i])
    return out


@njit(cache=True)
def cache_size(dims, batch):
    total = 0
    for k in range(1, len(dims) - 1):
        total += dims[k]
    return 2 * batch * total


@njit(cache=True)
def forward(params, dims, x):
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
        z = np.dot(h, w)
        batch = z.shape[0]
        if layer < n_layers - 1:
            for i in range(batch):
                for j in range(dout):
                    z[i, j] = _gelu_scalar(z[i, j] + b[j])
        else:
            for i in range(batch):
                for j in range(dout):
                    z[i, j] += b[j]
        h = z
    return h


@njit(cache=True)
def forward_cached(params, dims, x):
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
        z = np.dot(h, w)
        if layer < n_layers - 1:
            h = np.empty_like(z)
            for i in range(batch):
                for j in range(dout):
                    pre = z[i, j] + b[j]
                    z[i, j] = pre
                    cache[coff + i * dout + j] = pre
                    act = _gelu_scalar(pre)
                    h[i, j] = act
                    cache[coff + batch * dout + i * dout + j] = act
            coff += 2 * batch * dout
        else:
            for i in range(batch):
                for j in range(dout):
                    z[i, j] += b[j]
            h = z
    return h, cache


@njit(cache=True)
def backward(params, dims, x, cache, gy):
    n_layers = len(dims) - 1
    batch = x.shape[0]
    dparams = np.empty_like(params)

    offsets = np.empty(n_layers, dtype=np.int64)
    offset = 0
    for layer in range(n_layers):
        offsets[layer] = offset
        offset += dims[layer] * dims[layer + 1] + dims[layer + 1]

    coffs = np.empty(n_layers, dtype=np.int64)
    coff = 0
    for k in range(1, n_layers):
        coffs[k - 1] = coff
        coff += 2 * batch * dims[k]

    delta = gy.copy()
    dx = np.empty_like(x)
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
        dw = np.dot(h_in.T, delta)
        for i in range(din):
            for j in range(dout):
                dparams[o + i * dout + j] = dw[i, j]
        ob = o + din * dout
        for j in range(dout):
            s = 0.0
            for i in range(batch):
                s += delta[i, j]
            dparams[ob + j] = s
        dh = np.dot(delta, w.T)
        if layer > 0:
            c = coffs[layer - 1]
            n = batch * din
            z = cache[c:c + n].reshape(batch, din)
            nxt = np.empty_like(dh)
            for i in range(batch):
                for j in range(din):
                    nxt[i, j] = dh[i, j] * _gelu_grad_scalar(z[i, j])
            delta = nxt
        else:
            dx = dh
    return dparams, dx


@njit(cache=True)
def adam_update(params, grads, m, v, t, lr, beta1, beta2, eps):
    n = params.size
    p2 = np.empty_like(params)
    m2 = np.empty_like(m)
    v2 = np.empty_like(v)
    t2 = t + 1
    c1 = 1.0 - beta1 ** t2
    c2 = 1.0 - beta2 ** t2
    for i in range(n):
        g = grads[i]
        mi = beta1 * m[i] + (1.0 - beta1) * g
        vi = beta2 * v[i] + (1.0 - beta2) * g * g
        m2[i] = mi
        v2[i] = vi
        p2[i] = params[i] - lr * (mi / c1) / (np.sqrt(vi / c2) + eps)
    return p2, m2, v2, t2
