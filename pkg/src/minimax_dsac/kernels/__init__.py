"""Backend selection for the hot numeric kernels.

Three modes, chosen by MINIMAX_DSAC_BACKEND before import:

- ``numba``: the @njit kernels everywhere.
- ``numpy``: the pure-numpy fallback everywhere (no JIT, no numba needed).
- ``auto`` (default when numba is importable): numba for small batches,
  numpy for large ones. The JIT path wins single-observation calls (the
  action-selection hot path) by avoiding per-op dispatch, while numpy's
  SIMD transcendentals win wide batched training math; the crossover is
  around a few dozen rows. ``benchmarks/bench_kernels.py`` measures both.

Both implementations share the flat parameter/cache layout, so their
outputs agree to ~1e-12 and caches are interchangeable.
"""

import os

from . import numpy_backend as _np_impl

_requested = os.environ.get("MINIMAX_DSAC_BACKEND", "").strip().lower()

if _requested not in ("", "auto", "numba", "numpy"):
    raise ValueError(
        f"MINIMAX_DSAC_BACKEND must be 'numba', 'numpy' or 'auto', got {_requested!r}"
    )

if _requested in ("", "auto", "numba"):
    try:
        from . import numba_backend as _nb_impl
    except ImportError:
        if _requested == "numba":
            raise
        _nb_impl = None
else:
    _nb_impl = None

GELU_TANH_COEF = _np_impl.GELU_TANH_COEF
GELU_CUBIC_COEF = _np_impl.GELU_CUBIC_COEF

# rows below which the JIT kernels beat numpy's vectorized ufuncs
AUTO_BATCH_THRESHOLD = 32

if _nb_impl is None:
    BACKEND_NAME = "numpy"
    gelu = _np_impl.gelu
    gelu_vjp = _np_impl.gelu_vjp
    forward = _np_impl.forward
    forward_cached = _np_impl.forward_cached
    backward = _np_impl.backward
    adam_update = _np_impl.adam_update
elif _requested == "numba":
    BACKEND_NAME = "numba"
    gelu = _nb_impl.gelu
    gelu_vjp = _nb_impl.gelu_vjp
    forward = _nb_impl.forward
    forward_cached = _nb_impl.forward_cached
    backward = _nb_impl.backward
    adam_update = _nb_impl.adam_update
else:
    BACKEND_NAME = "auto"

    def _pick(x):
        return _nb_impl if x.shape[0] < AUTO_BATCH_THRESHOLD else _np_impl

    def gelu(z):
        return _pick(z).gelu(z)

    def gelu_vjp(z, g):
        return _pick(z).gelu_vjp(z, g)

    def forward(params, dims, x):
        return _pick(x).forward(params, dims, x)

    def forward_cached(params, dims, x):
        return _pick(x).forward_cached(params, dims, x)

    def backward(params, dims, x, cache, gy):
        return _pick(x).backward(params, dims, x, cache, gy)

    adam_update = _nb_impl.adam_update
