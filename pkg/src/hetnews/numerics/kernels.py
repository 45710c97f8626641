"""Dense 64-bit array kernels shared by the tape ops and the evaluator."""
import contextlib

import numpy as np
import scipy.sparse as sp

from ..errors import ShapeMismatch

_WORKING = [np.float64]


@contextlib.contextmanager
def extended_precision():
    """Evaluate tape values in ``np.longdouble`` inside the block (finite-difference references)."""
    _WORKING.append(np.longdouble)
    try:
        yield
    finally:
        _WORKING.pop()


def as_dense(a) -> np.ndarray:
    return np.asarray(a, dtype=_WORKING[-1])


def matmul(a, b) -> np.ndarray:
    a, b = as_dense(a), as_dense(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def softmax_rows(m) -> np.ndarray:
    m = as_dense(m)
    z = m - m.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softplus(x) -> np.ndarray:
    x = as_dense(x)
    return np.logaddexp(0.0, x)


def sigmoid(x) -> np.ndarray:
    x = as_dense(x)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def segment_sum(values: np.ndarray, seg: np.ndarray, n: int) -> np.ndarray:
    """Sum rows of ``values`` into ``n`` buckets (sparse product, fixed reduction order)."""
    values = as_dense(values)
    seg = np.asarray(seg, dtype=np.int64)
    flat = values.reshape(len(seg), -1)
    ones = np.ones(len(seg))
    m = sp.csr_matrix((ones, (seg, np.arange(len(seg)))), shape=(n, len(seg)))
    return np.asarray(m @ flat).reshape((n,) + values.shape[1:])


def segment_max(values: np.ndarray, seg: np.ndarray, n: int) -> np.ndarray:
    out = np.full((n,) + values.shape[1:], -np.inf, dtype=values.dtype)
    np.maximum.at(out, seg, values)
    return out


def segment_softmax(logits: np.ndarray, seg: np.ndarray, n: int) -> np.ndarray:
    """Softmax of ``logits`` rows within groups sharing a ``seg`` id."""
    mx = segment_max(logits, seg, n)
    e = np.exp(logits - mx[seg])
    return e / segment_sum(e, seg, n)[seg]


def all_finite(a) -> bool:
    return bool(np.all(np.isfinite(a)))
