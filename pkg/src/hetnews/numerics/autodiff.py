"""Reverse-mode gradients over a fixed repertoire of array operations.

A forward pass builds a graph of :class:`Tensor` nodes; :meth:`Tensor.backward`
walks it in reverse topological order. Leaves bound to a
:class:`~hetnews.numerics.params.Parameter` accumulate into ``param.grad``.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..errors import ShapeMismatch
from . import kernels


class Tensor:
    __slots__ = ("value", "grad", "parents", "backward_fn", "param", "requires_grad")

    def __init__(self, value, parents=(), backward_fn=None, param=None):
        self.value = kernels.as_dense(value)
        self.grad = None
        self.parents = parents
        self.backward_fn = backward_fn
        self.param = param
        self.requires_grad = param is not None or any(p.requires_grad for p in parents)

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def backward(self) -> None:
        if self.value.size != 1:
            raise ShapeMismatch("backward() needs a scalar output")
        order, seen = [], set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node.parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        grads = {id(self): np.ones_like(self.value)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node.param is not None:
                node.param.grad += g.reshape(node.param.grad.shape)
            if node.backward_fn is None:
                continue
            for p, pg in zip(node.parents, node.backward_fn(g)):
                if pg is None or not p.requires_grad:
                    continue
                if id(p) in grads:
                    grads[id(p)] = grads[id(p)] + pg
                else:
                    grads[id(p)] = pg


def const(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, n in enumerate(shape):
        if n == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


def add(a, b) -> Tensor:
    a, b = const(a), const(b)
    return Tensor(a.value + b.value, (a, b),
                  lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = const(a), const(b)
    return Tensor(a.value - b.value, (a, b),
                  lambda g: (_unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)))


def mul(a, b) -> Tensor:
    a, b = const(a), const(b)
    return Tensor(a.value * b.value, (a, b),
                  lambda g: (_unbroadcast(g * b.value, a.shape), _unbroadcast(g * a.value, b.shape)))


def matmul(a, b) -> Tensor:
    a, b = const(a), const(b)
    out = kernels.matmul(a.value, b.value)
    return Tensor(out, (a, b), lambda g: (g @ b.value.T, a.value.T @ g))


def relu(a) -> Tensor:
    a = const(a)
    mask = a.value > 0
    return Tensor(np.where(mask, a.value, 0.0), (a,), lambda g: (g * mask,))


def leaky_relu(a, slope: float = 0.2) -> Tensor:
    a = const(a)
    k = np.where(a.value > 0, 1.0, slope)
    return Tensor(a.value * k, (a,), lambda g: (g * k,))


def sigmoid(a) -> Tensor:
    a = const(a)
    s = kernels.sigmoid(a.value)
    return Tensor(s, (a,), lambda g: (g * s * (1.0 - s),))


def tanh(a) -> Tensor:
    a = const(a)
    t = np.tanh(a.value)
    return Tensor(t, (a,), lambda g: (g * (1.0 - t * t),))


def softplus(a) -> Tensor:
    a = const(a)
    return Tensor(kernels.softplus(a.value), (a,), lambda g: (g * kernels.sigmoid(a.value),))


def sum(a, axis=None, keepdims=False) -> Tensor:  # noqa: A001
    a = const(a)
    out = a.value.sum(axis=axis, keepdims=keepdims)

    def back(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)
    return Tensor(out, (a,), back)


def mean(a) -> Tensor:
    a = const(a)
    n = a.value.size
    return Tensor(a.value.mean(), (a,), lambda g: (np.full(a.shape, g / n),))


def reshape(a, shape) -> Tensor:
    a = const(a)
    return Tensor(a.value.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def concat(parts, axis: int = 0) -> Tensor:
    parts = [const(p) for p in parts]
    sizes = [p.shape[axis] for p in parts]
    cuts = np.cumsum(sizes)[:-1]
    return Tensor(np.concatenate([p.value for p in parts], axis=axis), tuple(parts),
                  lambda g: tuple(np.split(g, cuts, axis=axis)))


def gather_rows(a, idx) -> Tensor:
    a = const(a)
    idx = np.asarray(idx, dtype=np.int64)
    n = a.shape[0]
    return Tensor(a.value[idx], (a,), lambda g: (kernels.segment_sum(g, idx, n),))


def scatter_rows(a, idx, n: int) -> Tensor:
    """Sum rows of ``a`` into ``n`` output rows at positions ``idx``."""
    a = const(a)
    idx = np.asarray(idx, dtype=np.int64)
    return Tensor(kernels.segment_sum(a.value, idx, n), (a,), lambda g: (g[idx],))


def spmm(m: sp.spmatrix, a) -> Tensor:
    """Constant sparse matrix times tensor."""
    a = const(a)
    m = sp.csr_matrix(m)
    if m.shape[1] != a.shape[0]:
        raise ShapeMismatch(f"cannot multiply sparse {m.shape} by {a.shape}")
    mt = m.T.tocsr()
    return Tensor(m @ a.value, (a,), lambda g: (mt @ g,))


def segment_softmax(logits, seg, n: int) -> Tensor:
    """Softmax over rows of ``logits`` grouped by ``seg`` (independently per column)."""
    logits = const(logits)
    seg = np.asarray(seg, dtype=np.int64)
    p = kernels.segment_softmax(logits.value, seg, n)

    def back(g):
        pg = p * g
        return (pg - p * kernels.segment_sum(pg, seg, n)[seg],)
    return Tensor(p, (logits,), back)


def row_softmax(a) -> Tensor:
    a = const(a)
    p = kernels.softmax_rows(a.value)

    def back(g):
        pg = p * g
        return (pg - p * pg.sum(axis=-1, keepdims=True),)
    return Tensor(p, (a,), back)


def block_matmul(x, w, blocks: int) -> Tensor:
    """Per-block product: ``x`` is (n, blocks*k), ``w`` is (blocks*k, m) holding one k×m matrix per block."""
    x, w = const(x), const(w)
    n, width = x.shape
    if width % blocks or w.shape[0] != width:
        raise ShapeMismatch(f"block_matmul: x {x.shape}, w {w.shape}, blocks {blocks}")
    k = width // blocks
    m = w.shape[1]
    xb = x.value.reshape(n, blocks, k)
    wb = w.value.reshape(blocks, k, m)
    out = np.einsum("nbk,bkm->nbm", xb, wb).reshape(n, blocks * m)

    def back(g):
        gb = g.reshape(n, blocks, m)
        gx = np.einsum("nbm,bkm->nbk", gb, wb).reshape(n, width)
        gw = np.einsum("nbk,nbm->bkm", xb, gb).reshape(blocks * k, m)
        return gx, gw
    return Tensor(out, (x, w), back)


def triple_scores(emb, rel, heads, rels, tails) -> Tensor:
    """DistMult ``sum_k emb[h,k] * rel[r,k] * emb[t,k]`` for every (h, r, t) row."""
    emb, rel = const(emb), const(rel)
    heads, rels, tails = (np.asarray(a, dtype=np.int64) for a in (heads, rels, tails))
    h, r, t = emb.value[heads], rel.value[rels], emb.value[tails]
    hr = h * r
    n_nodes, n_rel = emb.shape[0], rel.shape[0]

    def back(g):
        g = g[:, None]
        g_emb = kernels.segment_sum(g * r * t, heads, n_nodes) + kernels.segment_sum(g * hr, tails, n_nodes)
        return g_emb, kernels.segment_sum(g * h * t, rels, n_rel)
    return Tensor((hr * t).sum(axis=1), (emb, rel), back)
