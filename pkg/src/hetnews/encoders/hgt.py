"""One typed-attention transformer layer with a residual connection."""
from __future__ import annotations

import math

import numpy as np

from ..errors import HeadWidthError, ShapeMismatch
from ..features import TemporalEncoding, temporal_encode
from ..graph import TypedGraph
from ..numerics import ParameterStore, ad, dropout_mask
from ..numerics.autodiff import Tensor

PREFIX = "hgt/"


def init_hgt(store: ParameterStore, g: TypedGraph, dim: int, head_count: int, rng: np.random.Generator) -> None:
    if head_count <= 0 or dim % head_count:
        raise HeadWidthError(f"{head_count} heads do not divide dim {dim}")
    dh = dim // head_count
    bound = math.sqrt(6.0 / (2 * dim))
    for t in g.schema.node_types:
        for kind in "KQVA":
            store.uniform(f"{PREFIX}{kind}/{t}", (dim, dim), bound, rng)
    for r in g.schema.relation_types:
        store.uniform(f"{PREFIX}att/{r}", (dim, dh), math.sqrt(3.0 / dh), rng)
        store.uniform(f"{PREFIX}msg/{r}", (dim, dh), math.sqrt(3.0 / dh), rng)
        store.add(f"{PREFIX}mu/{r}", np.ones((1, 1)))


def head_count_of(store: ParameterStore, g: TypedGraph) -> int:
    w = store[f"{PREFIX}att/{g.schema.relation_types[0]}"].value
    return w.shape[0] // w.shape[1]


def _typed(store: ParameterStore, kind: str, g: TypedGraph, x: Tensor) -> Tensor:
    """Apply the per-node-type matrix ``kind`` to the rows of each type."""
    off = g.offsets
    parts = []
    for t, name in enumerate(g.schema.node_types):
        if off[t + 1] > off[t]:
            rows = ad.gather_rows(x, np.arange(off[t], off[t + 1]))
            parts.append(ad.matmul(rows, store.var(f"{PREFIX}{kind}/{name}")))
    return ad.concat(parts)


def temporal_rows(g: TypedGraph, dates: np.ndarray, temporal: TemporalEncoding) -> np.ndarray:
    """Date encodings for every node of a dated type; undated types get zeros, missing dates Δ=0."""
    out = np.zeros((g.num_nodes, temporal.dim))
    types = g.node_type_of
    dated = np.isin(types, sorted(g.dated_types()))
    d = np.where(np.isnan(dates), temporal.reference_date, dates)
    out[dated] = temporal_encode(temporal, d[dated])
    return out


def hgt_forward(g: TypedGraph, x: Tensor, dates: np.ndarray, temporal: TemporalEncoding, store: ParameterStore,
                dropout_rate: float = 0.0, dropout_seed: int = 0, training: bool = False, epoch: int = 0,
                return_attention: bool = False, hidden: np.ndarray | None = None):
    x = ad.const(x)
    n, dim = x.shape
    if n != g.num_nodes or temporal.dim != dim:
        raise ShapeMismatch(f"HGT input {x.shape} vs {g.num_nodes} nodes, temporal dim {temporal.dim}")
    heads = head_count_of(store, g)
    if dim % heads:
        raise HeadWidthError(f"{heads} heads do not divide dim {dim}")
    dh = dim // heads
    source = ad.add(x, temporal_rows(g, dates, temporal))
    k_all = _typed(store, "K", g, source)
    v_all = _typed(store, "V", g, source)
    q_all = _typed(store, "Q", g, x)

    keep = np.ones(g.num_triples, dtype=bool)
    if training and dropout_rate > 0.0:
        keep = dropout_mask(g.num_triples, dropout_rate, dropout_seed, epoch)
    if hidden is not None:
        keep = keep & ~hidden
    src_all, dst_all = g.global_heads(), g.global_tails()
    logits, msgs, dsts = [], [], []
    scale = 1.0 / math.sqrt(dh)
    for r, name in enumerate(g.schema.relation_types):
        m = (g.rels == r) & keep
        if not m.any():
            continue
        src, dst = src_all[m], dst_all[m]
        e = len(src)
        kw = ad.block_matmul(ad.gather_rows(k_all, src), store.var(f"{PREFIX}att/{name}"), heads)
        qk = ad.sum(ad.reshape(ad.mul(kw, ad.gather_rows(q_all, dst)), (e, heads, dh)), axis=2)
        logits.append(ad.mul(qk, ad.mul(store.var(f"{PREFIX}mu/{name}"), scale)))
        msgs.append(ad.block_matmul(ad.gather_rows(v_all, src), store.var(f"{PREFIX}msg/{name}"), heads))
        dsts.append(dst)
    if not logits:
        return (x, None) if return_attention else x
    dst = np.concatenate(dsts)
    e = len(dst)
    att = ad.segment_softmax(ad.concat(logits), dst, n)
    weighted = ad.mul(ad.reshape(ad.concat(msgs), (e, heads, dh)), ad.reshape(att, (e, heads, 1)))
    agg = ad.scatter_rows(ad.reshape(weighted, (e, dim)), dst, n)
    out = ad.add(_typed(store, "A", g, agg), x)
    if return_attention:
        return out, (att.value, dst)
    return out
