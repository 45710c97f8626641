"""Content-aware typed-neighbor aggregation.

Each node gets a content embedding from a gated recurrent pass over its
attribute vectors. Neighbors of every node type are picked by random walk
with restart, their content embeddings folded by a per-type recurrent cell,
and the per-type summaries mixed with the node's own content by attention.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..features import FeatureProvider
from ..graph import TypedGraph
from ..numerics import ParameterStore, ad, counter_rng, dropout_mask
from ..numerics.autodiff import Tensor

PREFIX = "hetgnn/"


@dataclass(frozen=True)
class WalkConfig:
    restart: float = 0.5
    length: int = 20
    budget: int = 10


def _init_gru(store: ParameterStore, prefix: str, dim: int, rng) -> None:
    bound = math.sqrt(6.0 / (3 * dim))
    for gate in ("z", "r", "n"):
        store.uniform(f"{prefix}W{gate}", (2 * dim, dim), bound, rng)
        store.add(f"{prefix}b{gate}", np.zeros((1, dim)))


def init_hetgnn(store: ParameterStore, g: TypedGraph, dim: int, rng: np.random.Generator) -> None:
    _init_gru(store, PREFIX + "content/", dim, rng)
    for t in g.schema.node_types:
        _init_gru(store, f"{PREFIX}agg/{t}/", dim, rng)
    store.uniform(PREFIX + "u", (2 * dim, 1), math.sqrt(6.0 / (2 * dim + 1)), rng)


def gru_cell(store: ParameterStore, prefix: str, x: Tensor, h: Tensor | None) -> Tensor:
    """Gated recurrent update; ``h=None`` is the zero initial state."""
    if h is None:
        h = ad.const(np.zeros(x.shape))
    xh = ad.concat([x, h], axis=1)
    z = ad.sigmoid(ad.add(ad.matmul(xh, store.var(prefix + "Wz")), store.var(prefix + "bz")))
    r = ad.sigmoid(ad.add(ad.matmul(xh, store.var(prefix + "Wr")), store.var(prefix + "br")))
    cand = ad.tanh(ad.add(ad.matmul(ad.concat([x, ad.mul(r, h)], axis=1), store.var(prefix + "Wn")),
                          store.var(prefix + "bn")))
    return ad.add(ad.mul(ad.sub(1.0, z), cand), ad.mul(z, h))


def undirected_adjacency(g: TypedGraph) -> list[np.ndarray]:
    src, dst = g.global_heads(), g.global_tails()
    a = np.concatenate([src, dst])
    b = np.concatenate([dst, src])
    keys = np.unique(a * g.num_nodes + b)
    a, b = keys // g.num_nodes, keys % g.num_nodes
    bounds = np.searchsorted(a, np.arange(g.num_nodes + 1))
    return [b[bounds[i]:bounds[i + 1]] for i in range(g.num_nodes)]


def sample_neighbors(g: TypedGraph, walk: WalkConfig, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Random-walk-with-restart neighbors of every node, grouped by node type.

    Returns, per node type, ``(idx, lengths)``: ``idx[v, :lengths[v]]`` are the
    global ids of the top-``budget`` most visited nodes of that type, in
    ascending id order. The walk from ``v`` draws from a generator keyed by
    ``(seed, v)``.
    """
    n = g.num_nodes
    adj = undirected_adjacency(g)
    types = g.node_type_of
    ntypes = len(g.schema.node_types)
    idx = [np.zeros((n, walk.budget), dtype=np.int64) for _ in range(ntypes)]
    lengths = [np.zeros(n, dtype=np.int64) for _ in range(ntypes)]
    for v in range(n):
        if len(adj[v]) == 0:
            continue
        draws = counter_rng(seed, v).random((walk.length, 2))
        visits: dict[int, int] = {}
        cur = v
        for restart_u, step_u in draws:
            nb = adj[cur]
            if restart_u < walk.restart or len(nb) == 0:
                cur = v
                continue
            cur = int(nb[int(step_u * len(nb))])
            if cur != v:
                visits[cur] = visits.get(cur, 0) + 1
        by_type: list[list[tuple[int, int]]] = [[] for _ in range(ntypes)]
        for u, c in visits.items():
            by_type[types[u]].append((-c, u))
        for t, cands in enumerate(by_type):
            chosen = sorted(u for _, u in sorted(cands)[:walk.budget])
            lengths[t][v] = len(chosen)
            idx[t][v, :len(chosen)] = chosen
    return list(zip(idx, lengths))


def _pack(idx: np.ndarray, lengths: np.ndarray, keep: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Keep the flagged slots of each row, packed to the front in their original order."""
    keep = keep & (np.arange(idx.shape[1])[None, :] < lengths[:, None])
    order = np.argsort(~keep, axis=1, kind="stable")
    return np.take_along_axis(idx, order, axis=1), keep.sum(axis=1)


def drop_samples(samples: list[tuple[np.ndarray, np.ndarray]], rate: float, seed: int,
                 epoch: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Neighbor dropout: each sampled (node, neighbor) slot survives with probability ``1 - rate``.

    Survivors keep their relative order and are packed to the front of the row.
    """
    if rate == 0.0:
        return samples
    budget = samples[0][0].shape[1]
    keep_all = dropout_mask(len(samples) * len(samples[0][1]) * budget, rate, seed, epoch)
    keep_all = keep_all.reshape(len(samples), -1, budget)
    return [_pack(idx, lengths, keep) for (idx, lengths), keep in zip(samples, keep_all)]


def hide_pairs(samples: list[tuple[np.ndarray, np.ndarray]], src: np.ndarray,
               dst: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    """Remove ``dst[k]`` from the samples of ``src[k]`` and vice versa (global ids)."""
    if len(src) == 0:
        return samples
    n = len(samples[0][1])
    a = np.concatenate([src, dst]).astype(np.int64)
    b = np.concatenate([dst, src]).astype(np.int64)
    hidden = np.unique(a * n + b)
    out = []
    for idx, lengths in samples:
        keys = np.arange(n)[:, None] * n + idx
        out.append(_pack(idx, lengths, ~np.isin(keys, hidden)))
    return out


def content_embeddings(features: FeatureProvider, store: ParameterStore) -> Tensor:
    first, second, has_second = features.attribute_sequences(store)
    n = features.graph.num_nodes
    h = gru_cell(store, PREFIX + "content/", first, None)
    two = np.flatnonzero(has_second)
    if len(two):
        h_two = ad.gather_rows(h, two)
        step = gru_cell(store, PREFIX + "content/", ad.gather_rows(second, two), h_two)
        h = ad.add(h, ad.scatter_rows(ad.sub(step, h_two), two, n))
    return h


def hetgnn_forward(g: TypedGraph, features: FeatureProvider, store: ParameterStore,
                   samples: list[tuple[np.ndarray, np.ndarray]], return_attention: bool = False):
    """Embed every node; ``samples`` come from :func:`sample_neighbors`."""
    n = g.num_nodes
    c = content_embeddings(features, store)
    cand, seg = [c], [np.arange(n)]
    for t, name in enumerate(g.schema.node_types):
        idx, lengths = samples[t]
        prefix = f"{PREFIX}agg/{name}/"
        h = None
        for s in range(idx.shape[1]):
            active = np.flatnonzero(lengths > s)
            if len(active) == 0:
                break
            x_s = ad.gather_rows(c, idx[active, s])
            if h is None:
                h = ad.scatter_rows(gru_cell(store, prefix, x_s, None), active, n)
            else:
                h_act = ad.gather_rows(h, active)
                h = ad.add(h, ad.scatter_rows(ad.sub(gru_cell(store, prefix, x_s, h_act), h_act), active, n))
        present = np.flatnonzero(lengths > 0)
        if len(present):
            cand.append(ad.gather_rows(h, present))
            seg.append(present)
    cand_all = ad.concat(cand)
    seg_all = np.concatenate(seg)
    pair = ad.concat([ad.gather_rows(c, seg_all), cand_all], axis=1)
    logits = ad.leaky_relu(ad.matmul(pair, store.var(PREFIX + "u")))
    alpha = ad.segment_softmax(logits, seg_all, n)
    out = ad.scatter_rows(ad.mul(cand_all, alpha), seg_all, n)
    if return_attention:
        return out, (alpha.value[:, 0], seg_all)
    return out
