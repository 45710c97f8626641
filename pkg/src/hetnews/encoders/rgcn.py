"""Single-layer relational graph convolution."""
from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp

from ..graph import TypedGraph
from ..numerics import ParameterStore, ad, dropout_mask
from ..numerics.autodiff import Tensor
from ..errors import ShapeMismatch

PREFIX = "rgcn/"


def init_rgcn(store: ParameterStore, g: TypedGraph, dim: int, rng: np.random.Generator) -> None:
    bound = math.sqrt(6.0 / (2 * dim))
    store.uniform(PREFIX + "W0", (dim, dim), bound, rng)
    for name in g.schema.relation_types:
        store.uniform(f"{PREFIX}W/{name}", (dim, dim), bound, rng)


def normalized_adjacency(g: TypedGraph, keep: np.ndarray | None = None) -> list[sp.csr_matrix | None]:
    """Per relation, the (N × N) matrix with 1/c_{i,r} at (i, j) for every kept edge j -r-> i.

    ``c_{i,r}`` counts kept in-edges only, so normalization follows dropout.
    """
    n = g.num_nodes
    src, dst = g.global_heads(), g.global_tails()
    out = []
    for r in range(len(g.schema.relation_types)):
        m = g.rels == r
        if keep is not None:
            m &= keep
        if not m.any():
            out.append(None)
            continue
        s, d = src[m], dst[m]
        c = np.bincount(d, minlength=n).astype(np.float64)
        out.append(sp.csr_matrix((1.0 / c[d], (d, s)), shape=(n, n)))
    return out


def rgcn_forward(g: TypedGraph, x: Tensor, store: ParameterStore, dropout_rate: float = 0.0,
                 dropout_seed: int = 0, training: bool = False, epoch: int = 0,
                 hidden: np.ndarray | None = None) -> Tensor:
    """h_i = ReLU(sum_r sum_{j in N_i^r} W_r x_j / c_{i,r} + W_0 x_i)."""
    x = ad.const(x)
    w0 = store.var(PREFIX + "W0")
    if x.shape != (g.num_nodes, w0.shape[0]):
        raise ShapeMismatch(f"R-GCN input {x.shape} does not match {g.num_nodes} nodes × dim {w0.shape[0]}")
    keep = None
    if training and dropout_rate > 0.0:
        keep = dropout_mask(g.num_triples, dropout_rate, dropout_seed, epoch)
    if hidden is not None:
        keep = ~hidden if keep is None else keep & ~hidden
    out = ad.matmul(x, w0)
    for name, a in zip(g.schema.relation_types, normalized_adjacency(g, keep)):
        if a is not None:
            out = ad.add(out, ad.matmul(ad.spmm(a, x), store.var(f"{PREFIX}W/{name}")))
    return ad.relu(out)
