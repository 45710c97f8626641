import numpy as np
import pytest
from hypothesis import given, strategies as st

from hetnews.encoders import (HETGNN, HGT, INFERENCE, KINDS, RGCN, TRAINING, EncoderConfig, WalkConfig, encode,
                              hetgnn_forward, hgt_forward, init_encoder, rgcn_forward, sample_neighbors, store_kind)
from hetnews.encoders.hetgnn import drop_samples
from hetnews.errors import HeadWidthError, KindMismatch
from hetnews.features import LEARNED, FeatureProvider, TemporalEncoding
from hetnews.fixtures import tiny_graph
from hetnews.graph import augment_with_inverses, graph_from_rows
from hetnews.numerics import ParameterStore

from .conftest import rng_matrix, small_graphs


def _store(g, kind, dim=4, heads=2, seed=0):
    store = ParameterStore()
    init_encoder(store, g, EncoderConfig(kind, dim, head_count=heads), seed)
    return store


def _label_features(g, dim):
    """Input rows that depend only on a node's (type, label), not on its id."""
    x = np.zeros((g.num_nodes, dim))
    for gid in range(g.num_nodes):
        ref = g.node_ref(gid)
        label = g.node_labels[ref.node_type][ref.local_id]
        x[gid] = np.random.default_rng([ref.node_type, sum(map(ord, label))]).uniform(-1, 1, dim)
    return x


def _by_label(g, emb):
    out = {}
    for gid in range(g.num_nodes):
        ref = g.node_ref(gid)
        out[(ref.node_type, g.node_labels[ref.node_type][ref.local_id])] = emb[gid]
    return out


def test_rgcn_without_in_edges_is_self_loop_only():
    g = tiny_graph()  # articles only ever appear as heads
    x = rng_matrix(1, (g.num_nodes, 4))
    store = _store(g, RGCN)
    out = rgcn_forward(g, x, store).value
    art = g.schema.type_index("article")
    rows = slice(g.offsets[art], g.offsets[art + 1])
    assert np.allclose(out[rows], np.maximum(x[rows] @ store["rgcn/W0"].value, 0.0))


def test_rgcn_single_edge():
    g = graph_from_rows([("article", "a0", "cites", "paper", "p0")])
    x = np.array([[1.0, -1.0], [0.5, 2.0]])
    store = ParameterStore()
    store.add("rgcn/W0", np.array([[1.0, 0.0], [0.0, 1.0]]))
    for name in g.schema.relation_types:
        store.add(f"rgcn/W/{name}", np.zeros((2, 2)))
    store["rgcn/W/cites"].value[...] = [[2.0, 0.0], [0.0, -1.0]]
    out = rgcn_forward(g, x, store).value
    a0, p0 = g.offsets[g.schema.type_index("article")], g.offsets[g.schema.type_index("paper")]
    assert out[a0].tolist() == [1.0, 0.0]
    # W0 x_p0 + W_cites x_a0 = (0.5, 2) + (2, 1)
    assert out[p0].tolist() == [2.5, 3.0]


@pytest.mark.parametrize("kind", KINDS)
def test_dropout_ignored_at_inference(kind):
    g = augment_with_inverses(tiny_graph(dense=True))
    f = FeatureProvider(g, dim=4)
    store = _store(g, kind)
    f.init_params(store, 0)
    ref = encode(kind, g, f, store, INFERENCE, 0, EncoderConfig(kind, 4, 0.0, 2)).value
    dropped = encode(kind, g, f, store, INFERENCE, 0, EncoderConfig(kind, 4, 0.6, 2)).value
    assert np.array_equal(ref, dropped)
    train_a = encode(kind, g, f, store, TRAINING, 0, EncoderConfig(kind, 4, 0.6, 2), epoch=3).value
    train_b = encode(kind, g, f, store, TRAINING, 0, EncoderConfig(kind, 4, 0.6, 2), epoch=3).value
    assert np.array_equal(train_a, train_b)


def test_rgcn_locality():
    g = augment_with_inverses(tiny_graph())
    x = rng_matrix(2, (g.num_nodes, 4))
    store = _store(g, RGCN)
    base = rgcn_forward(g, x, store).value
    # institute i0 is two hops from every article
    i0 = g.offsets[g.schema.type_index("institute")]
    x2 = x.copy()
    x2[i0] += 5.0
    moved = rgcn_forward(g, x2, store).value
    art = g.schema.type_index("article")
    rows = slice(g.offsets[art], g.offsets[art + 1])
    assert np.array_equal(base[rows], moved[rows])
    assert not np.array_equal(base[i0], moved[i0])


@given(small_graphs(), st.randoms(use_true_random=False))
def test_rgcn_and_hgt_are_permutation_equivariant(g, rnd):
    rows = [(g.schema.node_types[g.schema.head_type(r)], g.node_labels[g.schema.head_type(r)][h],
             g.schema.relation_types[r], g.schema.node_types[g.schema.tail_type(r)],
             g.node_labels[g.schema.tail_type(r)][t]) for h, r, t in zip(g.heads, g.rels, g.tails)]
    rnd.shuffle(rows)
    g2 = graph_from_rows(rows, g.schema)
    a, b = augment_with_inverses(g), augment_with_inverses(g2)
    dates = np.full(a.num_nodes, np.nan)
    temporal = TemporalEncoding(4)
    store_r, store_h = _store(a, RGCN), _store(a, HGT)
    outs = []
    for h in (a, b):
        x = _label_features(h, 4)
        outs.append((_by_label(h, rgcn_forward(h, x, store_r).value),
                     _by_label(h, hgt_forward(h, x, np.full(h.num_nodes, np.nan), temporal, store_h).value)))
    for k in outs[0][0]:
        assert np.allclose(outs[0][0][k], outs[1][0][k], atol=1e-12)
        assert np.allclose(outs[0][1][k], outs[1][1][k], atol=1e-12)
    assert len(dates) == a.num_nodes


def _one_relation_hgt(rows, dim=4):
    g = graph_from_rows(rows)
    store = _store(g, HGT, dim=dim, heads=2)
    x = rng_matrix(3, (g.num_nodes, dim))
    out, (att, dst) = hgt_forward(g, x, np.full(g.num_nodes, np.nan), TemporalEncoding(dim), store,
                                  return_attention=True)
    return g, x, out.value, att, dst


def test_hgt_attention_examples():
    g, x, out, att, dst = _one_relation_hgt([("article", "a0", "cites", "paper", "p0")])
    a0 = g.offsets[g.schema.type_index("article")]
    assert np.array_equal(out[a0], x[a0])  # no in-edges: residual only
    assert np.allclose(att, 1.0)
    # the same source twice under two relations that look alike is not possible in
    # a simple graph, so use two articles with identical inputs instead
    g, x, out, att, dst = _one_relation_hgt([("article", "a0", "cites", "paper", "p0"),
                                            ("article", "a1", "cites", "paper", "p0")])
    store = _store(g, HGT)
    x[g.offsets[1] + 1] = x[g.offsets[1]]
    _, (att, _) = hgt_forward(g, x, np.full(g.num_nodes, np.nan), TemporalEncoding(4), store,
                              return_attention=True)
    assert np.allclose(att, 0.5)


@given(small_graphs())
def test_hgt_attention_sums_to_one(g):
    g = augment_with_inverses(g)
    store = _store(g, HGT)
    _, (att, dst) = hgt_forward(g, _label_features(g, 4), np.full(g.num_nodes, np.nan), TemporalEncoding(4),
                                store, return_attention=True)
    for head in range(att.shape[1]):
        sums = np.bincount(dst, weights=att[:, head], minlength=g.num_nodes)
        assert np.allclose(sums[np.unique(dst)], 1.0)


def test_hgt_head_width():
    g = tiny_graph()
    with pytest.raises(HeadWidthError):
        _store(g, HGT, dim=6, heads=4)


def test_hetgnn_attention_examples():
    g = augment_with_inverses(graph_from_rows([("article", "a0", "cites", "paper", "p0")]))
    f = FeatureProvider(g, mode=LEARNED, dim=4)
    store = _store(g, HETGNN)
    f.init_params(store, 0)
    samples = sample_neighbors(g, WalkConfig(), 0)
    _, (alpha, seg) = hetgnn_forward(g, f, store, samples, return_attention=True)
    # each node: own content plus one neighbor-type summary
    assert np.allclose(np.bincount(seg, weights=alpha), 1.0)
    # with a zero attention vector every candidate gets the same weight
    store["hetgnn/u"].value[...] = 0.0
    g = augment_with_inverses(tiny_graph(dense=True))
    f = FeatureProvider(g, mode=LEARNED, dim=4)
    store2 = _store(g, HETGNN)
    f.init_params(store2, 0)
    store2["hetgnn/u"].value[...] = 0.0
    samples = sample_neighbors(g, WalkConfig(), 0)
    _, (alpha, seg) = hetgnn_forward(g, f, store2, samples, return_attention=True)
    counts = np.bincount(seg)
    assert np.allclose(alpha, 1.0 / counts[seg])
    a0 = g.offsets[g.schema.type_index("article")]
    reach = sum(int(s[1][a0] > 0) for s in samples)
    assert counts[a0] == reach + 1


def test_neighbor_samples_are_deterministic_and_typed():
    g = augment_with_inverses(tiny_graph(dense=True))
    a, b = sample_neighbors(g, WalkConfig(), 4), sample_neighbors(g, WalkConfig(), 4)
    for (ia, la), (ib, lb) in zip(a, b):
        assert np.array_equal(ia, ib) and np.array_equal(la, lb)
    for t, (idx, lengths) in enumerate(a):
        assert np.all(lengths <= WalkConfig().budget)
        for v in range(g.num_nodes):
            chosen = idx[v, :lengths[v]]
            assert np.all(g.node_type_of[chosen] == t)
            assert v not in chosen


def test_drop_samples():
    g = augment_with_inverses(tiny_graph(dense=True))
    samples = sample_neighbors(g, WalkConfig(), 0)
    assert drop_samples(samples, 0.0, 0) is samples
    dropped = drop_samples(samples, 0.5, 0, epoch=1)
    for (idx, lengths), (di, dl) in zip(samples, dropped):
        assert np.all(dl <= lengths)
        for v in range(g.num_nodes):
            kept = list(di[v, :dl[v]])
            full = list(idx[v, :lengths[v]])
            assert kept == [u for u in full if u in kept]
    again = drop_samples(samples, 0.5, 0, epoch=1)
    assert all(np.array_equal(x[1], y[1]) for x, y in zip(dropped, again))


def test_store_kind_and_mismatch():
    g = augment_with_inverses(tiny_graph())
    f = FeatureProvider(g, dim=4)
    for kind in KINDS:
        assert store_kind(_store(g, kind)) == kind
    store = _store(g, RGCN)
    f.init_params(store, 0)
    with pytest.raises(KindMismatch):
        encode(HGT, g, f, store)
