import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hetnews.errors import ConfigError, OddDim
from hetnews.features import (HYBRID, LEARNED, MODES, TITLE, FeatureProvider, TemporalEncoding, TitleEmbedder,
                              embed_title, init_embedding_table, load_precomputed_vectors, temporal_encode,
                              token_vector, tokenize)
from hetnews.graph import parse_date
from hetnews.numerics import ParameterStore


def test_table_shapes_and_bounds():
    tables = init_embedding_table((23, 472, 1242, 3464, 368), 128, seed=0)
    assert tables[1].shape == (472, 128)
    again = init_embedding_table((23, 472, 1242, 3464, 368), 128, seed=0)
    assert all(np.array_equal(a, b) for a, b in zip(tables, again))
    small = init_embedding_table((5, 7), 4, seed=1)
    assert all(np.all(np.abs(t) <= math.sqrt(1.5)) for t in small)


def test_tokenize():
    assert tokenize("COVID-19: New vaccine_trial!") == ["covid", "19", "new", "vaccine", "trial"]


def test_embed_title_examples():
    e = TitleEmbedder(8, token_seed=0, attention_weights=np.arange(8.0))
    assert np.array_equal(embed_title(e, ""), np.zeros(8))
    assert np.allclose(embed_title(e, "vaccine"), token_vector("vaccine", 8, 0))
    assert np.linalg.norm(token_vector("vaccine", 8, 0)) == pytest.approx(1.0)
    assert np.array_equal(embed_title(e, "same words here"), embed_title(e, "same words here"))


@given(st.permutations(["ocean", "heat", "record", "warming", "study"]))
def test_uniform_attention_is_permutation_invariant(tokens):
    e = TitleEmbedder(16, token_seed=3)
    ref = embed_title(e, "ocean heat record warming study")
    assert np.allclose(embed_title(e, " ".join(tokens)), ref, atol=1e-12)


def test_temporal_examples():
    t = TemporalEncoding(8)
    zero = temporal_encode(t, t.reference_date)
    assert zero.tolist() == [0.0, 1.0] * 4
    with pytest.raises(OddDim):
        TemporalEncoding(7)
    late = temporal_encode(t, parse_date("2020-10-26"))
    assert parse_date("2020-10-26") - t.reference_date == 86
    assert np.all(np.abs(late) <= 1.0)


@given(st.floats(-1e7, 1e7), st.integers(1, 32).map(lambda k: 2 * k))
def test_temporal_bounded(delta, dim):
    v = temporal_encode(TemporalEncoding(dim), TemporalEncoding(dim).reference_date + delta)
    assert v.shape == (dim,)
    assert np.all(np.abs(v) <= 1.0)


@pytest.mark.parametrize("mode", MODES)
def test_provider_widths(tiny, mode):
    f = FeatureProvider(tiny, mode=mode, dim=6)
    store = ParameterStore()
    f.init_params(store, seed=0)
    x = f.node_matrix(store).value
    assert x.shape == (tiny.num_nodes, 6)
    first, second, has_second = f.attribute_sequences(store)
    assert first.shape == second.shape == (tiny.num_nodes, 6)
    assert has_second.any() == (mode == HYBRID)


def test_title_rows_match_reference_embedder(tiny):
    f = FeatureProvider(tiny, mode=TITLE, dim=8, token_seed=5)
    store = ParameterStore()
    f.init_params(store, seed=2)
    att = store["features/title_attention"].value.ravel()
    e = TitleEmbedder(8, token_seed=5, attention_weights=att)
    x = f.node_matrix(store).value
    for ref, a in tiny.attributes.items():
        gid = tiny.global_id(ref)
        assert np.allclose(x[gid], embed_title(e, a.title), atol=1e-12)
    untitled = np.setdiff1d(np.arange(tiny.num_nodes), f.titled)
    assert np.array_equal(x[untitled], f.table(store).value[untitled])


def test_learned_mode_ignores_titles(tiny):
    f = FeatureProvider(tiny, mode=LEARNED, dim=4)
    store = ParameterStore()
    f.init_params(store, seed=0)
    assert "features/title_attention" not in store
    assert np.array_equal(f.node_matrix(store).value, f.table(store).value)


def test_dates(tiny):
    d = FeatureProvider(tiny, dim=4).dates()
    art = tiny.schema.type_index("article")
    off = tiny.offsets[art]
    assert d[off] == parse_date("2020-08-03")
    assert np.isnan(d[0])


def test_precomputed_vectors(tiny, tmp_path):
    path = tmp_path / "vec.tsv"
    path.write_text("article\ta1\t1 2 3 4\npaper\tp0\t0 0 0 1\n")
    vecs = load_precomputed_vectors(path, tiny, 4)
    f = FeatureProvider(tiny, mode=TITLE, dim=4, precomputed=vecs)
    store = ParameterStore()
    f.init_params(store, seed=0)
    x = f.node_matrix(store).value
    a1 = tiny.offsets[tiny.schema.type_index("article")] + 1
    assert x[a1].tolist() == [1, 2, 3, 4]


def test_unknown_mode(tiny):
    with pytest.raises(ConfigError):
        FeatureProvider(tiny, mode="bag-of-words", dim=4)
