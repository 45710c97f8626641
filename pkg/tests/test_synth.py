import numpy as np
import pytest
from hypothesis import given, strategies as st

from hetnews.errors import ConfigError, InfeasibleCounts
from hetnews.graph import degree_stats, write_graph
from hetnews.synth import WINDOW_END, WINDOW_START, SynthConfig, generate


def _block(label: str, blocks: int) -> int:
    return int(label[1:]) % blocks


def test_defaults_reproduce_corpus_statistics():
    g = generate(SynthConfig())
    assert g.node_counts == (23, 472, 1242, 3464, 368)
    s = g.schema
    counts = {name: g.relation_count(r) for r, name in enumerate(s.relation_types)}
    assert counts == {"cites": 1421, "has_topic": 1086, "is_author_of": 3576, "is_affiliated_with": 3464}
    assert (g.num_nodes, g.num_triples) == (5569, 9547)
    stats = degree_stats(g)
    assert stats[("article", "cites", "forward")].min >= 1
    assert stats[("article", "has_topic", "forward")].min >= 1


def test_dates_and_titles():
    g = generate(SynthConfig(seed=3))
    art = g.schema.type_index("article")
    for ref, a in g.attributes.items():
        if ref.node_type == art:
            assert WINDOW_START <= a.published_date <= WINDOW_END
            assert 5 <= len(a.title.split()) <= 10


def test_infeasible_counts():
    with pytest.raises(InfeasibleCounts):
        generate(SynthConfig(topics=2, articles=2, has_topic=5))
    with pytest.raises(ConfigError):
        SynthConfig(topics=20, planted_blocks=11)
    with pytest.raises(ConfigError):
        SynthConfig(planted_noise=1.5)


def _small(**kw):
    fields = dict(topics=10, articles=60, papers=80, authors=50, institutes=8, cites=120, has_topic=90,
                  is_author_of=100, is_affiliated_with=50)
    fields.update(kw)
    return SynthConfig(**fields)


def test_noise_free_planting_is_block_diagonal():
    g = generate(_small(planted_blocks=2, planted_noise=0.0, seed=5))
    s = g.schema
    for name in ("has_topic", "cites"):
        r = s.relation_index(name)
        m = g.rels == r
        ht, tt = s.head_type(r), s.tail_type(r)
        for h, t in zip(g.heads[m], g.tails[m]):
            assert _block(g.node_labels[ht][h], 2) == _block(g.node_labels[tt][t], 2)


def test_planted_titles_use_block_vocabulary():
    g = generate(_small(planted_blocks=2, seed=1))
    art = g.schema.type_index("article")
    for ref, a in g.attributes.items():
        if ref.node_type == art:
            b = _block(g.node_labels[art][ref.local_id], 2)
            assert all(int(w[1:]) % 2 == b for w in a.title.split())


@given(st.integers(0, 10_000), st.floats(0.0, 0.5))
def test_generated_graphs_hit_requested_counts(seed, noise):
    cfg = _small(seed=seed, planted_blocks=2, planted_noise=noise)
    g = generate(cfg)
    assert g.node_counts == (10, 60, 80, 50, 8)
    assert g.num_triples == 120 + 90 + 100 + 50


def test_same_config_same_bytes(tmp_path):
    for k in (0, 1):
        write_graph(generate(_small(seed=9, planted_blocks=2)), tmp_path / f"e{k}.tsv", tmp_path / f"a{k}.tsv")
    assert (tmp_path / "e0.tsv").read_bytes() == (tmp_path / "e1.tsv").read_bytes()
    assert (tmp_path / "a0.tsv").read_bytes() == (tmp_path / "a1.tsv").read_bytes()
    other = generate(_small(seed=10, planted_blocks=2))
    assert not np.array_equal(other.tails, generate(_small(seed=9, planted_blocks=2)).tails)
