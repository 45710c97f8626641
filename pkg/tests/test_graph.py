import numpy as np
import pytest
from hypothesis import given

from hetnews.errors import AlreadyAugmented, EmptyGraph, MalformedRow, SchemaViolation, UnknownNode, UnknownType
from hetnews.graph import (FORWARD, INVERSE, NodeRef, augment_with_inverses, default_schema, degree_stats,
                           graph_from_rows, load_graph, neighbors, original_part, parse_date, write_graph)
from hetnews.synth import SynthConfig, generate

from .conftest import small_graphs

NINE_ROWS = """\
article\ta0\tcites\tpaper\tp0
article\ta0\tcites\tpaper\tp1
article\ta1\tcites\tpaper\tp1
article\ta0\thas_topic\ttopic\tt0
article\ta1\thas_topic\ttopic\tt1
author\tu0\tis_author_of\tpaper\tp0
author\tu1\tis_author_of\tpaper\tp1
author\tu0\tis_affiliated_with\tinstitute\ti0
author\tu1\tis_affiliated_with\tinstitute\ti0
"""


@pytest.fixture
def nine(tmp_path):
    path = tmp_path / "edges.tsv"
    path.write_text(NINE_ROWS)
    return load_graph(path)


def test_load_nine_row_fixture(nine):
    assert nine.node_counts == (2, 2, 2, 2, 1)
    assert sum(nine.node_counts) == 9
    assert nine.num_triples == 9
    assert [nine.relation_count(r) for r in range(4)] == [3, 2, 2, 2]


def test_labels_numbered_by_first_appearance(nine):
    s = nine.schema
    assert nine.node_labels[s.type_index("paper")] == ("p0", "p1")
    assert nine.node_labels[s.type_index("author")] == ("u0", "u1")


def test_empty_edge_file(tmp_path):
    path = tmp_path / "empty.tsv"
    path.write_text("# only a comment\n\n")
    with pytest.raises(EmptyGraph):
        load_graph(path)


def test_schema_violation_reports_line(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("article\ta0\tcites\tpaper\tp0\ntopic\tt0\tcites\tpaper\tp0\n")
    with pytest.raises(SchemaViolation, match=":2:"):
        load_graph(path)


def test_unknown_type_and_malformed_rows(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("journal\tj0\tcites\tpaper\tp0\n")
    with pytest.raises(UnknownType):
        load_graph(path)
    path.write_text("article\ta0\tcites\tpaper\n")
    with pytest.raises(MalformedRow):
        load_graph(path)


def test_attributes(tmp_path):
    edges = tmp_path / "e.tsv"
    edges.write_text(NINE_ROWS)
    attrs = tmp_path / "a.tsv"
    attrs.write_text("article\ta0\ttitle\tNew results\narticle\ta0\tpublished_date\t2020-09-01\n")
    g = load_graph(edges, attrs)
    a0 = g.attributes[NodeRef(g.schema.type_index("article"), 0)]
    assert a0.title == "New results"
    assert a0.published_date == parse_date("2020-09-01")
    attrs.write_text("article\ta9\ttitle\tNobody\n")
    with pytest.raises(UnknownNode):
        load_graph(edges, attrs)


def test_duplicates_dropped_and_counted():
    row = ("article", "a0", "cites", "paper", "p0")
    g = graph_from_rows([row, row, row])
    assert g.num_triples == 1
    assert g.duplicates_dropped == 2


def test_neighbors(nine):
    cites = nine.schema.relation_index("cites")
    a, p = nine.schema.type_index("article"), nine.schema.type_index("paper")
    assert neighbors(nine, NodeRef(a, 0), cites) == [NodeRef(p, 0), NodeRef(p, 1)]
    assert neighbors(nine, NodeRef(p, 0), cites, INVERSE) == [NodeRef(a, 0)]


def test_neighbors_of_node_without_edges_under_relation():
    g = graph_from_rows([("article", "a0", "cites", "paper", "p0"), ("article", "a1", "has_topic", "topic", "t0")])
    a = g.schema.type_index("article")
    assert neighbors(g, NodeRef(a, 1), g.schema.relation_index("cites")) == []


def test_degree_stats_single_triple():
    g = graph_from_rows([("article", "a0", "cites", "paper", "p0")])
    stats = degree_stats(g)
    assert stats[("article", "cites", FORWARD)] == stats[("paper", "cites", INVERSE)]
    s = stats[("article", "cites", FORWARD)]
    assert s.min == s.max == s.mean == 1


def test_degree_stats_paper_scale():
    g = generate(SynthConfig())
    stats = degree_stats(g)
    assert stats[("author", "is_author_of", FORWARD)].mean == pytest.approx(3576 / 3464)
    assert g.relation_count(g.schema.relation_index("cites")) == 1421


def test_augment(nine):
    aug = augment_with_inverses(nine)
    assert len(aug.schema.relation_types) == 8
    assert aug.num_triples == 18
    cites, cites_inv = aug.schema.relation_index("cites"), aug.schema.relation_index("cites_inv")
    assert aug.schema.inverse_of[cites_inv] == cites
    trip = aug.triple_set()
    assert (0, cites, 0) in trip and (0, cites_inv, 0) in trip
    with pytest.raises(AlreadyAugmented):
        augment_with_inverses(aug)
    assert original_part(aug).triple_set() == nine.triple_set()


def test_global_ids_are_offsets_plus_local(nine):
    for gid in range(nine.num_nodes):
        ref = nine.node_ref(gid)
        assert nine.global_id(ref) == gid
        assert nine.offsets[ref.node_type] + ref.local_id == gid


@given(small_graphs())
def test_write_then_load_round_trip(g):
    import tempfile
    from pathlib import Path
    with tempfile.TemporaryDirectory() as d:
        write_graph(g, Path(d) / "e.tsv", Path(d) / "a.tsv")
        back = load_graph(Path(d) / "e.tsv", Path(d) / "a.tsv")
    assert back.triple_set() == g.triple_set()
    assert back.node_labels == g.node_labels


@given(small_graphs())
def test_degree_sums_match_triple_counts(g):
    for r in range(len(g.schema.relation_types)):
        fwd, _ = g.csr(r, FORWARD)
        inv, _ = g.csr(r, INVERSE)
        assert fwd[-1] == inv[-1] == g.relation_count(r)
        assert np.diff(fwd).sum() == np.diff(inv).sum() == g.relation_count(r)


def test_loading_twice_is_bit_identical(tmp_path):
    path = tmp_path / "e.tsv"
    path.write_text(NINE_ROWS)
    a, b = load_graph(path), load_graph(path)
    for name in ("heads", "rels", "tails"):
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()
    assert a.node_labels == b.node_labels


def test_default_schema_relations():
    s = default_schema()
    assert s.meta_relations == (
        ("article", "cites", "paper"),
        ("article", "has_topic", "topic"),
        ("author", "is_author_of", "paper"),
        ("author", "is_affiliated_with", "institute"),
    )
