import numpy as np
import pytest
from hypothesis import settings, strategies as st

from hetnews.fixtures import tiny_graph
from hetnews.graph import default_schema, graph_from_rows

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")

TYPES = {"topic": "t", "article": "a", "paper": "p", "author": "u", "institute": "i"}


@pytest.fixture
def tiny():
    return tiny_graph()


@st.composite
def small_graphs(draw, max_per_type: int = 6, max_edges: int = 30):
    """Random schema-valid graphs over the default schema (at most 5 * max_per_type nodes)."""
    schema = default_schema()
    counts = {t: draw(st.integers(1, max_per_type)) for t in schema.node_types}
    rows = []
    n_edges = draw(st.integers(1, max_edges))
    for _ in range(n_edges):
        h, r, t = draw(st.sampled_from(schema.meta_relations))
        i = draw(st.integers(0, counts[h] - 1))
        j = draw(st.integers(0, counts[t] - 1))
        rows.append((h, f"{TYPES[h]}{i}", r, t, f"{TYPES[t]}{j}"))
    return graph_from_rows(rows, schema)


def rng_matrix(seed: int, shape, scale: float = 1.0) -> np.ndarray:
    return np.random.default_rng(seed).uniform(-scale, scale, shape)


def brute_force_rank(g, emb, dm, triple, direction="tail") -> int:
    """Reference filtered rank: loop over every candidate, skip known true triples, split ties evenly."""
    known = g.triple_set()
    h, r, t = triple.head, triple.relation, triple.tail
    off = g.offsets

    def score(a, b):
        return float(np.sum(emb[off[a.node_type] + a.local_id] * dm[r] * emb[off[b.node_type] + b.local_id]))

    true = score(h, t)
    greater = equal = 0
    moving = t if direction == "tail" else h
    for c in range(g.node_counts[moving.node_type]):
        if c == moving.local_id:
            continue
        key = (h.local_id, r, c) if direction == "tail" else (c, r, t.local_id)
        if key in known:
            continue
        s = score(h, type(t)(t.node_type, c)) if direction == "tail" else score(type(h)(h.node_type, c), t)
        greater += s > true
        equal += s == true
    return 1 + greater + (equal + 1) // 2
