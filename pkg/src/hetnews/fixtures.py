"""Hand-built 10-node graph used by gradient checks, CLI smoke runs and tests."""
from __future__ import annotations

from .graph import TypedGraph, default_schema, graph_from_rows

TINY_EDGES = [
    ("article", "a0", "cites", "paper", "p0"),
    ("article", "a1", "cites", "paper", "p1"),
    ("article", "a2", "cites", "paper", "p0"),
    ("article", "a0", "has_topic", "topic", "t0"),
    ("article", "a1", "has_topic", "topic", "t1"),
    ("article", "a2", "has_topic", "topic", "t0"),
    ("author", "u0", "is_author_of", "paper", "p0"),
    ("author", "u1", "is_author_of", "paper", "p1"),
    ("author", "u0", "is_affiliated_with", "institute", "i0"),
    ("author", "u1", "is_affiliated_with", "institute", "i0"),
]

# extra edges for the gradient check: every node then has at least two
# neighbors of some type, so second recurrent steps and multi-edge
# attention softmaxes all contribute to the loss
DENSE_EXTRA_EDGES = [
    ("article", "a0", "cites", "paper", "p1"),
    ("article", "a2", "has_topic", "topic", "t1"),
    ("article", "a1", "has_topic", "topic", "t0"),
    ("author", "u0", "is_author_of", "paper", "p1"),
    ("author", "u1", "is_author_of", "paper", "p0"),
]

TINY_ATTRIBUTES = [
    ("article", "a0", "title", "Vaccine trial shows strong immune response"),
    ("article", "a0", "published_date", "2020-08-03"),
    ("article", "a1", "title", "Ocean heat content reaches record high"),
    ("article", "a1", "published_date", "2020-09-14"),
    ("article", "a2", "title", "Antibody study tracks immune memory"),
    ("article", "a2", "published_date", "2020-11-30"),
    ("paper", "p0", "title", "Durable humoral immunity after infection"),
    ("paper", "p1", "title", "Upper ocean warming since 1960"),
]


def tiny_graph(dense: bool = False) -> TypedGraph:
    """2 topics, 3 articles, 2 papers, 2 authors, 1 institute; 10 edges (15 if ``dense``)."""
    rows = TINY_EDGES + DENSE_EXTRA_EDGES if dense else TINY_EDGES
    return graph_from_rows(rows, default_schema(), TINY_ATTRIBUTES)
