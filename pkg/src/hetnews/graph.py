"""Typed heterogeneous graph store: schema, loading, indexing, inverse augmentation."""
from __future__ import annotations

import datetime as dt
import logging
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (AlreadyAugmented, BadDate, EmptyGraph, MalformedRow,
                     SchemaViolation, UnknownNode, UnknownType)

log = logging.getLogger(__name__)

ONE_TO_MANY = "one-to-many"
MANY_TO_MANY = "many-to-many"
FORWARD = "forward"
INVERSE = "inverse"
INVERSE_SUFFIX = "_inv"
EPOCH = dt.date(1970, 1, 1)


@dataclass(frozen=True)
class GraphSchema:
    """Node types, relation types and one (head_type, relation, tail_type) per relation.

    ``meta_relations[i]`` describes ``relation_types[i]``. ``inverse_of[i]`` is the
    index of the relation that relation ``i`` transposes, or ``None`` for original ones.
    """

    node_types: tuple[str, ...]
    relation_types: tuple[str, ...]
    meta_relations: tuple[tuple[str, str, str], ...]
    cardinality: tuple[str, ...]
    inverse_of: tuple[int | None, ...] = ()

    def __post_init__(self):
        if not self.inverse_of:
            object.__setattr__(self, "inverse_of", (None,) * len(self.relation_types))
        if len(set(self.node_types)) != len(self.node_types):
            raise SchemaViolation("duplicate node type")
        if len(set(self.relation_types)) != len(self.relation_types):
            raise SchemaViolation("duplicate relation type")
        n = len(self.relation_types)
        if len(self.meta_relations) != n or len(self.cardinality) != n or len(self.inverse_of) != n:
            raise SchemaViolation("every relation needs exactly one meta relation")
        for name, (h, r, t) in zip(self.relation_types, self.meta_relations):
            if r != name:
                raise SchemaViolation(f"meta relation for {name!r} names {r!r}")
            for typ in (h, t):
                if typ not in self.node_types:
                    raise UnknownType(f"meta relation {r!r} uses undeclared type {typ!r}")

    @property
    def augmented(self) -> bool:
        return any(i is not None for i in self.inverse_of)

    @property
    def n_original(self) -> int:
        return sum(1 for i in self.inverse_of if i is None)

    def type_index(self, name: str) -> int:
        try:
            return self.node_types.index(name)
        except ValueError:
            raise UnknownType(f"unknown node type {name!r}") from None

    def relation_index(self, name: str) -> int:
        try:
            return self.relation_types.index(name)
        except ValueError:
            raise UnknownType(f"unknown relation {name!r}") from None

    def head_type(self, r: int) -> int:
        return self.node_types.index(self.meta_relations[r][0])

    def tail_type(self, r: int) -> int:
        return self.node_types.index(self.meta_relations[r][2])


def default_schema() -> GraphSchema:
    """The five-type, four-relation scientific-news schema."""
    return GraphSchema(
        node_types=("topic", "article", "paper", "author", "institute"),
        relation_types=("cites", "has_topic", "is_author_of", "is_affiliated_with"),
        meta_relations=(
            ("article", "cites", "paper"),
            ("article", "has_topic", "topic"),
            ("author", "is_author_of", "paper"),
            ("author", "is_affiliated_with", "institute"),
        ),
        cardinality=(MANY_TO_MANY, MANY_TO_MANY, MANY_TO_MANY, ONE_TO_MANY),
    )


@dataclass(frozen=True, order=True)
class NodeRef:
    node_type: int
    local_id: int


@dataclass(frozen=True)
class Triple:
    head: NodeRef
    relation: int
    tail: NodeRef


@dataclass(frozen=True)
class NodeAttributes:
    title: str | None = None
    published_date: int | None = None  # days since 1970-01-01


def parse_date(text: str) -> int:
    try:
        return (dt.date.fromisoformat(text.strip()) - EPOCH).days
    except ValueError:
        raise BadDate(f"unparseable published date {text!r}") from None


def format_date(days: int) -> str:
    return (EPOCH + dt.timedelta(days=int(days))).isoformat()


def _csr(src: np.ndarray, dst: np.ndarray, n_src: int) -> tuple[np.ndarray, np.ndarray]:
    order = np.lexsort((dst, src))
    indptr = np.zeros(n_src + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    return np.cumsum(indptr), dst[order]


def _frozen(a) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.int64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TypedGraph:
    """Immutable typed multigraph with per-relation forward and inverse CSR indices.

    Triples live in three parallel arrays of local ids (``heads``, ``rels``,
    ``tails``); endpoint types follow from the relation's meta relation.
    Nodes have a global index ``offsets[type] + local_id`` used by the encoders.
    """

    schema: GraphSchema
    node_labels: tuple[tuple[str, ...], ...]
    heads: np.ndarray
    rels: np.ndarray
    tails: np.ndarray
    attributes: Mapping[NodeRef, NodeAttributes] = field(default_factory=dict)
    duplicates_dropped: int = 0
    _adj: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "heads", _frozen(self.heads))
        object.__setattr__(self, "rels", _frozen(self.rels))
        object.__setattr__(self, "tails", _frozen(self.tails))
        object.__setattr__(self, "attributes", MappingProxyType(dict(self.attributes)))
        counts = self.node_counts
        for r in range(len(self.schema.relation_types)):
            m = self.rels == r
            if m.any():
                ht, tt = self.schema.head_type(r), self.schema.tail_type(r)
                if self.heads[m].max() >= counts[ht] or self.tails[m].max() >= counts[tt]:
                    raise UnknownNode(f"relation {self.schema.relation_types[r]!r} references an undeclared node")
        for r in range(len(self.schema.relation_types)):
            m = self.rels == r
            h, t = self.heads[m], self.tails[m]
            ht, tt = self.schema.head_type(r), self.schema.tail_type(r)
            fwd = _csr(h, t, counts[ht])
            inv = _csr(t, h, counts[tt])
            self._adj[r] = {FORWARD: fwd, INVERSE: inv}

    # -- sizes and indexing -------------------------------------------------
    @property
    def node_counts(self) -> tuple[int, ...]:
        return tuple(len(labels) for labels in self.node_labels)

    @property
    def num_nodes(self) -> int:
        return sum(self.node_counts)

    @property
    def num_triples(self) -> int:
        return len(self.rels)

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.node_counts)]).astype(np.int64)

    @property
    def node_type_of(self) -> np.ndarray:
        """Type index for every global node id."""
        return np.repeat(np.arange(len(self.node_counts)), self.node_counts)

    def global_id(self, node: NodeRef) -> int:
        return int(self.offsets[node.node_type] + node.local_id)

    def node_ref(self, gid: int) -> NodeRef:
        t = int(np.searchsorted(self.offsets, gid, side="right") - 1)
        return NodeRef(t, int(gid - self.offsets[t]))

    def head_types(self) -> np.ndarray:
        lookup = np.array([self.schema.head_type(r) for r in range(len(self.schema.relation_types))], dtype=np.int64)
        return lookup[self.rels]

    def tail_types(self) -> np.ndarray:
        lookup = np.array([self.schema.tail_type(r) for r in range(len(self.schema.relation_types))], dtype=np.int64)
        return lookup[self.rels]

    def global_heads(self) -> np.ndarray:
        return self.offsets[self.head_types()] + self.heads

    def global_tails(self) -> np.ndarray:
        return self.offsets[self.tail_types()] + self.tails

    @property
    def triples(self) -> list[Triple]:
        s = self.schema
        return [Triple(NodeRef(s.head_type(r), h), r, NodeRef(s.tail_type(r), t))
                for h, r, t in zip(self.heads.tolist(), self.rels.tolist(), self.tails.tolist())]

    def triple_set(self) -> set[tuple[int, int, int]]:
        return set(zip(self.heads.tolist(), self.rels.tolist(), self.tails.tolist()))

    def relation_count(self, r: int) -> int:
        return int(np.count_nonzero(self.rels == r))

    def csr(self, r: int, direction: str = FORWARD) -> tuple[np.ndarray, np.ndarray]:
        return self._adj[r][direction]

    def subgraph(self, keep: np.ndarray) -> "TypedGraph":
        """Same node set, only the triples selected by boolean mask ``keep``."""
        return TypedGraph(self.schema, self.node_labels, self.heads[keep], self.rels[keep],
                          self.tails[keep], self.attributes)

    def dated_types(self) -> set[int]:
        return {ref.node_type for ref, a in self.attributes.items() if a.published_date is not None}


def neighbors(g: TypedGraph, node: NodeRef, relation: int, direction: str = FORWARD) -> list[NodeRef]:
    """Neighbors of ``node`` under ``relation``, ascending by local id."""
    indptr, indices = g.csr(relation, direction)
    if direction == FORWARD:
        other = g.schema.tail_type(relation)
    else:
        other = g.schema.head_type(relation)
    lo, hi = indptr[node.local_id], indptr[node.local_id + 1]
    return [NodeRef(other, int(j)) for j in indices[lo:hi]]


@dataclass(frozen=True)
class DegreeSummary:
    min: int
    max: int
    mean: float


def degree_stats(g: TypedGraph) -> dict[tuple[str, str, str], DegreeSummary]:
    """Degree summary for every (node_type, relation, direction) the schema allows."""
    s = g.schema
    out = {}
    for r, name in enumerate(s.relation_types):
        for direction, t in ((FORWARD, s.head_type(r)), (INVERSE, s.tail_type(r))):
            indptr, _ = g.csr(r, direction)
            deg = np.diff(indptr)
            if len(deg) == 0:
                summary = DegreeSummary(0, 0, 0.0)
            else:
                summary = DegreeSummary(int(deg.min()), int(deg.max()), float(deg.sum()) / len(deg))
            out[(s.node_types[t], name, direction)] = summary
    return out


def augment_with_inverses(g: TypedGraph) -> TypedGraph:
    """Add a transposed ``<r>_inv`` relation for every relation ``r``."""
    s = g.schema
    if s.augmented:
        raise AlreadyAugmented("graph already carries inverse relations")
    n = len(s.relation_types)
    schema = GraphSchema(
        node_types=s.node_types,
        relation_types=s.relation_types + tuple(r + INVERSE_SUFFIX for r in s.relation_types),
        meta_relations=s.meta_relations + tuple((t, r + INVERSE_SUFFIX, h) for h, r, t in s.meta_relations),
        cardinality=s.cardinality + s.cardinality,
        inverse_of=(None,) * n + tuple(range(n)),
    )
    return TypedGraph(schema, g.node_labels,
                      np.concatenate([g.heads, g.tails]),
                      np.concatenate([g.rels, g.rels + n]),
                      np.concatenate([g.tails, g.heads]),
                      g.attributes, g.duplicates_dropped)


def original_part(g: TypedGraph) -> TypedGraph:
    """Drop inverse relations again (the decoder only scores original relations)."""
    s = g.schema
    if not s.augmented:
        return g
    n = s.n_original
    schema = GraphSchema(s.node_types, s.relation_types[:n], s.meta_relations[:n], s.cardinality[:n])
    keep = g.rels < n
    return TypedGraph(schema, g.node_labels, g.heads[keep], g.rels[keep], g.tails[keep], g.attributes)


# -- building from labelled rows ----------------------------------------------

class GraphBuilder:
    """Accumulates labelled rows; ids are assigned per type in first-appearance order."""

    def __init__(self, schema: GraphSchema):
        self.schema = schema
        self._ids: list[dict[str, int]] = [{} for _ in schema.node_types]
        self._seen: set[tuple[int, int, int]] = set()
        self._rows: list[tuple[int, int, int]] = []
        self._attrs: dict[NodeRef, dict] = {}
        self.duplicates = 0

    def _node(self, t: int, label: str) -> int:
        ids = self._ids[t]
        if label not in ids:
            ids[label] = len(ids)
        return ids[label]

    def add_edge(self, head_type: str, head: str, relation: str, tail_type: str, tail: str) -> None:
        s = self.schema
        ht, r, tt = s.type_index(head_type), s.relation_index(relation), s.type_index(tail_type)
        if (head_type, relation, tail_type) != s.meta_relations[r]:
            raise SchemaViolation(
                f"{relation!r} from {head_type!r} to {tail_type!r} contradicts meta relation {s.meta_relations[r]}")
        key = (self._node(ht, head), r, self._node(tt, tail))
        if key in self._seen:
            self.duplicates += 1
            return
        self._seen.add(key)
        self._rows.append(key)

    def set_attribute(self, node_type: str, node: str, key: str, value: str) -> None:
        t = self.schema.type_index(node_type)
        if node not in self._ids[t]:
            raise UnknownNode(f"attribute row references undeclared node {node_type}:{node}")
        ref = NodeRef(t, self._ids[t][node])
        rec = self._attrs.setdefault(ref, {})
        if key == "title":
            rec["title"] = value
        elif key == "published_date":
            rec["published_date"] = parse_date(value)
        else:
            raise MalformedRow(f"unknown attribute key {key!r}")

    def build(self) -> TypedGraph:
        if not self._rows:
            raise EmptyGraph("graph has no triples")
        if self.duplicates:
            log.warning("dropped %d duplicate triples", self.duplicates)
        arr = np.array(self._rows, dtype=np.int64).reshape(-1, 3)
        labels = tuple(tuple(ids) for ids in self._ids)
        attrs = {ref: NodeAttributes(**rec) for ref, rec in sorted(self._attrs.items())}
        return TypedGraph(self.schema, labels, arr[:, 0], arr[:, 1], arr[:, 2], attrs, self.duplicates)


def _rows(path: Path, ncols: int) -> Iterable[tuple[int, list[str]]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != ncols:
                raise MalformedRow(f"{path}:{lineno}: expected {ncols} tab-separated columns, got {len(cols)}")
            yield lineno, cols


def load_graph(edge_file, attribute_file=None, schema: GraphSchema | None = None) -> TypedGraph:
    """Read an edge list (and optional attribute file) into a validated graph."""
    schema = schema or default_schema()
    b = GraphBuilder(schema)
    for lineno, cols in _rows(Path(edge_file), 5):
        try:
            b.add_edge(*cols)
        except (UnknownType, SchemaViolation) as e:
            raise type(e)(f"{edge_file}:{lineno}: {e}") from None
    if attribute_file is not None:
        for lineno, cols in _rows(Path(attribute_file), 4):
            try:
                b.set_attribute(*cols)
            except (UnknownType, UnknownNode, BadDate, MalformedRow) as e:
                raise type(e)(f"{attribute_file}:{lineno}: {e}") from None
    return b.build()


def _clean(text: str) -> str:
    return " ".join(text.split())


def write_graph(g: TypedGraph, edge_file, attribute_file=None) -> None:
    """Write ``g`` in the tab-separated edge-list / attribute formats."""
    s = g.schema
    lines = []
    for h, r, t in zip(g.heads.tolist(), g.rels.tolist(), g.tails.tolist()):
        ht, tt = s.head_type(r), s.tail_type(r)
        lines.append(f"{s.node_types[ht]}\t{g.node_labels[ht][h]}\t{s.relation_types[r]}"
                     f"\t{s.node_types[tt]}\t{g.node_labels[tt][t]}\n")
    Path(edge_file).write_text("".join(lines), encoding="utf-8")
    if attribute_file is None:
        return
    lines = []
    for ref in sorted(g.attributes):
        a = g.attributes[ref]
        prefix = f"{s.node_types[ref.node_type]}\t{g.node_labels[ref.node_type][ref.local_id]}"
        if a.title is not None:
            lines.append(f"{prefix}\ttitle\t{_clean(a.title)}\n")
        if a.published_date is not None:
            lines.append(f"{prefix}\tpublished_date\t{format_date(a.published_date)}\n")
    Path(attribute_file).write_text("".join(lines), encoding="utf-8")


def graph_from_rows(rows: Sequence[tuple[str, str, str, str, str]], schema: GraphSchema | None = None,
                    attributes: Sequence[tuple[str, str, str, str]] = ()) -> TypedGraph:
    """Build a graph from in-memory labelled rows (same semantics as ``load_graph``)."""
    b = GraphBuilder(schema or default_schema())
    for row in rows:
        b.add_edge(*row)
    for row in attributes:
        b.set_attribute(*row)
    return b.build()
