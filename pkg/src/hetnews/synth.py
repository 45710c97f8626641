"""Schema-compliant synthetic scientific-news graphs.

Two flavours: a replica with the exact node/edge counts of the original
collection, and planted-partition graphs whose article edges concentrate
inside latent blocks (a learnable signal for end-to-end checks).

Node labels are ``<prefix><i>``; in planted mode node ``i`` of a blocked
type belongs to block ``i % planted_blocks``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InfeasibleCounts
from .graph import GraphBuilder, TypedGraph, default_schema, format_date, parse_date

PREFIX = {"topic": "t", "article": "a", "paper": "p", "author": "u", "institute": "i"}
WINDOW_START = parse_date("2020-08-01")
WINDOW_END = parse_date("2020-11-30")


@dataclass
class SynthConfig:
    topics: int = 23
    articles: int = 472
    papers: int = 1242
    authors: int = 3464
    institutes: int = 368
    cites: int = 1421
    has_topic: int = 1086
    is_author_of: int = 3576
    is_affiliated_with: int = 3464
    seed: int = 0
    planted_blocks: int = 0
    planted_noise: float = 0.1
    # within-block topic popularity ~ rank**-topic_skew
    topic_skew: float = 2.0
    title_vocab_size: int = 500
    titles: bool = True

    def __post_init__(self):
        if self.planted_blocks < 0 or self.planted_blocks > min(self.topics, 10):
            raise ConfigError(f"planted_blocks must lie in [0, min(topics, 10)], got {self.planted_blocks}")
        if not 0.0 <= self.planted_noise <= 1.0:
            raise ConfigError(f"planted_noise must lie in [0, 1], got {self.planted_noise}")
        if self.planted_blocks and self.title_vocab_size < self.planted_blocks:
            raise ConfigError("title_vocab_size must be at least planted_blocks")

    def node_count(self, node_type: str) -> int:
        return {"topic": self.topics, "article": self.articles, "paper": self.papers,
                "author": self.authors, "institute": self.institutes}[node_type]

    def edge_count(self, relation: str) -> int:
        return getattr(self, relation)


class _EdgeSet:
    def __init__(self, target: int):
        self.target = target
        self.seen: set[tuple[int, int]] = set()
        self.order: list[tuple[int, int]] = []

    def full(self) -> bool:
        return len(self.order) >= self.target

    def add(self, h: int, t: int) -> bool:
        if self.full() or (h, t) in self.seen:
            return False
        self.seen.add((h, t))
        self.order.append((h, t))
        return True


def _uniform_edges(rng: np.random.Generator, n_heads: int, n_tails: int, n_edges: int) -> list[tuple[int, int]]:
    """Distinct pairs; the first max(H, T) pairs cover every head and tail."""
    es = _EdgeSet(n_edges)
    hp, tp = rng.permutation(n_heads), rng.permutation(n_tails)
    for k in range(min(n_edges, max(n_heads, n_tails))):
        es.add(int(hp[k % n_heads]), int(tp[k % n_tails]))
    remaining = n_edges - len(es.order)
    if remaining > 0 and n_edges > 0.5 * n_heads * n_tails:
        free = np.array([p for p in range(n_heads * n_tails) if divmod(p, n_tails) not in es.seen])
        for p in rng.choice(free, size=remaining, replace=False):
            es.add(*map(int, divmod(int(p), n_tails)))
    while not es.full():
        es.add(int(rng.integers(n_heads)), int(rng.integers(n_tails)))
    return es.order


def _planted_edges(rng, n_heads, n_tails, n_edges, blocks, noise, tail_weight) -> list[tuple[int, int]]:
    """Edges between blocked heads and tails; a tail leaves the head's block with prob ``noise``."""
    head_block = np.arange(n_heads) % blocks
    tail_block = np.arange(n_tails) % blocks
    members = [np.flatnonzero(tail_block == b) for b in range(blocks)]
    outsiders = [np.flatnonzero(tail_block != b) for b in range(blocks)]
    probs = []
    for b in range(blocks):
        w = tail_weight[members[b]]
        probs.append(w / w.sum())
    heads_of = [np.flatnonzero(head_block == b) for b in range(blocks)]
    capacity = sum(len(heads_of[b]) * len(members[b]) for b in range(blocks))
    if noise == 0.0 and n_edges > capacity:
        raise InfeasibleCounts(f"{n_edges} within-block edges requested, only {capacity} exist")

    def draw_tail(h: int) -> int:
        b = head_block[h]
        if blocks > 1 and rng.random() < noise:
            return int(rng.choice(outsiders[b]))
        return int(rng.choice(members[b], p=probs[b]))

    es = _EdgeSet(n_edges)
    for t in rng.permutation(n_tails):
        es.add(int(rng.choice(heads_of[tail_block[t]])), int(t))
    covered = {h for h, _ in es.order}
    for h in rng.permutation(n_heads):
        for _ in range(50):
            if int(h) in covered or es.full():
                break
            if es.add(int(h), draw_tail(int(h))):
                covered.add(int(h))
    attempts = 0
    while not es.full():
        h = int(rng.integers(n_heads))
        es.add(h, draw_tail(h))
        attempts += 1
        if attempts > 200 * n_edges:
            raise InfeasibleCounts(f"could not place {n_edges} distinct planted edges")
    return es.order


def _title(rng, vocab: list[str]) -> str:
    return " ".join(rng.choice(vocab, size=int(rng.integers(5, 11))))


def generate(cfg: SynthConfig) -> TypedGraph:
    """Build a synthetic graph; identical configs give identical graphs."""
    schema = default_schema()
    for h, r, t in schema.meta_relations:
        e, nh, nt = cfg.edge_count(r), cfg.node_count(h), cfg.node_count(t)
        if e > nh * nt:
            raise InfeasibleCounts(f"{r}: {e} distinct edges requested but only {nh}×{nt}={nh * nt} pairs exist")
        if e < 0 or nh <= 0 or nt <= 0:
            raise InfeasibleCounts(f"{r}: counts must be positive")
    rng = np.random.default_rng(cfg.seed)
    B = cfg.planted_blocks
    pairs = {}
    for h, r, t in schema.meta_relations:
        nh, nt, e = cfg.node_count(h), cfg.node_count(t), cfg.edge_count(r)
        if B and r in ("cites", "has_topic"):
            if r == "has_topic":
                rank = np.arange(nt) // B
                weight = (rank + 1.0) ** -cfg.topic_skew
            else:
                weight = np.ones(nt)
            pairs[r] = _planted_edges(rng, nh, nt, e, B, cfg.planted_noise, weight)
        else:
            pairs[r] = _uniform_edges(rng, nh, nt, e)

    b = GraphBuilder(schema)
    for h, r, t in schema.meta_relations:
        for i, j in pairs[r]:
            b.add_edge(h, f"{PREFIX[h]}{i}", r, t, f"{PREFIX[t]}{j}")
    for typ in schema.node_types:
        seen = len(b._ids[schema.type_index(typ)])
        if seen != cfg.node_count(typ):
            raise InfeasibleCounts(f"only {seen} of {cfg.node_count(typ)} {typ} nodes received an edge")

    if cfg.titles:
        vocab = [f"w{k}" for k in range(cfg.title_vocab_size)]
        block_vocab = [vocab[k::B] for k in range(B)] if B else None
        for typ in ("article", "paper"):
            for i in range(cfg.node_count(typ)):
                words = block_vocab[i % B] if B else vocab
                b.set_attribute(typ, f"{PREFIX[typ]}{i}", "title", _title(rng, words))
    for i in range(cfg.articles):
        day = int(rng.integers(WINDOW_START, WINDOW_END + 1))
        b.set_attribute("article", f"a{i}", "published_date", format_date(day))
    return b.build()
