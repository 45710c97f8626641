"""Initial node representations: learned tables, hashed title embeddings, date encodings."""
from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, MalformedRow, OddDim
from .graph import TypedGraph, parse_date
from .numerics import ParameterStore, ad, softmax_rows
from .numerics.autodiff import Tensor

LEARNED = "learned-table"
TITLE = "title-text"
HYBRID = "hybrid"
MODES = (LEARNED, TITLE, HYBRID)

DEFAULT_REFERENCE_DATE = parse_date("2020-08-01")
_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)


def init_bound(dim: int) -> float:
    return math.sqrt(6.0 / dim)


def init_embedding_table(node_counts, dim: int, seed: int) -> list[np.ndarray]:
    """One (count × dim) table per node type, uniform in ±sqrt(6/dim)."""
    if dim <= 0:
        raise ConfigError(f"embedding dim must be positive, got {dim}")
    rng = np.random.default_rng(seed)
    a = init_bound(dim)
    return [rng.uniform(-a, a, size=(int(n), dim)) for n in node_counts]


def tokenize(title: str) -> list[str]:
    return _TOKEN.findall(title.lower())


@lru_cache(maxsize=200_000)
def token_vector(token: str, dim: int, token_seed: int) -> np.ndarray:
    digest = hashlib.blake2b(f"{token_seed}\x00{token}".encode(), digest_size=8).digest()
    v = np.random.default_rng(int.from_bytes(digest, "little")).standard_normal(dim)
    v /= np.linalg.norm(v)
    v.setflags(write=False)
    return v


@dataclass
class TitleEmbedder:
    dim: int
    token_seed: int = 0
    attention_weights: np.ndarray | None = None

    def __post_init__(self):
        if self.attention_weights is None:
            self.attention_weights = np.zeros(self.dim)

    def token_matrix(self, title: str) -> np.ndarray:
        toks = tokenize(title)
        if not toks:
            return np.zeros((0, self.dim))
        return np.stack([token_vector(t, self.dim, self.token_seed) for t in toks])


def embed_title(e: TitleEmbedder, title: str) -> np.ndarray:
    """Attention-weighted average of the title's hashed token vectors."""
    toks = e.token_matrix(title)
    if len(toks) == 0:
        return np.zeros(e.dim)
    w = softmax_rows(toks @ np.asarray(e.attention_weights, dtype=np.float64).reshape(-1))
    return w @ toks


@dataclass(frozen=True)
class TemporalEncoding:
    dim: int
    reference_date: int = DEFAULT_REFERENCE_DATE
    scale_base: float = 10_000.0

    def __post_init__(self):
        if self.dim % 2:
            raise OddDim(f"temporal encoding needs an even dim, got {self.dim}")


def temporal_encode(t: TemporalEncoding, date) -> np.ndarray:
    """Sinusoidal encoding of ``date - reference_date`` (days); accepts a scalar or a 1-D array."""
    delta = np.asarray(date, dtype=np.float64) - t.reference_date
    k = np.arange(t.dim // 2)
    freq = t.scale_base ** (2.0 * k / t.dim)
    angles = delta[..., None] / freq
    out = np.empty(delta.shape + (t.dim,))
    out[..., 0::2] = np.sin(angles)
    out[..., 1::2] = np.cos(angles)
    return out


def load_precomputed_vectors(path, g: TypedGraph, dim: int) -> dict[int, np.ndarray]:
    """Read ``node_type<TAB>node_id<TAB>v1 ... v_dim`` rows into {global id: vector}."""
    s = g.schema
    out = {}
    with open(Path(path), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.rstrip("\n").split("\t")
            if len(cols) == 3:
                cols = cols[:2] + cols[2].split()
            if len(cols) != dim + 2:
                raise MalformedRow(f"{path}:{lineno}: expected {dim} values")
            t = s.type_index(cols[0])
            try:
                local = g.node_labels[t].index(cols[1])
            except ValueError:
                raise DataError(f"{path}:{lineno}: unknown node {cols[0]}:{cols[1]}") from None
            out[int(g.offsets[t] + local)] = np.array([float(x) for x in cols[2:]])
    return out


@dataclass
class FeatureProvider:
    """Resolves every node of a graph to a ``dim``-wide input vector.

    Parameters live in a :class:`ParameterStore` under ``emb/<type>``,
    ``features/title_attention`` and ``features/hybrid_proj``.
    Only nodes carrying a title get title features; all others use their table row.
    """

    graph: TypedGraph
    mode: str = LEARNED
    dim: int = 128
    token_seed: int = 0
    precomputed: dict[int, np.ndarray] | None = None
    titled: np.ndarray = field(init=False)
    _tokens: np.ndarray = field(init=False, repr=False)
    _token_seg: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown feature mode {self.mode!r}; expected one of {MODES}")
        g = self.graph
        if self.precomputed is not None:
            self.titled = np.array(sorted(self.precomputed), dtype=np.int64)
            self._tokens = (np.stack([self.precomputed[i] for i in self.titled])
                            if len(self.titled) else np.zeros((0, self.dim)))
            self._token_seg = np.arange(len(self.titled))
            return
        emb = TitleEmbedder(self.dim, self.token_seed)
        titled, mats, seg = [], [], []
        for ref, a in g.attributes.items():
            if a.title is None:
                continue
            m = emb.token_matrix(a.title)
            seg.extend([len(titled)] * len(m))
            titled.append(g.global_id(ref))
            mats.append(m)
        order = np.argsort(titled, kind="stable")
        self.titled = np.array(titled, dtype=np.int64)[order]
        remap = np.empty(len(order), dtype=np.int64)
        remap[order] = np.arange(len(order))
        self._tokens = np.concatenate(mats) if mats else np.zeros((0, self.dim))
        self._token_seg = remap[np.array(seg, dtype=np.int64)] if seg else np.zeros(0, dtype=np.int64)

    @property
    def uses_titles(self) -> bool:
        return self.mode != LEARNED

    def init_params(self, store: ParameterStore, seed: int) -> None:
        g, s = self.graph, self.graph.schema
        for name, table in zip(s.node_types, init_embedding_table(g.node_counts, self.dim, seed)):
            store.add(f"emb/{name}", table)
        rng = np.random.default_rng([seed, 1])
        if self.uses_titles and self.precomputed is None:
            store.uniform("features/title_attention", (1, self.dim), init_bound(self.dim), rng)
        if self.mode == HYBRID:
            store.uniform("features/hybrid_proj", (2 * self.dim, self.dim), math.sqrt(3.0 / self.dim), rng)

    def table(self, store: ParameterStore) -> Tensor:
        return ad.concat([store.var(f"emb/{t}") for t in self.graph.schema.node_types])

    def title_vectors(self, store: ParameterStore) -> Tensor:
        """(n_titled × dim) title embeddings, rows aligned with ``self.titled``."""
        n = len(self.titled)
        if self.precomputed is not None:
            return ad.const(self._tokens)
        if n == 0:
            return ad.const(np.zeros((0, self.dim)))
        logits = ad.matmul(self._tokens, ad.reshape(store.var("features/title_attention"), (self.dim, 1)))
        w = ad.segment_softmax(logits, self._token_seg, n)
        return ad.scatter_rows(ad.mul(self._tokens, w), self._token_seg, n)

    def _replace_titled(self, base: Tensor, rows: Tensor) -> Tensor:
        n = self.graph.num_nodes
        keep = np.ones((n, 1))
        keep[self.titled] = 0.0
        return ad.add(ad.mul(base, keep), ad.scatter_rows(rows, self.titled, n))

    def node_matrix(self, store: ParameterStore) -> Tensor:
        """One input vector per global node id."""
        table = self.table(store)
        if not self.uses_titles or len(self.titled) == 0:
            return table
        titles = self.title_vectors(store)
        if self.mode == TITLE:
            return self._replace_titled(table, titles)
        both = ad.concat([titles, ad.gather_rows(table, self.titled)], axis=1)
        return self._replace_titled(table, ad.matmul(both, store.var("features/hybrid_proj")))

    def attribute_sequences(self, store: ParameterStore) -> tuple[Tensor, Tensor, np.ndarray]:
        """Per-node attribute sequences of length 1 or 2: (first, second, has_second).

        Titled nodes read ``[title]`` (title-text) or ``[title, table row]`` (hybrid);
        everything else reads ``[table row]``.
        """
        table = self.table(store)
        has_second = np.zeros(self.graph.num_nodes, dtype=bool)
        if not self.uses_titles or len(self.titled) == 0:
            return table, table, has_second
        first = self._replace_titled(table, self.title_vectors(store))
        if self.mode == HYBRID:
            has_second[self.titled] = True
        return first, table, has_second

    def dates(self) -> np.ndarray:
        """Published date per global node (NaN where absent)."""
        out = np.full(self.graph.num_nodes, np.nan)
        for ref, a in self.graph.attributes.items():
            if a.published_date is not None:
                out[self.graph.global_id(ref)] = a.published_date
        return out
