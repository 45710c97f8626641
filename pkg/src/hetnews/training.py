"""DistMult scoring, typed negative sampling, the logistic objective, and the training loops."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .encoders import KINDS, RGCN, TRAINING, EncoderConfig, WalkConfig, encode, init_encoder
from .errors import ConfigError, DivergedLoss, NonFiniteGradient, ShapeMismatch, TypeExhausted
from .features import DEFAULT_REFERENCE_DATE, FeatureProvider, init_bound
from .graph import NodeRef, Triple, TypedGraph
from .numerics import ParameterStore, ad, adam_step, counter_rng
from .numerics.autodiff import Tensor

log = logging.getLogger(__name__)

FULL_BATCH, MINI_BATCH = "full-batch", "mini-batch"
MAX_ATTEMPTS = 100
# counter-space offsets keeping shuffles and negatives apart from dropout draws
SHUFFLE_STREAM = 1 << 40
NEGATIVE_STREAM = 2 << 40


# -- scoring --------------------------------------------------------------------

def distmult_score(h_head, r, h_tail) -> float:
    """sum_k head[k] * r[k] * tail[k]"""
    h, r, t = (np.asarray(v, dtype=np.float64).reshape(-1) for v in (h_head, r, h_tail))
    if not (h.shape == r.shape == t.shape):
        raise ShapeMismatch(f"DistMult widths differ: {h.shape}, {r.shape}, {t.shape}")
    return float(np.sum(h * r * t))


def relation_matrix(store: ParameterStore, g: TypedGraph) -> Tensor:
    """(n_original × dim) DistMult diagonals; inverse relations have none."""
    names = g.schema.relation_types[:g.schema.n_original]
    return ad.concat([store.var(f"distmult/{name}") for name in names])


def score_triples(emb: Tensor, rel: Tensor, heads: np.ndarray, rels: np.ndarray, tails: np.ndarray) -> Tensor:
    """Vectorised DistMult over global head/tail ids."""
    return ad.triple_scores(emb, rel, heads, rels, tails)


def bce_loss(pos: Tensor, neg: Tensor) -> Tensor:
    return ad.add(ad.mean(ad.softplus(ad.mul(pos, -1.0))), ad.mean(ad.softplus(neg)))


def loss(scores_pos, scores_neg) -> float:
    """Logistic loss: mean softplus(-s) over positives + mean softplus(s) over negatives."""
    pos, neg = np.asarray(scores_pos, dtype=np.float64), np.asarray(scores_neg, dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise ValueError("loss needs at least one positive and one negative score")
    return float(bce_loss(ad.const(pos), ad.const(neg)).value)


# -- negative sampling ------------------------------------------------------------

@dataclass(frozen=True)
class Negatives:
    heads: np.ndarray
    rels: np.ndarray
    tails: np.ndarray
    flagged: np.ndarray  # kept after MAX_ATTEMPTS rejections

    def __len__(self):
        return len(self.rels)


def _triple_keys(heads, rels, tails, n_rel: int, width: int) -> np.ndarray:
    return (np.asarray(heads, dtype=np.int64) * n_rel + rels) * width + tails


def corrupt(g: TypedGraph, heads, rels, tails, n: int, seed: int, nonce: int) -> Negatives:
    """``n`` type-constrained corruptions per positive (local ids); row ``i*n + k`` belongs to positive ``i``.

    A fair coin picks the endpoint to replace; the replacement is uniform over
    nodes of the endpoint's type. Corruptions that hit a triple of ``g`` are
    redrawn up to ``MAX_ATTEMPTS`` times and otherwise kept with a flag.
    """
    if n < 1:
        raise ConfigError("need at least one negative per positive")
    s = g.schema
    counts = np.array(g.node_counts, dtype=np.int64)
    n_rel = len(s.relation_types)
    width = int(counts.max())
    htype = np.array([s.head_type(r) for r in range(n_rel)])[rels]
    ttype = np.array([s.tail_type(r) for r in range(n_rel)])[rels]
    hcount, tcount = counts[htype], counts[ttype]
    if np.any((hcount <= 1) & (tcount <= 1)):
        raise TypeExhausted("both endpoint types hold a single node; nothing to corrupt")
    known = np.unique(_triple_keys(g.heads, g.rels, g.tails, n_rel, width))

    h = np.repeat(np.asarray(heads, dtype=np.int64), n)
    r = np.repeat(np.asarray(rels, dtype=np.int64), n)
    t = np.repeat(np.asarray(tails, dtype=np.int64), n)
    hc, tc = np.repeat(hcount, n), np.repeat(tcount, n)
    rng = counter_rng(seed, nonce)
    out_h, out_t = h.copy(), t.copy()
    todo = np.arange(len(r))
    for _ in range(MAX_ATTEMPTS):
        if len(todo) == 0:
            break
        coin, u = rng.random((2, len(todo)))
        on_head = np.where(hc[todo] <= 1, False, np.where(tc[todo] <= 1, True, coin < 0.5))
        cnt = np.where(on_head, hc[todo], tc[todo])
        pick = np.minimum((u * cnt).astype(np.int64), cnt - 1)
        out_h[todo] = np.where(on_head, pick, h[todo])
        out_t[todo] = np.where(on_head, t[todo], pick)
        clash = np.isin(_triple_keys(out_h[todo], r[todo], out_t[todo], n_rel, width), known)
        todo = todo[clash]
    flagged = np.zeros(len(r), dtype=bool)
    flagged[todo] = True
    if len(todo):
        log.debug("%d negatives kept after %d rejected attempts", len(todo), MAX_ATTEMPTS)
    return Negatives(out_h, r, out_t, flagged)


def sample_negatives(g: TypedGraph, positive: Triple, n: int, seed: int, nonce: int = 0) -> list[Triple]:
    neg = corrupt(g, [positive.head.local_id], [positive.relation], [positive.tail.local_id], n, seed, nonce)
    s = g.schema
    ht, tt = s.head_type(positive.relation), s.tail_type(positive.relation)
    return [Triple(NodeRef(ht, int(a)), int(b), NodeRef(tt, int(c)))
            for a, b, c in zip(neg.heads, neg.rels, neg.tails)]


# -- training ---------------------------------------------------------------------

@dataclass
class TrainConfig:
    model_kind: str = RGCN
    dim: int = 128
    epochs: int | None = None
    learning_rate: float | None = None
    dropout_rate: float = 0.4
    content_dropout_rate: float = 0.0
    negatives_per_positive: int = 10
    batch_size: int = 256
    seed: int = 0
    mode: str | None = None
    head_count: int = 4
    rwr_restart: float = 0.5
    rwr_walk_length: int = 20
    rwr_samples: int = 10
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    # mini-batch only: the batch's positive triples carry no messages while they are scored
    hide_targets: bool = False
    reference_date: int = DEFAULT_REFERENCE_DATE

    def __post_init__(self):
        if self.model_kind not in KINDS:
            raise ConfigError(f"unknown model_kind {self.model_kind!r}; expected one of {KINDS}")
        expected = FULL_BATCH if self.model_kind == RGCN else MINI_BATCH
        if self.mode is None:
            self.mode = expected
        if self.mode != expected:
            raise ConfigError(f"mode {self.mode} does not fit model_kind {self.model_kind} (trains {expected})")
        if self.epochs is None:
            self.epochs = 400 if self.mode == FULL_BATCH else 50
        if self.learning_rate is None:
            self.learning_rate = 0.01 if self.mode == FULL_BATCH else 0.001
        for name in ("dropout_rate", "content_dropout_rate"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ConfigError(f"{name} must lie in [0, 1), got {getattr(self, name)}")
        if self.dim <= 0 or self.epochs < 0 or self.batch_size < 1 or self.negatives_per_positive < 1:
            raise ConfigError("dim, batch_size and negatives_per_positive must be positive, epochs non-negative")
        if self.learning_rate < 0:
            raise ConfigError("learning_rate must be non-negative")

    def encoder_config(self) -> EncoderConfig:
        rate = self.dropout_rate if self.model_kind == RGCN else self.content_dropout_rate
        return EncoderConfig(self.model_kind, self.dim, rate, self.head_count,
                             WalkConfig(self.rwr_restart, self.rwr_walk_length, self.rwr_samples),
                             self.reference_date)


@dataclass(frozen=True)
class LossReport:
    epoch: int
    loss: float
    positive_mean_score: float
    negative_mean_score: float


def init_params(g: TypedGraph, cfg: TrainConfig, features: FeatureProvider) -> ParameterStore:
    if features.dim != cfg.dim:
        raise ConfigError(f"feature dim {features.dim} differs from model dim {cfg.dim}")
    store = ParameterStore(cfg.seed)
    features.init_params(store, cfg.seed)
    init_encoder(store, g, cfg.encoder_config(), cfg.seed)
    rng = np.random.default_rng([cfg.seed, 3])
    for name in g.schema.relation_types[:g.schema.n_original]:
        store.uniform(f"distmult/{name}", (1, cfg.dim), init_bound(cfg.dim), rng)
    return store


def link_loss(g: TypedGraph, store: ParameterStore, features: FeatureProvider, cfg: TrainConfig,
              heads, rels, tails, negatives: Negatives, step: int,
              hidden: np.ndarray | None = None) -> tuple[Tensor, Tensor, Tensor]:
    """Encoder + decoder loss on given positives (local ids) and their negatives.

    ``hidden`` flags edges of ``g`` removed from message passing for this step.
    """
    off, s = g.offsets, g.schema
    ht = np.array([s.head_type(r) for r in range(len(s.relation_types))])
    tt = np.array([s.tail_type(r) for r in range(len(s.relation_types))])
    emb = encode(cfg.model_kind, g, features, store, TRAINING, cfg.seed, cfg.encoder_config(), epoch=step,
                 hidden=hidden)
    rel = relation_matrix(store, g)
    pos = score_triples(emb, rel, off[ht[rels]] + heads, rels, off[tt[rels]] + tails)
    nr = negatives.rels
    neg = score_triples(emb, rel, off[ht[nr]] + negatives.heads, nr, off[tt[nr]] + negatives.tails)
    total = bce_loss(pos, neg)
    if cfg.weight_decay > 0.0:
        total = ad.add(total, ad.mul(l2_penalty(store), 0.5 * cfg.weight_decay))
    return total, pos, neg


def l2_penalty(store: ParameterStore, prefix: str = "emb/") -> Tensor:
    """Sum of squares over the parameters whose name starts with ``prefix``."""
    out = ad.const(0.0)
    for p in store:
        if not p.name.startswith(prefix):
            continue
        v = p.tensor()
        out = ad.add(out, ad.sum(ad.mul(v, v)))
    return out


def train(g: TypedGraph, cfg: TrainConfig, features: FeatureProvider,
          store: ParameterStore | None = None,
          on_epoch: Callable[[LossReport, ParameterStore], None] | None = None,
          ) -> tuple[ParameterStore, list[LossReport]]:
    """Fit encoder + DistMult on every original-relation triple of ``g`` (which must carry inverses).

    ``on_epoch`` is called after every epoch, e.g. to record a learning curve.
    """
    if not g.schema.augmented:
        raise ConfigError("training needs a graph augmented with inverse relations")
    store = store or init_params(g, cfg, features)
    keep = g.rels < g.schema.n_original
    heads, rels, tails = g.heads[keep], g.rels[keep], g.tails[keep]
    n_pos = len(rels)
    reports = []
    step = 0
    for epoch in range(cfg.epochs):
        if cfg.mode == FULL_BATCH:
            batches = [np.arange(n_pos)]
        else:
            order = counter_rng(cfg.seed, SHUFFLE_STREAM + epoch).permutation(n_pos)
            batches = [order[i:i + cfg.batch_size] for i in range(0, n_pos, cfg.batch_size)]
        total, pos_sum, neg_sum, n_seen, n_neg = 0.0, 0.0, 0.0, 0, 0
        for b in batches:
            negs = corrupt(g, heads[b], rels[b], tails[b], cfg.negatives_per_positive, cfg.seed,
                            NEGATIVE_STREAM + step)
            hidden = None
            if cfg.hide_targets and cfg.mode == MINI_BATCH:
                # original edges come first in an augmented graph, their inverses n_pos later
                hidden = np.zeros(g.num_triples, dtype=bool)
                hidden[b] = hidden[b + n_pos] = True
            store.zero_grads()
            value, pos, neg = link_loss(g, store, features, cfg, heads[b], rels[b], tails[b], negs, step, hidden)
            lv = float(value.value)
            if not math.isfinite(lv):
                raise DivergedLoss(f"non-finite loss at epoch {epoch}")
            value.backward()
            try:
                adam_step(store, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
            except NonFiniteGradient as e:
                raise DivergedLoss(f"epoch {epoch}: {e}") from None
            step += 1
            total += lv * len(b)
            pos_sum += float(pos.value.sum())
            neg_sum += float(neg.value.sum())
            n_seen += len(b)
            n_neg += len(neg.value)
        reports.append(LossReport(epoch, total / n_seen, pos_sum / n_seen, neg_sum / n_neg))
        log.info("epoch %d loss %.6f", epoch, reports[-1].loss)
        if on_epoch is not None:
            on_epoch(reports[-1], store)
    store.zero_grads()
    return store, reports


def write_trace(reports: list[LossReport], path) -> None:
    lines = ["epoch,loss,pos_mean,neg_mean\n"]
    lines += [f"{r.epoch},{r.loss!r},{r.positive_mean_score!r},{r.negative_mean_score!r}\n" for r in reports]
    Path(path).write_text("".join(lines), encoding="utf-8")


def read_trace(path) -> list[LossReport]:
    rows = Path(path).read_text(encoding="utf-8").splitlines()[1:]
    out = []
    for row in rows:
        e, l, p, n = row.split(",")
        out.append(LossReport(int(e), float(l), float(p), float(n)))
    return out
