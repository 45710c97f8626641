"""Node encoders and the dispatcher used by training and evaluation."""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, KindMismatch
from ..features import DEFAULT_REFERENCE_DATE, FeatureProvider, TemporalEncoding
from ..graph import TypedGraph
from ..numerics import ParameterStore
from ..numerics.autodiff import Tensor
from .hetgnn import WalkConfig, drop_samples, hetgnn_forward, hide_pairs, init_hetgnn, sample_neighbors
from .hgt import hgt_forward, init_hgt
from .rgcn import init_rgcn, rgcn_forward

RGCN, HETGNN, HGT = "RGCN", "HETGNN", "HGT"
KINDS = (RGCN, HETGNN, HGT)
TRAINING, INFERENCE = "training", "inference"

_MARKER = {RGCN: "rgcn/W0", HETGNN: "hetgnn/u", HGT: "hgt/"}


@dataclass(frozen=True)
class EncoderConfig:
    kind: str = RGCN
    dim: int = 128
    dropout_rate: float = 0.0
    head_count: int = 4
    walk: WalkConfig = field(default_factory=WalkConfig)
    reference_date: int = DEFAULT_REFERENCE_DATE

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")


def init_encoder(store: ParameterStore, g: TypedGraph, cfg: EncoderConfig, seed: int) -> None:
    rng = np.random.default_rng([seed, 2])
    if cfg.kind == RGCN:
        init_rgcn(store, g, cfg.dim, rng)
    elif cfg.kind == HETGNN:
        init_hetgnn(store, g, cfg.dim, rng)
    else:
        init_hgt(store, g, cfg.dim, cfg.head_count, rng)


def store_kind(store: ParameterStore) -> str | None:
    for kind, marker in _MARKER.items():
        if any(name.startswith(marker) for name in store.params):
            return kind
    return None


_SAMPLES: OrderedDict = OrderedDict()


def cached_samples(g: TypedGraph, walk: WalkConfig, seed: int):
    key = (id(g), walk, seed)
    hit = _SAMPLES.get(key)
    if hit is not None and hit[0] is g:
        return hit[1]
    samples = sample_neighbors(g, walk, seed)
    _SAMPLES[key] = (g, samples)
    while len(_SAMPLES) > 8:
        _SAMPLES.popitem(last=False)
    return samples


def encode(model_kind: str, g: TypedGraph, features: FeatureProvider, params: ParameterStore,
           mode: str = INFERENCE, seed: int = 0, cfg: EncoderConfig | None = None, epoch: int = 0,
           hidden: np.ndarray | None = None) -> Tensor:
    """Embed every node of ``g`` (global id order) with the chosen architecture.

    Dropout is only active in training mode; neighbor samples depend on ``seed`` alone.
    ``hidden`` flags edges of ``g`` that must not carry messages (e.g. the
    triples being scored in the current batch).
    """
    cfg = cfg or EncoderConfig(kind=model_kind, dim=features.dim)
    found = store_kind(params)
    if found != model_kind:
        raise KindMismatch(f"parameters belong to {found}, not {model_kind}")
    training = mode == TRAINING
    if model_kind == RGCN:
        x = features.node_matrix(params)
        return rgcn_forward(g, x, params, cfg.dropout_rate, seed, training, epoch, hidden)
    if model_kind == HETGNN:
        samples = cached_samples(g, cfg.walk, seed)
        if training and cfg.dropout_rate > 0.0:
            samples = drop_samples(samples, cfg.dropout_rate, seed, epoch)
        if hidden is not None:
            samples = hide_pairs(samples, g.global_heads()[hidden], g.global_tails()[hidden])
        return hetgnn_forward(g, features, params, samples)
    temporal = TemporalEncoding(features.dim, cfg.reference_date)
    return hgt_forward(g, features.node_matrix(params), features.dates(), temporal, params,
                       cfg.dropout_rate, seed, training, epoch, hidden=hidden)


__all__ = [
    "RGCN", "HETGNN", "HGT", "KINDS", "TRAINING", "INFERENCE", "EncoderConfig", "WalkConfig",
    "init_encoder", "encode", "store_kind", "rgcn_forward", "hgt_forward", "hetgnn_forward",
    "sample_neighbors",
]
