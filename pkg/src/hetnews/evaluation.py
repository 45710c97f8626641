"""5:1 edge split, filtered ranking, MRR and Hits@k per use case."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, EmptyTestSet, RelationTooSmall
from .graph import FORWARD, INVERSE, NodeRef, Triple, TypedGraph

USE_CASES = {"A": "cites", "B": "has_topic"}
HITS_AT = (1, 3, 10)
TAIL, HEAD = "tail", "head"


@dataclass(frozen=True)
class SplitSpec:
    seed: int = 0
    stratified: bool = True
    train_part: int = 5
    test_part: int = 1

    @property
    def denominator(self) -> int:
        return self.train_part + self.test_part


def split_edges(g: TypedGraph, spec: SplitSpec = SplitSpec()) -> tuple[TypedGraph, list[Triple]]:
    """Hold out floor(count/6) triples per relation (or globally when not stratified).

    The train graph keeps every node; held-out triples are removed from it entirely.
    """
    if g.schema.augmented:
        raise ConfigError("split the original graph, then add inverses to the train part")
    held = np.zeros(g.num_triples, dtype=bool)
    den = spec.denominator
    if spec.stratified:
        for r, name in enumerate(g.schema.relation_types):
            idx = np.flatnonzero(g.rels == r)
            if len(idx) < den:
                raise RelationTooSmall(f"relation {name!r} has {len(idx)} triples; a stratified split needs {den}")
            n_test = len(idx) * spec.test_part // den
            perm = np.random.default_rng([spec.seed, r]).permutation(len(idx))
            held[idx[perm[:n_test]]] = True
    else:
        n_test = g.num_triples * spec.test_part // den
        held[np.random.default_rng([spec.seed]).permutation(g.num_triples)[:n_test]] = True
    test = [t for t, h in zip(g.triples, held) if h]
    return g.subgraph(~held), test


@dataclass(frozen=True)
class RankedResult:
    triple: Triple
    direction: str
    filtered_rank: int
    candidate_count: int


def tie_rank(greater: int, equal: int) -> int:
    """1 + greater + equal/2 rounded half up."""
    return 1 + greater + (equal + 1) // 2


def filtered_rank(g_full: TypedGraph, emb: np.ndarray, dm: np.ndarray, test_triple: Triple,
                  direction: str = TAIL) -> RankedResult:
    """Rank the true endpoint among all same-type nodes, other known true triples removed.

    ``emb`` is indexed by global node id of ``g_full``; ``dm`` holds one diagonal row per original relation.
    """
    r = test_triple.relation
    if r >= g_full.schema.n_original:
        raise ConfigError("only original (non-inverse) relations are ranked")
    off = g_full.offsets
    if direction == TAIL:
        fixed, target = test_triple.head, test_triple.tail
        indptr, indices = g_full.csr(r, FORWARD)
    elif direction == HEAD:
        fixed, target = test_triple.tail, test_triple.head
        indptr, indices = g_full.csr(r, INVERSE)
    else:
        raise ConfigError(f"unknown direction {direction!r}")
    cand_type = target.node_type
    n_cand = g_full.node_counts[cand_type]
    query = np.asarray(emb[off[fixed.node_type] + fixed.local_id]) * np.asarray(dm[r])
    scores = (np.asarray(emb[off[cand_type]:off[cand_type] + n_cand]) * query).sum(axis=1)
    keep = np.ones(n_cand, dtype=bool)
    keep[indices[indptr[fixed.local_id]:indptr[fixed.local_id + 1]]] = False
    keep[target.local_id] = False
    true_score = scores[target.local_id]
    others = scores[keep]
    greater = int(np.count_nonzero(others > true_score))
    equal = int(np.count_nonzero(others == true_score))
    return RankedResult(test_triple, direction, tie_rank(greater, equal), int(keep.sum()) + 1)


@dataclass
class MetricsReport:
    use_case: str
    mrr: float
    hits: dict[int, float]
    per_triple: list[RankedResult] = field(default_factory=list)


def metrics_from_ranks(ranks) -> tuple[float, dict[int, float]]:
    ranks = np.asarray(ranks, dtype=np.float64)
    if ranks.size == 0:
        raise EmptyTestSet("no ranks to summarise")
    return float(np.mean(1.0 / ranks)), {k: float(np.mean(ranks <= k)) for k in HITS_AT}


def evaluate(g_full: TypedGraph, train_graph: TypedGraph | None, test: list[Triple], emb: np.ndarray,
             dm: np.ndarray, use_case: str, directions: str = TAIL) -> MetricsReport:
    """Filtered MRR / Hits@{1,3,10} on the test triples of one use case.

    Use case A ranks ``cites`` edges, B ``has_topic`` edges. ``directions="both"``
    also ranks each head against all nodes of the head type and pools the results.
    """
    if use_case not in USE_CASES:
        raise ConfigError(f"unknown use case {use_case!r}")
    if directions not in (TAIL, "both"):
        raise ConfigError(f"unknown directions {directions!r}")
    if train_graph is not None and train_graph.node_counts != g_full.node_counts:
        raise ConfigError("train and full graph disagree on the node set")
    r = g_full.schema.relation_index(USE_CASES[use_case])
    selected = [t for t in test if t.relation == r]
    if not selected:
        raise EmptyTestSet(f"no {USE_CASES[use_case]} triples in the test split (use case {use_case})")
    dirs = (TAIL,) if directions == TAIL else (TAIL, HEAD)
    results = [filtered_rank(g_full, emb, dm, t, d) for t in selected for d in dirs]
    mrr, hits = metrics_from_ranks([res.filtered_rank for res in results])
    return MetricsReport(use_case, mrr, hits, results)


METRICS_HEADER = "use_case,model,mrr,hits1,hits3,hits10\n"
RANKS_HEADER = "head,relation,tail,direction,rank,candidates\n"


def format_metrics(rows: list[tuple[str, MetricsReport]]) -> str:
    lines = [METRICS_HEADER]
    for model, rep in rows:
        lines.append(f"{rep.use_case},{model},{rep.mrr:.6f},{rep.hits[1]:.6f},{rep.hits[3]:.6f},{rep.hits[10]:.6f}\n")
    return "".join(lines)


def write_metrics(rows: list[tuple[str, MetricsReport]], path) -> None:
    Path(path).write_text(format_metrics(rows), encoding="utf-8")


def read_metrics(path) -> list[dict]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    keys = lines[0].split(",")
    return [dict(zip(keys, line.split(","))) for line in lines[1:]]


def _node(g: TypedGraph, ref: NodeRef) -> str:
    return f"{g.schema.node_types[ref.node_type]}:{g.node_labels[ref.node_type][ref.local_id]}"


def write_ranks(g: TypedGraph, reports: list[MetricsReport], path) -> None:
    lines = [RANKS_HEADER]
    for rep in reports:
        for res in rep.per_triple:
            t = res.triple
            lines.append(f"{_node(g, t.head)},{g.schema.relation_types[t.relation]},{_node(g, t.tail)},"
                         f"{res.direction},{res.filtered_rank},{res.candidate_count}\n")
    Path(path).write_text("".join(lines), encoding="utf-8")
