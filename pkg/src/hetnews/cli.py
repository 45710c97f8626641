"""``hetnews`` command line: generate, stats, train, eval, gradcheck.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import contextlib
import hashlib
import logging
import os
import sys
import tempfile
import time
from pathlib import Path

from threadpoolctl import threadpool_limits

from . import __version__
from .checks import TOLERANCE, gradcheck_model
from .config import RunConfig, format_config, load_config
from .encoders import INFERENCE, KINDS, encode, store_kind
from .errors import ConfigError, DataError, HetNewsError, KindMismatch
from .evaluation import USE_CASES, evaluate, format_metrics, split_edges, write_ranks
from .features import FeatureProvider, load_precomputed_vectors
from .graph import TypedGraph, augment_with_inverses, degree_stats, load_graph, write_graph
from .numerics import load_snapshot, save_snapshot
from .synth import generate
from .training import relation_matrix, train, write_trace

log = logging.getLogger("hetnews")

EDGES, ATTRIBUTES = "edges.tsv", "attributes.tsv"
MANIFEST = "manifest.txt"


def digest(path) -> str:
    """64-bit content hash (BLAKE2b, 8-byte digest) as hex."""
    h = hashlib.blake2b(digest_size=8)
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}-", dir=path.parent)
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_manifest(out: Path, command: str, cfg: RunConfig | None, inputs: list[Path],
                   outputs: list[Path], started: float, extra: dict | None = None) -> Path:
    lines = [f"version = {__version__}", f"command = {command}",
             f"duration_seconds = {time.perf_counter() - started:.3f}"]
    for k, v in (extra or {}).items():
        lines.append(f"{k} = {v}")
    if cfg is not None:
        lines += ["", "[seeds]"] + [f"{k} = {v}" for k, v in cfg.seeds().items()]
    lines += ["", "[inputs]"] + [f"{p} = {digest(p)}" for p in inputs]
    lines += ["", "[outputs]"] + [str(p) for p in outputs]
    if cfg is not None:
        lines += ["", "# configuration snapshot", format_config(cfg)]
    path = out / MANIFEST
    write_atomic(path, "\n".join(lines) + "\n")
    return path


# -- helpers --------------------------------------------------------------------

def _load_run_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _data_paths(args, cfg: RunConfig) -> tuple[Path, Path | None]:
    """Edge/attribute paths; relative paths resolve against the config file's directory."""
    if not cfg.data.edges:
        raise ConfigError("[data] edges is required for this command")
    base = Path(args.config).resolve().parent if args.config else Path.cwd()

    def resolve(p):
        p = Path(p)
        return p if p.is_absolute() else base / p
    attrs = resolve(cfg.data.attributes) if cfg.data.attributes else None
    return resolve(cfg.data.edges), attrs


def _load_graph(args, cfg: RunConfig) -> tuple[TypedGraph, list[Path]]:
    edges, attrs = _data_paths(args, cfg)
    inputs = [p for p in (edges, attrs) if p is not None]
    for p in inputs:
        if not p.is_file():
            raise DataError(f"missing input file {p}")
    return load_graph(edges, attrs), inputs


def _features(args, cfg: RunConfig, g: TypedGraph, inputs: list[Path]) -> FeatureProvider:
    pre = None
    if cfg.features.precomputed:
        path = Path(cfg.features.precomputed)
        if not path.is_absolute() and args.config:
            path = Path(args.config).resolve().parent / path
        pre = load_precomputed_vectors(path, g, cfg.train.dim)
        inputs.append(path)
    return FeatureProvider(g, mode=cfg.features.mode, dim=cfg.train.dim,
                           token_seed=cfg.features.token_seed, precomputed=pre)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def stats_report(g: TypedGraph) -> str:
    s = g.schema
    lines = [f"nodes\t{g.num_nodes}", f"edges\t{g.num_triples}"]
    lines += [f"node_type\t{name}\t{n}" for name, n in zip(s.node_types, g.node_counts)]
    lines += [f"relation\t{name}\t{g.relation_count(r)}" for r, name in enumerate(s.relation_types)]
    for (t, r, d), summ in sorted(degree_stats(g).items()):
        lines.append(f"degree\t{t}\t{r}\t{d}\tmin={summ.min}\tmax={summ.max}\tmean={summ.mean:.4f}")
    return "\n".join(lines) + "\n"


# -- commands ---------------------------------------------------------------------

def cmd_generate(args) -> int:
    started = time.perf_counter()
    cfg = _load_run_config(args)
    out = _out_dir(args)
    g = generate(cfg.synth)
    edges, attrs = out / EDGES, out / ATTRIBUTES
    write_graph(g, edges, attrs)
    inputs = [Path(args.config)] if args.config else []
    write_manifest(out, "generate", cfg, inputs, [edges, attrs], started)
    print(f"wrote {g.num_nodes} nodes, {g.num_triples} edges to {out}")
    return 0


def cmd_stats(args) -> int:
    started = time.perf_counter()
    cfg = _load_run_config(args)
    g, inputs = _load_graph(args, cfg)
    report = stats_report(g)
    sys.stdout.write(report)
    if args.out:
        out = _out_dir(args)
        write_atomic(out / "stats.txt", report)
        write_manifest(out, "stats", cfg, inputs, [out / "stats.txt"], started)
    return 0


def _split(cfg: RunConfig, g: TypedGraph):
    train_g, test = split_edges(g, cfg.split)
    return train_g, augment_with_inverses(train_g), test


def cmd_train(args) -> int:
    started = time.perf_counter()
    cfg = _load_run_config(args)
    out = _out_dir(args)
    g, inputs = _load_graph(args, cfg)
    _, train_aug, _ = _split(cfg, g)
    features = _features(args, cfg, train_aug, inputs)
    store, reports = train(train_aug, cfg.train, features)
    snap, trace = out / "params", out / "trace.csv"
    save_snapshot(store, snap)
    write_trace(reports, trace)
    final = f"{reports[-1].loss:.6f}" if reports else "n/a"
    write_manifest(out, "train", cfg, inputs, [snap, trace], started, {"final_loss": final})
    print(f"trained {cfg.train.model_kind} for {cfg.train.epochs} epochs; final loss {final}")
    return 0


def cmd_eval(args) -> int:
    started = time.perf_counter()
    cfg = _load_run_config(args)
    out = _out_dir(args)
    g, inputs = _load_graph(args, cfg)
    train_g, train_aug, test = _split(cfg, g)
    features = _features(args, cfg, train_aug, inputs)
    snap = Path(args.snapshot) if args.snapshot else out / "params"
    store = load_snapshot(snap)
    kind = cfg.train.model_kind
    if store_kind(store) != kind:
        raise KindMismatch(f"snapshot {snap} holds {store_kind(store)} parameters, config says {kind}")
    width = store.params[f"distmult/{g.schema.relation_types[0]}"].shape[1]
    if width != cfg.train.dim:
        raise KindMismatch(f"snapshot {snap} has dim {width}, config says {cfg.train.dim}")
    emb = encode(kind, train_aug, features, store, INFERENCE, cfg.train.seed, cfg.train.encoder_config()).value
    dm = relation_matrix(store, train_aug).value
    use_case = args.use_case or cfg.eval.use_case
    cases = list(USE_CASES) if use_case == "both" else [use_case]
    directions = args.directions or cfg.eval.directions
    reports = [evaluate(g, train_g, test, emb, dm, uc, directions) for uc in cases]
    metrics = out / "metrics.csv"
    write_atomic(metrics, format_metrics([(kind, r) for r in reports]))
    outputs = [metrics]
    if cfg.eval.write_ranks:
        ranks = out / "ranks.csv"
        write_ranks(g, reports, ranks)
        outputs.append(ranks)
    inputs.append(snap / "index.txt")
    write_manifest(out, "eval", cfg, inputs, outputs, started)
    sys.stdout.write(metrics.read_text(encoding="utf-8"))
    return 0


def cmd_gradcheck(args) -> int:
    started = time.perf_counter()
    kinds = KINDS if args.model == "all" else (args.model,)
    seed = args.seed if args.seed is not None else 0
    worst = 0.0
    lines = []
    for kind in kinds:
        res = gradcheck_model(kind, args.dim, seed)
        worst = max(worst, res.max_error)
        lines.append(f"{kind}\tdim={res.dim}\tmax_rel_err={res.max_error:.3e}\t"
                     f"{'ok' if res.passed else 'FAIL'}\t{res.seconds:.2f}s")
    sys.stdout.write("\n".join(lines) + "\n")
    if args.out:
        out = _out_dir(args)
        write_atomic(out / "gradcheck.txt", "\n".join(lines) + "\n")
        write_manifest(out, "gradcheck", None, [], [out / "gradcheck.txt"], started,
                       {"seed": seed, "max_relative_error": f"{worst:.3e}"})
    return 0 if worst < TOLERANCE else 4


# -- entry point -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="sectioned key = value run configuration")
    common.add_argument("--out", help="output directory (created if missing)")
    common.add_argument("--seed", type=int, help="override every seed in the configuration")
    common.add_argument("--threads", type=int, help="cap numeric library worker threads")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="hetnews", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="write a synthetic graph")
    sub.add_parser("stats", parents=[common], help="node, edge and degree statistics")
    sub.add_parser("train", parents=[common], help="fit an encoder + DistMult decoder")
    ev = sub.add_parser("eval", parents=[common], help="filtered MRR / Hits@k per use case")
    ev.add_argument("--snapshot", help="parameter snapshot directory (default <out>/params)")
    ev.add_argument("--use-case", choices=["A", "B", "both"])
    ev.add_argument("--directions", choices=["tail", "both"])
    gc = sub.add_parser("gradcheck", parents=[common], help="finite-difference gradient check")
    gc.add_argument("--model", choices=[*KINDS, "all"], default="all")
    gc.add_argument("--dim", type=int, default=8)
    return p


COMMANDS = {"generate": cmd_generate, "stats": cmd_stats, "train": cmd_train, "eval": cmd_eval,
            "gradcheck": cmd_gradcheck}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command in ("generate", "train", "eval") and not args.out:
        args.out = "."
    limits = threadpool_limits(args.threads) if args.threads else contextlib.nullcontext()
    try:
        with limits:
            return COMMANDS[args.command](args)
    except HetNewsError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
