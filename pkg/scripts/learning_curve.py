"""Test MRR on the planted benchmark, recorded during training.

Example:
    python scripts/learning_curve.py --model HGT --features title-text --epochs 40 --lr 0.0005
"""
import argparse

from hetnews.checks import learnability_run, planted_benchmark
from hetnews.training import TrainConfig


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--model", default="RGCN")
    p.add_argument("--features", default="learned-table")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--dim", type=int, default=128)
    p.add_argument("--dropout", type=float, default=0.4)
    p.add_argument("--content-dropout", type=float, default=0.0)
    p.add_argument("--negatives", type=int, default=10)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--data-seed", type=int, default=42)
    p.add_argument("--hide-targets", action="store_true")
    p.add_argument("--vocab", type=int, default=100, help="title vocabulary size of the planted graph")
    p.add_argument("--every", type=int, default=5)
    a = p.parse_args()
    cfg = TrainConfig(model_kind=a.model, dim=a.dim, epochs=a.epochs, learning_rate=a.lr, dropout_rate=a.dropout,
                      content_dropout_rate=a.content_dropout, negatives_per_positive=a.negatives, seed=a.seed,
                      hide_targets=a.hide_targets)
    res = learnability_run(cfg, a.features, planted_benchmark(a.data_seed, title_vocab_size=a.vocab),
                           split_seed=a.data_seed, curve_every=a.every)
    print("epoch\tloss\tmrr")
    for epoch, loss, mrr in res.curve:
        print(f"{epoch}\t{loss:.4f}\t{mrr:.4f}", flush=True)
    print(f"final mrr {res.mrr:.4f} in {res.seconds:.1f}s")


if __name__ == "__main__":
    main()
