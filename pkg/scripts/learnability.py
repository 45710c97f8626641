"""Planted-benchmark MRR of all three models with their standard recipes.

Example:
    python scripts/learnability.py --data-seeds 42 1 2 3
"""
import argparse

from hetnews.checks import learnability_recipe, learnability_run, planted_benchmark
from hetnews.encoders import KINDS


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--data-seeds", type=int, nargs="+", default=[42])
    p.add_argument("--train-seed", type=int, default=42)
    a = p.parse_args()
    print("data_seed\tmodel\tmrr\thits1\thits3\thits10\tseconds")
    for ds in a.data_seeds:
        for kind in KINDS:
            cfg, mode = learnability_recipe(kind, a.train_seed)
            r = learnability_run(cfg, mode, planted_benchmark(ds), split_seed=ds)
            print(f"{ds}\t{kind}\t{r.mrr:.4f}\t{r.hits[1]:.4f}\t{r.hits[3]:.4f}\t{r.hits[10]:.4f}\t{r.seconds:.1f}",
                  flush=True)


if __name__ == "__main__":
    main()
