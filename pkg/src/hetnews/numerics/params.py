"""Named parameters, Adam, and on-disk snapshots."""
from __future__ import annotations

import os
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DataError, NonFiniteGradient, ShapeMismatch
from .autodiff import Tensor

MANIFEST = "index.txt"


@dataclass(eq=False)
class Parameter:
    name: str
    value: np.ndarray
    grad: np.ndarray = None
    adam_m: np.ndarray = None
    adam_v: np.ndarray = None
    step_count: int = 0

    def __post_init__(self):
        self.value = np.array(self.value, dtype=np.float64)
        if self.value.ndim != 2:
            raise ShapeMismatch(f"parameter {self.name!r} must be 2-D, got shape {self.value.shape}")
        for attr in ("grad", "adam_m", "adam_v"):
            if getattr(self, attr) is None:
                setattr(self, attr, np.zeros_like(self.value))

    @property
    def shape(self):
        return self.value.shape

    def tensor(self) -> Tensor:
        return Tensor(self.value, param=self)


@dataclass(eq=False)
class ParameterStore:
    rng_seed: int = 0
    params: dict[str, Parameter] = field(default_factory=dict)

    def __contains__(self, name):
        return name in self.params

    def __getitem__(self, name) -> Parameter:
        return self.params[name]

    def __iter__(self):
        return iter(self.params.values())

    def __len__(self):
        return len(self.params)

    def add(self, name: str, value) -> Parameter:
        if name in self.params:
            raise KeyError(f"duplicate parameter {name!r}")
        p = Parameter(name, value)
        self.params[name] = p
        return p

    def uniform(self, name: str, shape, bound: float, rng: np.random.Generator) -> Parameter:
        return self.add(name, rng.uniform(-bound, bound, size=shape))

    def var(self, name: str) -> Tensor:
        return self.params[name].tensor()

    def zero_grads(self) -> None:
        for p in self:
            p.grad[...] = 0.0

    def values(self) -> dict[str, np.ndarray]:
        return {name: p.value.copy() for name, p in self.params.items()}


def adam_step(store: ParameterStore, lr: float, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> None:
    """One bias-corrected Adam update of every parameter. Gradients are left in place."""
    for p in store:
        if not np.all(np.isfinite(p.grad)):
            raise NonFiniteGradient(f"non-finite gradient in {p.name!r}")
    for p in store:
        p.step_count += 1
        t = p.step_count
        p.adam_m *= beta1
        p.adam_m += (1.0 - beta1) * p.grad
        p.adam_v *= beta2
        p.adam_v += (1.0 - beta2) * p.grad * p.grad
        m_hat = p.adam_m / (1.0 - beta1 ** t)
        v_hat = p.adam_v / (1.0 - beta2 ** t)
        p.value -= lr * m_hat / (np.sqrt(v_hat) + eps)


def save_snapshot(store: ParameterStore, directory) -> None:
    """One raw little-endian float64 file per parameter plus a plain-text index.

    The directory is assembled next to its destination and swapped in whole.
    """
    directory = Path(directory)
    directory.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".snapshot-", dir=directory.parent))
    lines = ["# name\tfile\trows\tcols\tbyte_offset\tcount\n"]
    for i, p in enumerate(store):
        fname = f"p{i:04d}.f64"
        p.value.astype("<f8").tofile(tmp / fname)
        rows, cols = p.shape
        lines.append(f"{p.name}\t{fname}\t{rows}\t{cols}\t0\t{rows * cols}\n")
    (tmp / MANIFEST).write_text("".join(lines), encoding="utf-8")
    if directory.exists():
        shutil.rmtree(directory)
    os.replace(tmp, directory)


def load_snapshot(directory, rng_seed: int = 0) -> ParameterStore:
    directory = Path(directory)
    index = directory / MANIFEST
    if not index.exists():
        raise DataError(f"no snapshot index at {index}")
    store = ParameterStore(rng_seed)
    for line in index.read_text(encoding="utf-8").splitlines():
        if not line or line.startswith("#"):
            continue
        name, fname, rows, cols, offset, count = line.split("\t")
        rows, cols, offset, count = int(rows), int(cols), int(offset), int(count)
        data = np.fromfile(directory / fname, dtype="<f8", count=count, offset=offset)
        if data.size != rows * cols:
            raise DataError(f"snapshot file {fname} holds {data.size} values, expected {rows * cols}")
        store.add(name, data.reshape(rows, cols))
    return store
