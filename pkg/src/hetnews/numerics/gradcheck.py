"""Central finite-difference verification of analytic gradients."""
from __future__ import annotations

import contextlib
from typing import Callable

import numpy as np

from .autodiff import Tensor
from .kernels import extended_precision
from .params import ParameterStore


def relative_error(a: float, n: float) -> float:
    return abs(a - n) / max(abs(a), abs(n), 1e-8)


def finite_diff_check(loss_fn: Callable[[ParameterStore], Tensor], store: ParameterStore,
                      epsilon: float = 1e-5, sample: int = 10, seed: int = 0,
                      per_parameter: dict | None = None, extended: bool = False) -> float:
    """Max relative error between backprop and central differences.

    ``sample`` coordinates are drawn (without replacement) from every parameter,
    so each parameter is exercised. If ``per_parameter`` is a dict it receives
    the worst error per parameter name. With ``extended`` the perturbed losses
    are evaluated in ``np.longdouble``, which lowers the roundoff floor of the
    difference quotient when gradient entries are much smaller than the loss.
    """
    store.zero_grads()
    loss_fn(store).backward()
    analytic = {p.name: p.grad.copy() for p in store}
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p in store:
        flat = p.value.reshape(-1)
        k = min(sample, flat.size)
        coords = rng.choice(flat.size, size=k, replace=False)
        err_p = 0.0
        for c in coords:
            orig = flat[c]
            hi, lo = orig + epsilon, orig - epsilon
            with extended_precision() if extended else contextlib.nullcontext():
                flat[c] = hi
                up = loss_fn(store).value
                flat[c] = lo
                down = loss_fn(store).value
            flat[c] = orig
            numeric = float((up - down) / (np.longdouble(hi) - np.longdouble(lo)))
            err_p = max(err_p, relative_error(float(analytic[p.name].reshape(-1)[c]), numeric))
        if per_parameter is not None:
            per_parameter[p.name] = err_p
        worst = max(worst, err_p)
    store.zero_grads()
    return worst
