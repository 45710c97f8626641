from . import autodiff as ad
from .autodiff import Tensor
from .gradcheck import finite_diff_check, relative_error
from .kernels import matmul, softmax_rows
from .params import Parameter, ParameterStore, adam_step, load_snapshot, save_snapshot
from .rng import counter_rng, dropout_edges, dropout_mask

__all__ = [
    "ad", "Tensor", "finite_diff_check", "relative_error", "matmul", "softmax_rows",
    "Parameter", "ParameterStore", "adam_step", "load_snapshot", "save_snapshot",
    "counter_rng", "dropout_edges", "dropout_mask",
]
