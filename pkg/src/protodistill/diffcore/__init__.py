"""Deterministic differentiable numeric kernel.

64-bit floats throughout.  Softmax uses max-subtraction; L2-normalizing
a zero row is an error rather than a silent epsilon fix, so dead classes
surface immediately.  See ``backend`` for kernel backend selection.
"""

from .backend import BACKEND, load_backend
from .graph import (
    CHECK_FINITE,
    DiffcoreError,
    DomainError,
    Node,
    Parameter,
    ShapeError,
    add,
    add_scalar,
    affine,
    backward,
    check_gradient,
    concat_rows,
    constant,
    cross_entropy,
    dot,
    embed_windows,
    euclidean,
    evaluate,
    exp,
    gradient,
    leaf,
    log,
    l2_normalize_rows,
    masked_mean,
    matmul,
    mse,
    mul,
    pairwise_distances,
    scale,
    select_row,
    softmax_rows,
    sub,
    sum_all,
    tanh,
    weighted_row_means,
)
from .adam import Adam

__all__ = [
    "Adam",
    "BACKEND",
    "CHECK_FINITE",
    "DiffcoreError",
    "DomainError",
    "Node",
    "Parameter",
    "ShapeError",
    "add",
    "add_scalar",
    "affine",
    "backward",
    "check_gradient",
    "concat_rows",
    "constant",
    "cross_entropy",
    "dot",
    "embed_windows",
    "euclidean",
    "evaluate",
    "exp",
    "gradient",
    "leaf",
    "load_backend",
    "log",
    "l2_normalize_rows",
    "masked_mean",
    "matmul",
    "mse",
    "mul",
    "pairwise_distances",
    "scale",
    "select_row",
    "softmax_rows",
    "sub",
    "sum_all",
    "tanh",
    "weighted_row_means",
]
