"""Reverse-mode automatic differentiation over a fixed primitive catalog.

Expressions are built eagerly: every op validates shapes, computes its
forward value through the active kernel backend, and records a VJP
closure.  ``gradient`` walks the DAG once in reverse topological order.
Evaluation is single-threaded and deterministic: identical inputs give
bit-identical outputs on one platform.

Catalog: affine map, matmul, elementwise tanh/exp/log, row softmax
(max-subtracted for stability), L2 row normalization, dot product,
Euclidean distance (scalar and pairwise), mean-squared-error reduction,
cross-entropy reduction, scalar add/multiply, elementwise add/sub/mul,
row concatenation, row selection, sum reduction, weighted/masked row
means, and embedding-window gather (concatenation of table rows).
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from .backend import kernels as K


class DiffcoreError(Exception):
    """Base error for the numeric kernel."""


class ShapeError(DiffcoreError):
    """Operand shapes incompatible with a primitive."""


class DomainError(DiffcoreError):
    """Value outside a primitive's documented domain."""


# When set, every primitive verifies its output is finite.  Cheap at desk
# scale and catches drift into NaN/Inf at the op that produced it.
CHECK_FINITE = True


def _as_array(x) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    return np.ascontiguousarray(a)


def _finite(value: np.ndarray, op: str) -> None:
    if CHECK_FINITE and not np.all(np.isfinite(value)):
        raise DomainError(f"{op}: produced non-finite values")


class Parameter:
    """Named trainable tensor with a gradient slot of the same shape.

    Frozen parameters still receive gradients from ``gradient``; the
    optimizer is what leaves them untouched.
    """

    def __init__(self, name: str, value, frozen: bool = False):
        self.name = name
        self.value = _as_array(value)
        self.grad = np.zeros_like(self.value)
        self.frozen = bool(frozen)

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.value.shape}, frozen={self.frozen})"


class Node:
    """One value in an expression DAG."""

    __slots__ = ("value", "parents", "vjp", "grad", "param", "op")

    def __init__(self, value, parents=(), vjp=None, param=None, op="leaf"):
        self.value = value
        self.parents = parents
        self.vjp = vjp
        self.grad: Optional[np.ndarray] = None
        self.param = param
        self.op = op

    @property
    def shape(self):
        return self.value.shape


def constant(x) -> Node:
    return Node(_as_array(x), op="constant")


def leaf(p: Parameter) -> Node:
    """Graph input bound to a Parameter."""
    return Node(p.value, param=p, op="parameter")


def evaluate(node: Node) -> np.ndarray:
    """Forward value of an expression (already computed eagerly)."""
    return node.value


def _node(op, value, parents, vjp) -> Node:
    _finite(value, op)
    return Node(value, parents=tuple(parents), vjp=vjp, op=op)


def _want(cond: bool, op: str, msg: str) -> None:
    if not cond:
        raise ShapeError(f"{op}: {msg}")


# ----------------------------------------------------------------------
# elementwise and scalar primitives
# ----------------------------------------------------------------------

def add(a: Node, b: Node) -> Node:
    _want(a.shape == b.shape, "add", f"shapes {a.shape} and {b.shape} differ")
    return _node("add", a.value + b.value, (a, b), lambda g: (g, g))


def sub(a: Node, b: Node) -> Node:
    _want(a.shape == b.shape, "sub", f"shapes {a.shape} and {b.shape} differ")
    return _node("sub", a.value - b.value, (a, b), lambda g: (g, -g))


def mul(a: Node, b: Node) -> Node:
    _want(a.shape == b.shape, "mul", f"shapes {a.shape} and {b.shape} differ")
    av, bv = a.value, b.value
    return _node("mul", av * bv, (a, b), lambda g: (g * bv, g * av))


def scale(a: Node, c: float) -> Node:
    c = float(c)
    return _node("scale", c * a.value, (a,), lambda g: (c * g,))


def add_scalar(a: Node, c: float) -> Node:
    c = float(c)
    return _node("add_scalar", a.value + c, (a,), lambda g: (g,))


def exp(a: Node) -> Node:
    out = np.exp(a.value)
    return _node("exp", out, (a,), lambda g: (g * out,))


def log(a: Node) -> Node:
    if np.any(a.value <= 0.0):
        raise DomainError("log: non-positive input")
    av = a.value
    return _node("log", np.log(av), (a,), lambda g: (g / av,))


def tanh(a: Node) -> Node:
    _want(a.value.ndim == 2, "tanh", "expects a 2-d tensor")
    out = K.tanh_fwd(a.value)
    return _node("tanh", out, (a,), lambda g: (K.tanh_grad(out, g),))


def sum_all(a: Node) -> Node:
    shape = a.shape
    return _node("sum_all", np.asarray(a.value.sum()), (a,),
                 lambda g: (np.full(shape, float(g)),))


# ----------------------------------------------------------------------
# linear algebra
# ----------------------------------------------------------------------

def matmul(a: Node, b: Node) -> Node:
    _want(a.value.ndim == 2 and b.value.ndim == 2, "matmul", "expects 2-d operands")
    _want(a.shape[1] == b.shape[0], "matmul",
          f"inner dimensions {a.shape} x {b.shape} differ")
    av, bv = a.value, b.value
    return _node("matmul", av @ bv, (a, b),
                 lambda g: (g @ bv.T, av.T @ g))


def affine(x: Node, w: Node, b: Node) -> Node:
    """x @ w + b with b broadcast over rows."""
    _want(x.value.ndim == 2 and w.value.ndim == 2, "affine", "expects 2-d x and w")
    _want(x.shape[1] == w.shape[0], "affine",
          f"inner dimensions {x.shape} x {w.shape} differ")
    _want(b.shape == (w.shape[1],), "affine",
          f"bias shape {b.shape} does not match output width {w.shape[1]}")
    xv, wv = x.value, w.value
    out = xv @ wv + b.value
    return _node("affine", out, (x, w, b),
                 lambda g: (g @ wv.T, xv.T @ g, g.sum(axis=0)))


def dot(a: Node, b: Node) -> Node:
    _want(a.shape == b.shape, "dot", f"shapes {a.shape} and {b.shape} differ")
    av = a.value.reshape(-1)
    bv = b.value.reshape(-1)
    ash, bsh = a.shape, b.shape
    return _node("dot", np.asarray(av @ bv), (a, b),
                 lambda g: (float(g) * bv.reshape(ash), float(g) * av.reshape(bsh)))


def euclidean(a: Node, b: Node) -> Node:
    """Euclidean distance between two equal-shape tensors (flattened)."""
    _want(a.shape == b.shape, "euclidean", f"shapes {a.shape} and {b.shape} differ")
    diff = a.value - b.value
    d = float(np.sqrt((diff * diff).sum()))

    def vjp(g):
        if d == 0.0:
            raise DomainError("euclidean: gradient undefined at zero distance")
        ga = (float(g) / d) * diff
        return ga, -ga

    return _node("euclidean", np.asarray(d), (a, b), vjp)


def pairwise_distances(a: Node, b: Node) -> Node:
    """Distances between each row of a [N,D] and each row of b [K,D] -> [N,K]."""
    _want(a.value.ndim == 2 and b.value.ndim == 2, "pairwise_distances",
          "expects 2-d operands")
    _want(a.shape[1] == b.shape[1], "pairwise_distances",
          f"row widths {a.shape} vs {b.shape} differ")
    av, bv = a.value, b.value
    d = K.pairwise_dist(av, bv)

    def vjp(g):
        if np.any((d == 0.0) & (g != 0.0)):
            raise DomainError("pairwise_distances: gradient undefined at zero distance")
        return K.pairwise_dist_grad(av, bv, d, g)

    return _node("pairwise_distances", d, (a, b), vjp)


# ----------------------------------------------------------------------
# row-structured primitives
# ----------------------------------------------------------------------

def softmax_rows(x: Node) -> Node:
    _want(x.value.ndim == 2, "softmax_rows", "expects a 2-d tensor")
    y = K.softmax_rows(x.value)
    return _node("softmax_rows", y, (x,), lambda g: (K.softmax_rows_grad(y, g),))


def l2_normalize_rows(x: Node) -> Node:
    _want(x.value.ndim == 2, "l2_normalize_rows", "expects a 2-d tensor")
    y, norms = K.l2norm_rows(x.value)
    if np.any(norms == 0.0):
        raise DomainError("l2_normalize_rows: zero row cannot be normalized")
    return _node("l2_normalize_rows", y, (x,),
                 lambda g: (K.l2norm_rows_grad(y, norms, g),))


def concat_rows(a: Node, b: Node) -> Node:
    _want(a.value.ndim == 2 and b.value.ndim == 2, "concat_rows", "expects 2-d operands")
    _want(a.shape[1] == b.shape[1], "concat_rows",
          f"row widths {a.shape} vs {b.shape} differ")
    n = a.shape[0]
    return _node("concat_rows", np.concatenate((a.value, b.value), axis=0), (a, b),
                 lambda g: (g[:n], g[n:]))


def select_row(x: Node, i: int) -> Node:
    _want(x.value.ndim == 2, "select_row", "expects a 2-d tensor")
    _want(0 <= i < x.shape[0], "select_row", f"row {i} out of range {x.shape}")
    shape = x.shape

    def vjp(g):
        gx = np.zeros(shape)
        gx[i] = g
        return (gx,)

    return _node("select_row", x.value[i].copy(), (x,), vjp)


def embed_windows(table: Node, idx: np.ndarray) -> Node:
    """Concatenate table rows per index window: table [V,D], idx [N,W] -> [N,W*D]."""
    _want(table.value.ndim == 2, "embed_windows", "expects a 2-d table")
    idx = np.ascontiguousarray(idx, dtype=np.int64)
    _want(idx.ndim == 2, "embed_windows", "expects a 2-d index matrix")
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        raise ShapeError(f"embed_windows: index out of range for table {table.shape}")
    n_rows = table.shape[0]
    out = K.gather_concat(table.value, idx)
    return _node("embed_windows", out, (table,),
                 lambda g: (K.gather_concat_grad(np.ascontiguousarray(g), idx, n_rows),))


def weighted_row_means(weights: Node, values: Node,
                       active: Optional[np.ndarray] = None) -> Node:
    """Per-class weighted means: out[k] = sum_i w[i,k] v[i] / sum_i w[i,k].

    ``active`` is a boolean mask of classes with enough total weight
    (default: column sums >= 1e-8).  Inactive classes produce zero rows
    and propagate no gradient; callers exclude them downstream.
    """
    _want(weights.value.ndim == 2 and values.value.ndim == 2,
          "weighted_row_means", "expects 2-d operands")
    _want(weights.shape[0] == values.shape[0], "weighted_row_means",
          f"row counts {weights.shape} vs {values.shape} differ")
    if active is None:
        active = weights.value.sum(axis=0) >= 1e-8
    act = np.ascontiguousarray(active, dtype=np.uint8)
    _want(act.shape == (weights.shape[1],), "weighted_row_means",
          "active mask does not match class count")
    wv, vv = weights.value, values.value
    c, wsum = K.weighted_colmeans(wv, vv, act)
    return _node("weighted_row_means", c, (weights, values),
                 lambda g: K.weighted_colmeans_grad(wv, vv, c, wsum, act,
                                                    np.ascontiguousarray(g)))


def masked_mean(values: Node, mask: np.ndarray) -> Node:
    """Mean of the rows selected by a 0/1 mask -> [D]."""
    mask = np.asarray(mask, dtype=np.float64).reshape(-1)
    _want(values.value.ndim == 2 and mask.shape[0] == values.shape[0],
          "masked_mean", f"mask length {mask.shape} vs values {values.shape}")
    total = mask.sum()
    if total < 1.0:
        raise DomainError("masked_mean: empty mask")
    vv = values.value
    out = mask @ vv / total
    return _node("masked_mean", out, (values,),
                 lambda g: (np.outer(mask / total, g),))


# ----------------------------------------------------------------------
# loss reductions
# ----------------------------------------------------------------------

def cross_entropy(p: Node, labels: np.ndarray) -> Node:
    """Token-mean negative log-probability of hard labels: -(1/N) sum log p[i, y_i]."""
    _want(p.value.ndim == 2, "cross_entropy", "expects 2-d probability rows")
    labels = np.ascontiguousarray(labels, dtype=np.int64)
    _want(labels.shape == (p.shape[0],), "cross_entropy",
          f"label count {labels.shape} vs rows {p.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= p.shape[1]):
        raise ShapeError("cross_entropy: label index out of range")
    pv = p.value
    picked = pv[np.arange(pv.shape[0]), labels]
    if np.any(picked <= 0.0):
        raise DomainError("cross_entropy: zero probability at a labeled entry")
    out = K.ce_rows(pv, labels)
    return _node("cross_entropy", np.asarray(out), (p,),
                 lambda g: (K.ce_rows_grad(pv, labels, float(g)),))


def mse(p: Node, q: Node) -> Node:
    """Token-mean of the squared row difference summed over classes."""
    _want(p.shape == q.shape, "mse", f"shapes {p.shape} and {q.shape} differ")
    _want(p.value.ndim == 2, "mse", "expects 2-d probability rows")
    pv, qv = p.value, q.value
    out = K.mse_rows(pv, qv)
    return _node("mse", np.asarray(out), (p, q),
                 lambda g: K.mse_rows_grad(pv, qv, float(g)))


# ----------------------------------------------------------------------
# reverse pass
# ----------------------------------------------------------------------

def _topo_order(root: Node) -> list[Node]:
    order: list[Node] = []
    seen: set[int] = set()
    stack: list[tuple[Node, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(root: Node) -> list[Node]:
    """Propagate d(root)/d(node) into every reachable node's grad slot."""
    if root.value.size != 1:
        raise ShapeError("backward: root must be a scalar expression")
    order = _topo_order(root)
    for node in order:
        node.grad = None
    root.grad = np.ones_like(root.value)
    for node in reversed(order):
        if node.grad is None or node.vjp is None:
            continue
        grads = node.vjp(node.grad)
        for parent, g in zip(node.parents, grads):
            if g is None:
                continue
            if parent.grad is None:
                parent.grad = np.zeros_like(parent.value)
            parent.grad += g
    return order


def gradient(root: Node, params: Sequence[Parameter]) -> None:
    """Fill each Parameter's gradient slot with d(root)/d(parameter).

    Parameters not reachable from the root get exact zeros.  Multiple
    graph leaves bound to one parameter accumulate.
    """
    for p in params:
        p.grad[:] = 0.0
    order = backward(root)
    for node in order:
        if node.param is not None and node.grad is not None:
            node.param.grad += node.grad


def check_gradient(build: Callable[[], Node], params: Sequence[Parameter],
                   step: float = 1e-5) -> float:
    """Maximum relative error between analytic and central-difference gradients.

    ``build`` must reconstruct the scalar expression from the parameters'
    current values; it is re-evaluated at perturbed points.  The error for
    each entry is |analytic - fd| / max(1, |fd|).
    """
    if not (0.0 < step <= 1e-2):
        raise ValueError(f"check_gradient: step {step} outside (0, 1e-2]")
    root = build()
    if root.value.size != 1:
        raise ShapeError("check_gradient: expression must be scalar")
    gradient(root, params)
    analytic = [p.grad.copy() for p in params]

    worst = 0.0
    for p, ana in zip(params, analytic):
        flat = p.value.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            f_plus = float(build().value)
            flat[i] = orig - step
            f_minus = float(build().value)
            flat[i] = orig
            fd = (f_plus - f_minus) / (2.0 * step)
            err = abs(ana.reshape(-1)[i] - fd) / max(1.0, abs(fd))
            if err > worst:
                worst = err
    return worst
