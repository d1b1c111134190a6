"""NumPy implementations of the hot kernels.

This is the fallback backend used when the compiled extension
(``protodistill.diffcore._ckernels``) is not available.  Both backends
expose the same functions with the same signatures.  Results agree to
~1e-12 relative (summation order differs between vectorized NumPy and
the sequential C loops, so bit-exact cross-backend equality is not
guaranteed; each backend is individually deterministic).
"""

import numpy as np

NAME = "numpy"


def gather_concat(table, idx):
    """Concatenate table rows selected by each row of ``idx``: [N,W] -> [N, W*D]."""
    n, w = idx.shape
    return table[idx.reshape(-1)].reshape(n, w * table.shape[1])


def gather_concat_grad(gout, idx, n_rows):
    n, w = idx.shape
    d = gout.shape[1] // w
    gtable = np.zeros((n_rows, d))
    np.add.at(gtable, idx.reshape(-1), gout.reshape(n * w, d))
    return gtable


def tanh_fwd(x):
    return np.tanh(x)


def tanh_grad(y, gy):
    return (1.0 - y * y) * gy


def softmax_rows(x):
    # max-subtraction keeps exp() in range; documented stability contract
    shifted = x - x.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_rows_grad(y, gy):
    inner = (gy * y).sum(axis=1, keepdims=True)
    return y * (gy - inner)


def l2norm_rows(x):
    """Return (normalized rows, row norms). Caller rejects zero norms."""
    norms = np.sqrt((x * x).sum(axis=1))
    return x / norms[:, None], norms


def l2norm_rows_grad(y, norms, gy):
    inner = (gy * y).sum(axis=1, keepdims=True)
    return (gy - y * inner) / norms[:, None]


def pairwise_dist(a, b):
    """Euclidean distances between each row of a [N,D] and each row of b [K,D]."""
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2))


def pairwise_dist_grad(a, b, d, gd):
    scale = np.zeros_like(gd)
    nz = d > 0.0
    scale[nz] = gd[nz] / d[nz]
    diff = a[:, None, :] - b[None, :, :]
    ga = (scale[:, :, None] * diff).sum(axis=1)
    gb = -(scale[:, :, None] * diff).sum(axis=0)
    return ga, gb


def weighted_colmeans(w, h, active):
    """Per-column weighted means of h rows: c_k = sum_i w[i,k] h[i] / sum_i w[i,k].

    ``active`` marks columns with enough total weight; inactive columns get
    zero rows (the caller excludes them downstream).
    """
    wsum = w.sum(axis=0)
    c = np.zeros((w.shape[1], h.shape[1]))
    act = active.astype(bool)
    if act.any():
        c[act] = (w[:, act].T @ h) / wsum[act, None]
    return c, wsum


def weighted_colmeans_grad(w, h, c, wsum, active, gc):
    act = active.astype(bool)
    gch = np.where(act[:, None], gc, 0.0)
    inv = np.zeros_like(wsum)
    inv[act] = 1.0 / wsum[act]
    gh = (w * inv[None, :]) @ gch
    gw = (h @ gch.T - (gch * c).sum(axis=1)[None, :]) * inv[None, :]
    return gw, gh


def ce_rows(p, labels):
    """Mean negative log-probability of the labeled entry per row."""
    n = p.shape[0]
    picked = p[np.arange(n), labels]
    return (0.0 - np.log(picked).sum()) / n


def ce_rows_grad(p, labels, g):
    n = p.shape[0]
    rows = np.arange(n)
    gp = np.zeros_like(p)
    gp[rows, labels] = -g / (n * p[rows, labels])
    return gp


def mse_rows(p, q):
    """Mean over rows of the squared row difference (summed over columns)."""
    d = p - q
    return (d * d).sum() / p.shape[0]


def mse_rows_grad(p, q, g):
    gp = (2.0 * g / p.shape[0]) * (p - q)
    return gp, -gp
