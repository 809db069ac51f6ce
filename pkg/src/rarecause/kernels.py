"""Backend selection and the weighted dominance-sum driver.

Set ``RARECAUSE_BACKEND=numpy`` to force the pure-numpy kernels; the default
is numba when it imports.  ``BACKEND`` reports the active choice.
"""
import os

import numpy as np

from . import _kernels_numpy

_requested = os.environ.get("RARECAUSE_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"RARECAUSE_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

_kernels_numba = None
if _requested == "numba":
    try:
        from . import _kernels_numba
    except ImportError:  # pragma: no cover - numba missing
        _kernels_numba = None

BACKEND = "numba" if _kernels_numba is not None else "numpy"
CONSTANT = _kernels_numpy.CONSTANT
THRESHOLD = _kernels_numpy.THRESHOLD

# pairs below which a leaf is solved by brute force
_LEAF_PAIRS = 1 << 14


def get_kernels(backend=None):
    backend = backend or BACKEND
    if backend == "numba":
        if _kernels_numba is None:
            from . import _kernels_numba as mod
            return mod
        return _kernels_numba
    if backend == "numpy":
        return _kernels_numpy
    raise ValueError(f"unknown backend {backend!r}")


def single_link(*args, backend=None):
    return get_kernels(backend).single_link(*args)


def multi_link(*args, backend=None):
    return get_kernels(backend).multi_link(*args)


def _compress(col):
    _, inv = np.unique(col, return_inverse=True)
    return inv.ravel().astype(np.int64)


def dominance_sum(points, weights, queries, backend=None):
    """Weighted count of points dominated by each query.

    ``out[g] = sum(weights[p] for p if points[p] <= queries[g] componentwise)``.
    ``points`` and ``queries`` are integer rank arrays of shape (M, n) and
    (G, n).  For n = 1 this is a bincount and a cumulative sum.  For n >= 2 a
    divide-and-conquer on the leading coordinate peels off one dimension at
    a time; the numba backend finishes two-dimensional subproblems with a
    Fenwick sweep, the numpy backend reduces all the way to n = 1.
    """
    points = np.ascontiguousarray(points, dtype=np.int64)
    queries = np.ascontiguousarray(queries, dtype=np.int64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    if points.ndim != 2 or queries.ndim != 2 or points.shape[1] != queries.shape[1]:
        raise ValueError("points and queries must be (M, n) and (G, n) with equal n")
    if points.shape[0] != weights.shape[0]:
        raise ValueError("one weight per point")
    kern = get_kernels(backend)
    out = np.zeros(queries.shape[0])
    if points.shape[0] == 0 or queries.shape[0] == 0:
        return out
    _solve(kern, points, weights, queries, np.arange(queries.shape[0]), out)
    return out


def _prefix_1d(p_col, weights, q_col):
    size = int(max(p_col.max(), q_col.max())) + 1
    csum = np.cumsum(np.bincount(p_col, weights=weights, minlength=size))
    return csum[q_col]


def _solve(kern, points, weights, queries, q_idx, out):
    """Accumulate into ``out[q_idx]`` the dominance sums of ``queries`` over ``points``."""
    n_p, dim = points.shape
    n_q = queries.shape[0]
    if n_p == 0 or n_q == 0:
        return
    if dim == 1:
        out[q_idx] += _prefix_1d(points[:, 0], weights, queries[:, 0])
        return
    if dim == 2 and kern.dominance_2d is not None:
        both = _compress(np.concatenate([points[:, 1], queries[:, 1]]))
        p2 = np.column_stack([points[:, 0], both[:n_p]])
        q2 = np.column_stack([queries[:, 0], both[n_p:]])
        out[q_idx] += kern.dominance_2d(p2, weights, q2, int(both.max()) + 1)
        return
    if n_p * n_q <= _LEAF_PAIRS:
        out[q_idx] += kern.dominance_brute(points, weights, queries)
        return

    lead_p = points[:, 0]
    lead_q = queries[:, 0]
    combined = np.concatenate([lead_p, lead_q])
    split = np.partition(combined, combined.size // 2)[combined.size // 2]
    if not (combined > split).any():
        below = combined[combined < split]
        if below.size == 0:
            # leading coordinate is constant: it never excludes a pair
            _solve(kern, points[:, 1:], weights, queries[:, 1:], q_idx, out)
            return
        split = below.max()
    p_left = lead_p <= split
    q_left = lead_q <= split
    p_right = ~p_left
    q_right = ~q_left
    # left points dominate right queries in the leading coordinate
    _solve(kern, points[p_left][:, 1:], weights[p_left], queries[q_right][:, 1:], q_idx[q_right], out)
    _solve(kern, points[p_left], weights[p_left], queries[q_left], q_idx[q_left], out)
    _solve(kern, points[p_right], weights[p_right], queries[q_right], q_idx[q_right], out)
