"""Deterministic max / sum / log-sum-exp reductions with a fixed tree shape.

Every reduction in this package runs over a two-level tree whose shape is a
pure function of the input length and a :class:`ReductionPlan`, never of the
worker count or call context:

1. Lane fold: lane ``t`` sequentially accumulates elements ``t``, ``t + B``,
   ``t + 2B``, ... where ``B`` is ``group_size``, producing ``B`` lane
   accumulators (missing tail elements are padded with the operation's
   identity).
2. Chunk tree: the ``B`` lanes are split into ``B / chunk_width`` chunks;
   each chunk is combined by ceil-halving pairwise steps, then the chunk
   results are combined by the same halving scheme.

Because the pairing order is frozen, results are bit-identical across runs,
across processes, and across any number of concurrent callers. Parallelism
belongs one level up (rows and columns are independent); these kernels are
pure functions over read-only views.

The log-sum-exp is the standard two-pass form: a max pass, then a sum of
shifted exponentials, recomputed from the input rather than cached. The
inner sum is floored at ``1e-30`` in both precisions before the log.
"""

from dataclasses import dataclass

import numpy as np

from .errors import EmptyView

__all__ = [
    "ReductionPlan",
    "reduce_max",
    "reduce_sum",
    "log_sum_exp",
    "reduce_max_rows",
    "reduce_sum_rows",
    "log_sum_exp_rows",
    "reduce_max_cols",
    "reduce_sum_cols",
    "log_sum_exp_cols",
]

SUM_FLOOR = 1e-30
"""Lower bound applied to the shifted-exponential sum before taking its log."""


@dataclass(frozen=True)
class ReductionPlan:
    """Shape parameters of the deterministic reduction tree.

    Attributes
    ----------
    chunk_width : int
        Number of lanes combined by one ceil-halving tree. Default 32.
    group_size : int
        Number of sequential-accumulation lanes, a multiple of
        ``chunk_width``. Default 256. ``ReductionPlan(1, 1)`` degenerates
        to a flat left-to-right scan.
    """

    chunk_width: int = 32
    group_size: int = 256

    def __post_init__(self):
        if self.chunk_width < 1:
            raise ValueError("chunk_width must be >= 1")
        if self.group_size < 1 or self.group_size % self.chunk_width != 0:
            raise ValueError("group_size must be a positive multiple of chunk_width")


def _lane_fold_rows(A, B, op, identity):
    # Lane t accumulates A[:, t], A[:, t+B], ... sequentially; (R, L) -> (R, B).
    R, L = A.shape
    n_strides = -(-L // B)
    if n_strides * B != L:
        pad = np.full((R, n_strides * B - L), identity, A.dtype)
        A = np.concatenate([A, pad], axis=1)
    A = A.reshape(R, n_strides, B)
    acc = A[:, 0, :].copy()
    for k in range(1, n_strides):
        op(acc, A[:, k, :], out=acc)
    return acc


def _chunk_tree_rows(acc, w, op):
    # Ceil-halving tree within w-wide chunks, then across the chunk results.
    R, B = acc.shape
    n_chunks = B // w
    a = acc.reshape(R, n_chunks, w)
    off = w
    while off > 1:
        half = (off + 1) // 2
        lo = off - half
        if lo > 0:
            op(a[:, :, :lo], a[:, :, half:off], out=a[:, :, :lo])
        off = half
    c = np.ascontiguousarray(a[:, :, 0])
    off = n_chunks
    while off > 1:
        half = (off + 1) // 2
        lo = off - half
        if lo > 0:
            op(c[:, :lo], c[:, half:off], out=c[:, :lo])
        off = half
    return c[:, 0].copy()


def _reduce_rows(A, plan, op, identity):
    lanes = _lane_fold_rows(np.ascontiguousarray(A), plan.group_size, op, identity)
    if plan.group_size == 1:
        return lanes[:, 0].copy()
    return _chunk_tree_rows(lanes, plan.chunk_width, op)


def _lane_fold_cols(A, B, op, identity):
    # Column mirror of _lane_fold_rows, reading the array with row stride.
    L, R = A.shape
    n_strides = -(-L // B)
    if n_strides * B != L:
        pad = np.full((n_strides * B - L, R), identity, A.dtype)
        A = np.concatenate([A, pad], axis=0)
    A = A.reshape(n_strides, B, R)
    acc = A[0].copy()
    for k in range(1, n_strides):
        op(acc, A[k], out=acc)
    return acc


def _chunk_tree_cols(acc, w, op):
    B, R = acc.shape
    n_chunks = B // w
    a = acc.reshape(n_chunks, w, R)
    off = w
    while off > 1:
        half = (off + 1) // 2
        lo = off - half
        if lo > 0:
            op(a[:, :lo, :], a[:, half:off, :], out=a[:, :lo, :])
        off = half
    c = np.ascontiguousarray(a[:, 0, :])
    off = n_chunks
    while off > 1:
        half = (off + 1) // 2
        lo = off - half
        if lo > 0:
            op(c[:lo], c[half:off], out=c[:lo])
        off = half
    return c[0].copy()


def _reduce_cols(A, plan, op, identity):
    lanes = _lane_fold_cols(A, plan.group_size, op, identity)
    if plan.group_size == 1:
        return lanes[0].copy()
    return _chunk_tree_cols(lanes, plan.chunk_width, op)


def reduce_max_rows(A, plan):
    """Per-row maximum of a 2-D array over the deterministic tree."""
    return _reduce_rows(A, plan, np.maximum, -np.inf)


def reduce_sum_rows(A, plan):
    """Per-row sum of a 2-D array over the deterministic tree."""
    return _reduce_rows(A, plan, np.add, 0.0)


def reduce_max_cols(A, plan):
    """Per-column maximum, reading the array along its strided axis."""
    return _reduce_cols(A, plan, np.maximum, -np.inf)


def reduce_sum_cols(A, plan):
    """Per-column sum, reading the array along its strided axis."""
    return _reduce_cols(A, plan, np.add, 0.0)


def log_sum_exp_rows(A, plan, workspace=None):
    """Per-row ``log(sum(exp(A[i, :])))``, max-shifted, over the fixed tree.

    Rows whose entries are all ``-inf`` yield ``-inf`` (an empty sum in log
    space); the caller decides whether that is an error. Finite entries mixed
    with ``-inf`` are handled exactly: ``exp(-inf) = 0`` contributes nothing.

    Parameters
    ----------
    A : ndarray of shape (R, L)
        Input rows; entries real or ``-inf``.
    plan : ReductionPlan
        Tree shape.
    workspace : ndarray of shape (R, L), optional
        Scratch buffer for the shifted exponentials, reused across calls by
        the solver to avoid per-iteration allocation.
    """
    M = reduce_max_rows(A, plan)
    empty = ~np.isfinite(M)
    if empty.any():
        # Avoid (-inf) - (-inf) = NaN in the shift for all-(-inf) rows.
        M = np.where(empty, A.dtype.type(0.0), M)
    D = np.subtract(A, M[:, None], out=workspace)
    np.exp(D, out=D)
    S = reduce_sum_rows(D, plan)
    np.maximum(S, A.dtype.type(SUM_FLOOR), out=S)
    out = M + np.log(S)
    if empty.any():
        out[empty] = -np.inf
    return out


def log_sum_exp_cols(A, plan, workspace=None):
    """Per-column mirror of :func:`log_sum_exp_rows` on the strided axis."""
    M = reduce_max_cols(A, plan)
    empty = ~np.isfinite(M)
    if empty.any():
        M = np.where(empty, A.dtype.type(0.0), M)
    D = np.subtract(A, M[None, :], out=workspace)
    np.exp(D, out=D)
    S = reduce_sum_cols(D, plan)
    np.maximum(S, A.dtype.type(SUM_FLOOR), out=S)
    out = M + np.log(S)
    if empty.any():
        out[empty] = -np.inf
    return out


def _as_view_1d(view):
    v = np.asarray(view)
    if v.ndim != 1:
        v = v.reshape(-1)
    if v.size == 0:
        raise EmptyView("reduction over an empty view")
    return v


def reduce_max(view, plan=ReductionPlan()):
    """Maximum of a 1-D view. Entries may be real or ``-inf``.

    Bit-identical across repeated calls and worker configurations by
    construction; for max the tree result equals a sequential scan exactly.
    """
    v = _as_view_1d(view)
    return reduce_max_rows(v[None, :], plan)[0]

def reduce_sum(view, plan=ReductionPlan()):
    """Fixed-tree sum of a 1-D view of finite entries.

    Deterministic for a fixed plan; may differ from a left-to-right
    sequential sum by rounding only.
    """
    v = _as_view_1d(view)
    return reduce_sum_rows(v[None, :], plan)[0]

def log_sum_exp(view, plan=ReductionPlan()):
    """Stable ``log(sum(exp(view)))`` of a 1-D view.

    Returns ``M + log(sum(exp(x - M)))`` with ``M = reduce_max(view)`` and
    the inner sum floored at ``1e-30``. The result is finite whenever at
    least one entry is finite; if every entry is ``-inf`` the sentinel
    ``-inf`` is returned for the caller to flag.
    """
    v = _as_view_1d(view)
    return log_sum_exp_rows(np.ascontiguousarray(v)[None, :], plan)[0]
