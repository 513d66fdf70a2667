"""Core value types: distributions, cost matrices, solver configuration,
transport plans, and solve reports.

All containers are immutable after construction and safe to share read-only
across concurrent workers.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyInput,
    NegativeOrNonFiniteEntry,
    NonFiniteInput,
    ZeroWeight,
)
from .reduction import ReductionPlan

__all__ = [
    "DiscreteDistribution",
    "CostMatrix",
    "DualPotentials",
    "TransportPlan",
    "SinkhornConfig",
    "SolveReport",
    "STATUS_CONVERGED",
    "STATUS_NOT_CONVERGED",
    "STATUS_NUMERICAL_FAILURE",
    "make_distribution",
    "make_cost_matrix",
]

STATUS_CONVERGED = "converged"
STATUS_NOT_CONVERGED = "not_converged"
STATUS_NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """A strictly positive probability vector with precomputed logs.

    Attributes
    ----------
    weights : ndarray
        Normalized weights, sum 1, every entry > 0, float64.
    log_weights : ndarray
        ``log(weights)``, precomputed once so the solver never re-derives it.
    """

    weights: np.ndarray
    log_weights: np.ndarray

    @property
    def size(self):
        return self.weights.shape[0]


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """A dense, row-major, nonnegative cost matrix.

    Attributes
    ----------
    values : ndarray of shape (n, m)
        Finite nonnegative costs, float64, C-contiguous.
    value_range : float
        Cached ``max - min`` of the entries.
    """

    values: np.ndarray
    value_range: float = field(default=None)

    def __post_init__(self):
        if self.value_range is None:
            rng = float(self.values.max() - self.values.min())
            object.__setattr__(self, "value_range", rng)

    @property
    def rows(self):
        return self.values.shape[0]

    @property
    def cols(self):
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class DualPotentials:
    """The dual variables (alpha, beta) of the entropic problem."""

    alpha: np.ndarray
    beta: np.ndarray


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """A dense coupling between a source and a target distribution.

    Entries are mathematically strictly positive for entropic plans; in
    floating point, extremely small entries may underflow to zero. Row and
    column sums approximate the marginals to the tolerance the producing
    solve reports.
    """

    values: np.ndarray

    @property
    def rows(self):
        return self.values.shape[0]

    @property
    def cols(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class SinkhornConfig:
    """Solver configuration.

    Attributes
    ----------
    epsilon : float
        Entropic regularization strength, > 0.
    tolerance : float
        L1 marginal-error threshold for convergence. Default 1e-6.
    max_iterations : int
        Hard iteration cap. Default 10000.
    check_interval : int
        Convergence is tested every this many iterations. Default 10.
    chunk_width : int
        Lane count of one reduction-tree chunk. Default 32.
    group_size : int
        Sequential-lane count of the reduction tree, a multiple of
        ``chunk_width``. Default 256.
    transpose_for_beta : bool
        When true, keep a transposed copy of the cost matrix so the beta
        update reads contiguously, trading 2x cost-matrix memory for
        locality. Numerically identical either way. Default false.
    precision : str
        ``"single"`` or ``"double"``. Default single.
    """

    epsilon: float
    tolerance: float = 1e-6
    max_iterations: int = 10000
    check_interval: int = 10
    chunk_width: int = 32
    group_size: int = 256
    transpose_for_beta: bool = False
    precision: str = "single"

    def __post_init__(self):
        if not (self.epsilon > 0):
            raise ValueError("epsilon must be > 0")
        if not (self.tolerance > 0):
            raise ValueError("tolerance must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.check_interval < 1:
            raise ValueError("check_interval must be >= 1")
        if self.precision not in ("single", "double"):
            raise ValueError("precision must be 'single' or 'double'")
        # Delegates the chunk/group consistency rules.
        ReductionPlan(self.chunk_width, self.group_size)

    @property
    def dtype(self):
        return np.float32 if self.precision == "single" else np.float64

    @property
    def reduction_plan(self):
        return ReductionPlan(self.chunk_width, self.group_size)


@dataclass(frozen=True, eq=False)
class SolveReport:
    """Outcome of one solver run.

    Attributes
    ----------
    status : str
        ``"converged"`` iff the final marginal error is below tolerance;
        ``"numerical_failure"`` iff a non-finite value was detected in the
        potentials or the error; ``"not_converged"`` otherwise.
    iterations : int
        Iterations actually executed.
    final_marginal_error : float
        L1 distance between the plan's row marginal and mu at the last
        convergence check (NaN after a numerical failure).
    transport_cost : float
        Plan-weighted total cost (NaN after a numerical failure).
    error_trace : tuple of (int, float)
        (iteration, marginal error) at every convergence check performed.
    elapsed_seconds : float
        Wall time of the iteration loop, excluding problem setup.
    """

    status: str
    iterations: int
    final_marginal_error: float
    transport_cost: float
    error_trace: tuple
    elapsed_seconds: float


def make_distribution(raw):
    """Normalize a vector of strictly positive weights into a distribution.

    Parameters
    ----------
    raw : array-like of shape (n,)
        Nonempty, finite, strictly positive weights (unnormalized).

    Returns
    -------
    DiscreteDistribution

    Raises
    ------
    EmptyInput
        If ``raw`` has no entries.
    NonFiniteInput
        If any entry is NaN or infinite.
    ZeroWeight
        If any entry is zero or negative: log-domain updates require
        strictly positive weights.
    """
    w = np.asarray(raw, dtype=np.float64).reshape(-1)
    if w.size == 0:
        raise EmptyInput("distribution requires at least one weight")
    if not np.isfinite(w).all():
        raise NonFiniteInput("distribution weights must be finite")
    if (w <= 0).any():
        raise ZeroWeight("distribution weights must be strictly positive")
    weights = w / w.sum()
    if (weights == 0).any():
        raise ZeroWeight("a weight underflowed to zero after normalization")
    return DiscreteDistribution(weights=weights, log_weights=np.log(weights))


def make_cost_matrix(n, m, values):
    """Build a validated n-by-m cost matrix from flat or 2-D values.

    Raises
    ------
    DimensionMismatch
        If ``values`` does not hold exactly ``n * m`` entries.
    NegativeOrNonFiniteEntry
        If any entry is negative, NaN, or infinite.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.size != n * m:
        raise DimensionMismatch(
            f"expected {n}x{m} = {n * m} cost entries, got {v.size}"
        )
    v = np.ascontiguousarray(v.reshape(n, m))
    if not np.isfinite(v).all():
        raise NegativeOrNonFiniteEntry("cost entries must be finite")
    if (v < 0).any():
        raise NegativeOrNonFiniteEntry("cost entries must be nonnegative")
    return CostMatrix(values=v)
