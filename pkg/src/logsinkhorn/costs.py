"""Cost-matrix construction and the seeded random problem generator."""

import warnings

import numpy as np

from .errors import DegenerateRange, DimensionMismatch, EmptyInput, NonFiniteInput
from .types import CostMatrix, make_distribution

__all__ = [
    "as_points",
    "squared_euclidean_cost",
    "normalize_cost",
    "generate_grid_problem",
]


def as_points(coords):
    """Validate a point cloud as an (n, d) float64 array.

    Accepts any array-like; a 1-D input is treated as n points in one
    dimension.
    """
    X = np.asarray(coords, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DimensionMismatch(f"point cloud must be 2-D, got shape {X.shape}")
    if X.size == 0:
        raise EmptyInput("point cloud is empty")
    if not np.isfinite(X).all():
        raise NonFiniteInput("point coordinates must be finite")
    return np.ascontiguousarray(X)


def squared_euclidean_cost(X, Y):
    """Pairwise squared Euclidean distances as a cost matrix.

    ``C[i, j] = sum_k (X[i, k] - Y[j, k])**2``, computed by direct broadcast
    so the summation order over coordinates is fixed.
    """
    X = as_points(X)
    Y = as_points(Y)
    if X.shape[1] != Y.shape[1]:
        raise DimensionMismatch(
            f"point dimensions differ: {X.shape[1]} vs {Y.shape[1]}"
        )
    diff = X[:, None, :] - Y[None, :, :]
    values = np.ascontiguousarray((diff * diff).sum(axis=2))
    return CostMatrix(values=values)


def normalize_cost(cost, target_max):
    """Affinely rescale a cost matrix to min 0 and max ``target_max``.

    A constant matrix has no range to stretch; it rescales to all zeros and
    a :class:`DegenerateRange` warning is issued.
    """
    if not (target_max > 0):
        raise ValueError("target_max must be > 0")
    v = cost.values
    if cost.value_range == 0:
        warnings.warn(
            "constant cost matrix rescaled to all zeros", DegenerateRange,
            stacklevel=2,
        )
        return CostMatrix(values=np.zeros_like(v), value_range=0.0)
    vmin = v.min()
    scaled = (v - vmin) * (target_max / cost.value_range)
    return CostMatrix(values=np.ascontiguousarray(scaled))


def generate_grid_problem(n, m, seed):
    """Seeded random transport problem on uniform 1-D grids.

    Grid points are ``x_i = i / (n - 1)`` and ``y_j = j / (m - 1)`` (a
    single point sits at 0). The cost is squared Euclidean distance on the
    line, divided by its maximum so costs span [0, 1]. Weights follow a
    seeded random law: one Gaussian bump per side, with center drawn
    uniform(0.2, 0.8), width uniform(0.05, 0.1), a 1e-4 mass floor, and
    per-point jitter uniform(0.5, 1.5), then normalized. The bump geometry
    is drawn before the jitter, so the large-scale shape of a seed's problem
    is independent of n and m.

    The separated bumps give the problem a genuine transport structure:
    potentials span a range that stresses single-precision arithmetic the
    way a benchmark should, rather than the near-flat potentials of i.i.d.
    weights.

    Identical seeds produce bit-identical problems (PCG64 generator with a
    fixed draw order).

    Returns
    -------
    (DiscreteDistribution, DiscreteDistribution, CostMatrix)
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    centers = rng.uniform(0.2, 0.8, 2)
    widths = rng.uniform(0.05, 0.1, 2)
    x = np.arange(n) / (n - 1) if n > 1 else np.zeros(1)
    y = np.arange(m) / (m - 1) if m > 1 else np.zeros(1)
    mu = np.exp(-0.5 * ((x - centers[0]) / widths[0]) ** 2) + 1e-4
    mu *= rng.uniform(0.5, 1.5, n)
    nu = np.exp(-0.5 * ((y - centers[1]) / widths[1]) ** 2) + 1e-4
    nu *= rng.uniform(0.5, 1.5, m)
    C = (x[:, None] - y[None, :]) ** 2
    cmax = C.max()
    if cmax > 0:
        C /= cmax
    return (
        make_distribution(mu),
        make_distribution(nu),
        CostMatrix(values=np.ascontiguousarray(C)),
    )
