"""Demonstration pipelines: image color transfer and point-cloud matching.

Both pipelines run the solver in double precision internally regardless of
any caller-facing precision setting: their costs are raw squared distances
whose dual potentials sit at scales where single-precision marginal errors
cannot reach the default tolerance, and neither pipeline is a
stability-study subject.
"""

from dataclasses import dataclass

import numpy as np

from .costs import as_points, squared_euclidean_cost
from .errors import DimensionMismatch, NonFiniteResult, ZeroRowMass
from .solver import materialize_plan, solve
from .types import (
    STATUS_NUMERICAL_FAILURE,
    CostMatrix,
    SinkhornConfig,
    make_distribution,
)

__all__ = [
    "RgbImage",
    "Correspondence",
    "make_rgb_image",
    "barycentric_map",
    "color_transfer",
    "color_transfer_with_report",
    "match_point_clouds",
    "match_point_clouds_with_report",
    "generate_rigid_pair",
]


@dataclass(frozen=True, eq=False)
class RgbImage:
    """An RGB image with unit-interval float channels.

    Attributes
    ----------
    width, height : int
    pixels : ndarray of shape (height * width, 3)
        Row-major RGB triples, each channel in [0, 1].
    """

    width: int
    height: int
    pixels: np.ndarray


@dataclass(frozen=True)
class Correspondence:
    """One source-to-target match extracted from a transport plan.

    Attributes
    ----------
    source_index, target_index : int
    weight : float
        The plan mass at the matched cell.
    """

    source_index: int
    target_index: int
    weight: float


def make_rgb_image(width, height, pixels):
    """Build an RgbImage, clamping channels into [0, 1]."""
    p = np.asarray(pixels, dtype=np.float64).reshape(height * width, 3)
    return RgbImage(width=width, height=height, pixels=np.clip(p, 0.0, 1.0))


def barycentric_map(plan, targets):
    """Map each plan row to its mass-weighted average target point.

    ``mapped_i = (sum_j pi_ij * target_j) / (sum_j pi_ij)``. Every mapped
    point lies in the convex hull of the targets.

    Raises
    ------
    ZeroRowMass
        If a plan row has no mass. Entropic plans are strictly positive, so
        this only triggers on hand-built degenerate plans.
    """
    T = as_points(targets)
    P = plan.values
    if P.shape[1] != T.shape[0]:
        raise DimensionMismatch(
            f"plan has {P.shape[1]} columns but {T.shape[0]} targets given"
        )
    denom = P.sum(axis=1)
    if (denom == 0).any():
        raise ZeroRowMass("a transport plan row has zero total mass")
    num = (P[:, :, None] * T[None, :, :]).sum(axis=1)
    return num / denom[:, None]


def _solve_double(cost, mu, nu, eps):
    config = SinkhornConfig(epsilon=eps, precision="double")
    report, potentials = solve(cost, mu, nu, config)
    if report.status == STATUS_NUMERICAL_FAILURE:
        raise NonFiniteResult(
            f"solver reported numerical_failure at eps={eps}"
        )
    return report, potentials


def color_transfer(source, target, sample_count, eps, seed):
    """Transfer the target image's color palette onto the source image.

    Samples ``sample_count`` pixels uniformly without replacement from each
    image (seeded), solves entropic OT between the two RGB samples under
    squared Euclidean cost with uniform weights, barycentric-maps the source
    samples, then recolors every full-resolution source pixel by the mapped
    color of its nearest source sample in RGB (ties to the lowest sample
    index). Channels are clamped to [0, 1].

    Returns a new RgbImage of the source's dimensions; a solver numerical
    failure raises.
    """
    image, _ = color_transfer_with_report(source, target, sample_count, eps, seed)
    return image


def color_transfer_with_report(source, target, sample_count, eps, seed):
    """:func:`color_transfer` variant that also returns the SolveReport."""
    n_src = source.pixels.shape[0]
    n_tgt = target.pixels.shape[0]
    if not (1 <= sample_count <= min(n_src, n_tgt)):
        raise ValueError(
            "sample_count must be >= 1 and <= both images' pixel counts"
        )
    rng = np.random.Generator(np.random.PCG64(seed))
    src_idx = rng.choice(n_src, size=sample_count, replace=False)
    tgt_idx = rng.choice(n_tgt, size=sample_count, replace=False)
    src_samples = source.pixels[src_idx]
    tgt_samples = target.pixels[tgt_idx]

    cost = squared_euclidean_cost(src_samples, tgt_samples)
    uniform = make_distribution(np.ones(sample_count))
    report, potentials = _solve_double(cost, uniform, uniform, eps)
    plan = materialize_plan(
        cost, uniform, uniform, potentials.alpha, potentials.beta, eps
    )
    mapped = barycentric_map(plan, tgt_samples)

    out = np.empty_like(source.pixels)
    block = 2048
    for start in range(0, n_src, block):
        px = source.pixels[start : start + block]
        d = px[:, None, :] - src_samples[None, :, :]
        nearest = np.argmin((d * d).sum(axis=2), axis=1)
        out[start : start + block] = mapped[nearest]
    image = RgbImage(
        width=source.width,
        height=source.height,
        pixels=np.clip(out, 0.0, 1.0),
    )
    return image, report


def match_point_clouds(X, Y, eps):
    """Extract per-source correspondences from an entropic plan.

    Solves OT between the clouds with uniform weights and squared Euclidean
    cost (rescaled so the largest cost is 1, making ``eps`` comparable
    across problems), then emits for each source index the argmax plan
    entry in its row, ties to the lowest target index, with the plan mass
    as weight.
    """
    pairs, _ = match_point_clouds_with_report(X, Y, eps)
    return pairs


def match_point_clouds_with_report(X, Y, eps):
    """:func:`match_point_clouds` variant that also returns the SolveReport."""
    X = as_points(X)
    Y = as_points(Y)
    if X.shape[1] != Y.shape[1]:
        raise DimensionMismatch(
            f"point dimensions differ: {X.shape[1]} vs {Y.shape[1]}"
        )
    cost = squared_euclidean_cost(X, Y)
    if cost.value_range > 0:
        cmax = cost.values.max()
        cost = CostMatrix(values=np.ascontiguousarray(cost.values / cmax))
    mu = make_distribution(np.ones(X.shape[0]))
    nu = make_distribution(np.ones(Y.shape[0]))
    report, potentials = _solve_double(cost, mu, nu, eps)
    plan = materialize_plan(
        cost, mu, nu, potentials.alpha, potentials.beta, eps
    )
    P = plan.values
    best = P.argmax(axis=1)
    pairs = [
        Correspondence(
            source_index=int(i),
            target_index=int(j),
            weight=float(P[i, j]),
        )
        for i, j in enumerate(best)
    ]
    return pairs, report


def _rotation_matrix(dimension, angle):
    c, s = np.cos(angle), np.sin(angle)
    if dimension == 2:
        return np.array([[c, -s], [s, c]])
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def generate_rigid_pair(n, dimension, rotation_angle, translation, noise_sigma, seed):
    """Seeded source cloud, rigidly moved noisy target, and the answer key.

    The source is uniform in the unit cube. The target applies a rotation
    (about the z axis in 3-D, in-plane in 2-D), adds the translation, adds
    isotropic Gaussian noise of the given sigma, and is then shuffled by a
    seeded permutation so matching is nontrivial. The returned permutation
    maps source order to shuffled target order: source  ``i`` truly
    corresponds to target ``perm[i]``.

    Returns
    -------
    (X, Y, perm)
        Source points (n, d), shuffled target points (n, d), ground-truth
        permutation (n,).
    """
    if dimension not in (2, 3):
        raise ValueError("dimension must be 2 or 3")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    t = np.asarray(translation, dtype=np.float64).reshape(-1)
    if t.shape[0] != dimension:
        raise DimensionMismatch(
            f"translation has {t.shape[0]} components, expected {dimension}"
        )
    rng = np.random.Generator(np.random.PCG64(seed))
    X = rng.uniform(0.0, 1.0, (n, dimension))
    Y = X @ _rotation_matrix(dimension, rotation_angle).T + t
    Y = Y + rng.normal(0.0, noise_sigma, (n, dimension))
    perm = rng.permutation(n)
    shuffled = np.empty_like(Y)
    shuffled[perm] = Y
    return X, shuffled, perm
