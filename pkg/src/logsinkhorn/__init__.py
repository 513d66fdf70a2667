"""Numerically stable entropic optimal transport on dense cost matrices.

The solver iterates dual potential updates entirely in the log domain, so
it stays finite at regularization strengths where the classical scaling
iteration over- or underflows. All reductions (sums, maxima, and
log-sum-exp) run through a fixed two-level chunked tree, which makes every
result bit-reproducible for a given configuration regardless of how the
surrounding code schedules work.
"""

from .applications import (
    Correspondence,
    RgbImage,
    barycentric_map,
    color_transfer,
    color_transfer_with_report,
    generate_rigid_pair,
    make_rgb_image,
    match_point_clouds,
    match_point_clouds_with_report,
)
from .costs import (
    generate_grid_problem,
    normalize_cost,
    squared_euclidean_cost,
)
from .errors import (
    DegenerateRange,
    DimensionMismatch,
    EmptyInput,
    EmptyView,
    FileFormatError,
    LogSinkhornError,
    NegativeOrNonFiniteEntry,
    NonFiniteInput,
    NonFiniteResult,
    ZeroRowMass,
    ZeroWeight,
)
from .estimator import SinkhornTransport
from .fileio import (
    read_correspondences,
    read_point_cloud,
    read_ppm,
    write_correspondences,
    write_point_cloud,
    write_ppm,
)
from .reduction import (
    ReductionPlan,
    log_sum_exp,
    log_sum_exp_cols,
    log_sum_exp_rows,
    reduce_max,
    reduce_max_cols,
    reduce_max_rows,
    reduce_sum,
    reduce_sum_cols,
    reduce_sum_rows,
)
from .solver import (
    contraction_rate_bound,
    kkt_residual,
    marginal_error,
    materialize_plan,
    regularized_objective,
    solve,
    solve_standard_domain,
    transport_cost,
    update_alpha,
    update_beta,
)
from .types import (
    STATUS_CONVERGED,
    STATUS_NOT_CONVERGED,
    STATUS_NUMERICAL_FAILURE,
    CostMatrix,
    DiscreteDistribution,
    DualPotentials,
    SinkhornConfig,
    SolveReport,
    TransportPlan,
    make_cost_matrix,
    make_distribution,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Correspondence",
    "CostMatrix",
    "DegenerateRange",
    "DimensionMismatch",
    "DiscreteDistribution",
    "DualPotentials",
    "EmptyInput",
    "EmptyView",
    "FileFormatError",
    "LogSinkhornError",
    "NegativeOrNonFiniteEntry",
    "NonFiniteInput",
    "NonFiniteResult",
    "ReductionPlan",
    "RgbImage",
    "STATUS_CONVERGED",
    "STATUS_NOT_CONVERGED",
    "STATUS_NUMERICAL_FAILURE",
    "SinkhornConfig",
    "SinkhornTransport",
    "SolveReport",
    "TransportPlan",
    "ZeroRowMass",
    "ZeroWeight",
    "barycentric_map",
    "color_transfer",
    "color_transfer_with_report",
    "contraction_rate_bound",
    "generate_grid_problem",
    "generate_rigid_pair",
    "kkt_residual",
    "log_sum_exp",
    "log_sum_exp_cols",
    "log_sum_exp_rows",
    "make_cost_matrix",
    "make_distribution",
    "make_rgb_image",
    "marginal_error",
    "match_point_clouds",
    "match_point_clouds_with_report",
    "materialize_plan",
    "normalize_cost",
    "read_correspondences",
    "read_point_cloud",
    "read_ppm",
    "reduce_max",
    "reduce_max_cols",
    "reduce_max_rows",
    "reduce_sum",
    "reduce_sum_cols",
    "reduce_sum_rows",
    "regularized_objective",
    "solve",
    "solve_standard_domain",
    "squared_euclidean_cost",
    "transport_cost",
    "update_alpha",
    "update_beta",
    "write_correspondences",
    "write_point_cloud",
    "write_ppm",
]
