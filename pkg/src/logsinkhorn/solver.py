"""Log-domain Sinkhorn iteration, its fragile standard-domain twin, and
plan diagnostics.

The log-domain solver alternates dual updates

    alpha_i = -eps * LSE_j((beta_j - C_ij) / eps + log nu_j)
    beta_j  = -eps * LSE_i((alpha_i - C_ij) / eps + log mu_i)

from zero potentials, checking the L1 row-marginal error every
``check_interval`` iterations. All reductions run on the deterministic tree
from :mod:`logsinkhorn.reduction`, so a solve is bit-reproducible for a
fixed configuration regardless of how callers schedule it.

The arithmetic order inside the update is part of the determinism contract
and matches the reduction kernels' two-pass structure: the shifted argument
is built as ``(beta_j - C_ij) * (1 / eps) + log nu_j`` with precomputed
``1 / eps``, then max and sum passes both read that buffer.

The standard-domain variant materializes the Gibbs kernel
``K = exp(-C / eps)`` and iterates the scaling vectors ``u, v`` without any
stabilization, on purpose: its single-precision failure at small eps is a
measured result, not a bug.
"""

import time

import numpy as np

from .errors import DimensionMismatch, NonFiniteResult
from .reduction import (
    ReductionPlan,
    log_sum_exp_cols,
    log_sum_exp_rows,
    reduce_sum_cols,
    reduce_sum_rows,
)
from .types import (
    STATUS_CONVERGED,
    STATUS_NOT_CONVERGED,
    STATUS_NUMERICAL_FAILURE,
    DualPotentials,
    SolveReport,
    TransportPlan,
)

__all__ = [
    "update_alpha",
    "update_beta",
    "marginal_error",
    "transport_cost",
    "solve",
    "solve_standard_domain",
    "materialize_plan",
    "kkt_residual",
    "regularized_objective",
    "contraction_rate_bound",
]


def _float_dtype(*arrays):
    for a in arrays:
        dt = np.asarray(a).dtype
        if dt in (np.float32, np.float64):
            return np.dtype(dt)
    return np.dtype(np.float64)


def _check_dims(cost, mu, nu):
    if cost.rows != mu.size or cost.cols != nu.size:
        raise DimensionMismatch(
            f"cost is {cost.rows}x{cost.cols} but distributions have "
            f"{mu.size} and {nu.size} weights"
        )


def _alpha_step(C, log_nu, beta, inv_eps, neg_eps, plan, T, E):
    np.subtract(beta[None, :], C, out=T)
    np.multiply(T, inv_eps, out=T)
    np.add(T, log_nu[None, :], out=T)
    return neg_eps * log_sum_exp_rows(T, plan, workspace=E)


def _beta_step_strided(C, log_mu, alpha, inv_eps, neg_eps, plan, T, E):
    np.subtract(alpha[:, None], C, out=T)
    np.multiply(T, inv_eps, out=T)
    np.add(T, log_mu[:, None], out=T)
    return neg_eps * log_sum_exp_cols(T, plan, workspace=E)


def _beta_step_transposed(CT, log_mu, alpha, inv_eps, neg_eps, plan, TT, ET):
    np.subtract(alpha[None, :], CT, out=TT)
    np.multiply(TT, inv_eps, out=TT)
    np.add(TT, log_mu[None, :], out=TT)
    return neg_eps * log_sum_exp_rows(TT, plan, workspace=ET)


def _marginal_error(C, mu_d, log_mu, log_nu, alpha, beta, inv_eps, plan, T, E):
    np.add(alpha[:, None], beta[None, :], out=T)
    np.subtract(T, C, out=T)
    np.multiply(T, inv_eps, out=T)
    np.add(T, log_nu[None, :], out=T)
    L = log_sum_exp_rows(T, plan, workspace=E)
    r = np.exp(log_mu + L)
    return reduce_sum_rows(np.abs(r - mu_d)[None, :], plan)[0]


def _transport_cost(C, log_mu, log_nu, alpha, beta, inv_eps, plan):
    Z = alpha[:, None] + beta[None, :]
    Z -= C
    Z *= inv_eps
    Z += log_mu[:, None]
    Z += log_nu[None, :]
    P = np.exp(Z)
    rows = reduce_sum_rows(C * P, plan)
    return float(reduce_sum_rows(rows[None, :], plan)[0])


def update_alpha(cost, nu, beta, eps, plan=ReductionPlan()):
    """One alpha half-step: row-wise stabilized LSE against fixed beta.

    Works in the floating dtype of ``beta`` (float64 if ``beta`` is not a
    float array). The result satisfies the row marginal constraint exactly
    at the fixed point; the solver detects non-finite outcomes at its
    checkpoints rather than scanning here.
    """
    beta = np.asarray(beta)
    dt = _float_dtype(beta)
    C = np.ascontiguousarray(cost.values, dtype=dt)
    n, m = C.shape
    T = np.empty((n, m), dt)
    return _alpha_step(
        C,
        nu.log_weights.astype(dt),
        beta.astype(dt),
        dt.type(1.0) / dt.type(eps),
        -dt.type(eps),
        plan,
        T,
        np.empty((n, m), dt),
    )


def update_beta(cost, mu, alpha, eps, plan=ReductionPlan(), transposed_cost=None):
    """One beta half-step, the column mirror of :func:`update_alpha`.

    Reads the cost matrix along its strided axis by default. Passing a
    precomputed ``transposed_cost`` (the m-by-n contiguous transpose, see
    ``SinkhornConfig.transpose_for_beta``) switches to the contiguous path;
    both paths run the same reduction tree and return bit-identical values.
    """
    alpha = np.asarray(alpha)
    dt = _float_dtype(alpha)
    inv_eps = dt.type(1.0) / dt.type(eps)
    neg_eps = -dt.type(eps)
    log_mu = mu.log_weights.astype(dt)
    if transposed_cost is not None:
        CT = np.ascontiguousarray(transposed_cost, dtype=dt)
        m, n = CT.shape
        TT = np.empty((m, n), dt)
        return _beta_step_transposed(
            CT, log_mu, alpha.astype(dt), inv_eps, neg_eps, plan,
            TT, np.empty((m, n), dt),
        )
    C = np.ascontiguousarray(cost.values, dtype=dt)
    n, m = C.shape
    T = np.empty((n, m), dt)
    return _beta_step_strided(
        C,
        log_mu,
        alpha.astype(dt),
        inv_eps,
        neg_eps,
        plan,
        T,
        np.empty((n, m), dt),
    )


def marginal_error(cost, mu, nu, alpha, beta, eps, plan=ReductionPlan()):
    """L1 distance between the plan's row marginal and mu.

    Recomputes ``log r_i = log mu_i + LSE_j((alpha_i + beta_j - C_ij) / eps
    + log nu_j)`` through the same kernel path as the updates and returns
    ``sum_i |exp(log r_i) - mu_i|``. Non-finite results are returned as-is;
    the solver maps them to a failure status.
    """
    alpha = np.asarray(alpha)
    beta = np.asarray(beta)
    dt = _float_dtype(alpha, beta)
    C = np.ascontiguousarray(cost.values, dtype=dt)
    n, m = C.shape
    T = np.empty((n, m), dt)
    return float(
        _marginal_error(
            C,
            mu.weights.astype(dt),
            mu.log_weights.astype(dt),
            nu.log_weights.astype(dt),
            alpha.astype(dt),
            beta.astype(dt),
            dt.type(1.0) / dt.type(eps),
            plan,
            T,
            np.empty((n, m), dt),
        )
    )


def transport_cost(cost, mu, nu, alpha, beta, eps, plan=ReductionPlan()):
    """Plan-weighted total cost, accumulated on the deterministic tree.

    ``sum_ij C_ij * exp((alpha_i + beta_j - C_ij) / eps + log mu_i +
    log nu_j)``, reduced per row and then across the row results.
    """
    alpha = np.asarray(alpha)
    beta = np.asarray(beta)
    dt = _float_dtype(alpha, beta)
    C = np.ascontiguousarray(cost.values, dtype=dt)
    return _transport_cost(
        C,
        mu.log_weights.astype(dt),
        nu.log_weights.astype(dt),
        alpha.astype(dt),
        beta.astype(dt),
        dt.type(1.0) / dt.type(eps),
        plan,
    )


def solve(cost, mu, nu, config):
    """Run the log-domain Sinkhorn loop from zero potentials.

    Alternates alpha and beta updates (alpha first, beta sees the fresh
    alpha). Every ``config.check_interval`` iterations the potentials are
    checked for finiteness and the marginal error is evaluated; the loop
    stops on error < tolerance (converged), on a non-finite value
    (numerical_failure), or at ``max_iterations`` (not_converged, after one
    final error evaluation if the cap is not itself a checkpoint, so that
    status and final error always agree).

    Returns
    -------
    (SolveReport, DualPotentials)
    """
    _check_dims(cost, mu, nu)
    dt = np.dtype(config.dtype)
    plan = config.reduction_plan
    eps = config.epsilon
    tol = config.tolerance
    check = config.check_interval
    K = config.max_iterations

    C = np.ascontiguousarray(cost.values, dtype=dt)
    n, m = C.shape
    CT = np.ascontiguousarray(C.T) if config.transpose_for_beta else None
    log_mu = mu.log_weights.astype(dt)
    log_nu = nu.log_weights.astype(dt)
    mu_d = mu.weights.astype(dt)
    inv_eps = dt.type(1.0) / dt.type(eps)
    neg_eps = -dt.type(eps)

    alpha = np.zeros(n, dt)
    beta = np.zeros(m, dt)
    T = np.empty((n, m), dt)
    E = np.empty((n, m), dt)
    if config.transpose_for_beta:
        TT = np.empty((m, n), dt)
        ET = np.empty((m, n), dt)

    trace = []
    status = STATUS_NOT_CONVERGED
    err = np.inf
    it = 0
    t0 = time.perf_counter()
    for k in range(1, K + 1):
        alpha = _alpha_step(C, log_nu, beta, inv_eps, neg_eps, plan, T, E)
        if config.transpose_for_beta:
            beta = _beta_step_transposed(
                CT, log_mu, alpha, inv_eps, neg_eps, plan, TT, ET
            )
        else:
            beta = _beta_step_strided(
                C, log_mu, alpha, inv_eps, neg_eps, plan, T, E
            )
        it = k
        if k % check == 0:
            if not (np.isfinite(alpha).all() and np.isfinite(beta).all()):
                status = STATUS_NUMERICAL_FAILURE
                err = np.nan
                break
            err = _marginal_error(
                C, mu_d, log_mu, log_nu, alpha, beta, inv_eps, plan, T, E
            )
            trace.append((k, float(err)))
            if not np.isfinite(err):
                status = STATUS_NUMERICAL_FAILURE
                break
            if err < tol:
                status = STATUS_CONVERGED
                break
    else:
        # Cap reached between checkpoints: evaluate once more so the
        # converged-iff-below-tolerance invariant holds at the cap too.
        if it % check != 0:
            if np.isfinite(alpha).all() and np.isfinite(beta).all():
                err = _marginal_error(
                    C, mu_d, log_mu, log_nu, alpha, beta, inv_eps, plan, T, E
                )
                trace.append((it, float(err)))
                if not np.isfinite(err):
                    status = STATUS_NUMERICAL_FAILURE
                elif err < tol:
                    status = STATUS_CONVERGED
            else:
                status = STATUS_NUMERICAL_FAILURE
                err = np.nan

    if status == STATUS_NUMERICAL_FAILURE:
        cost_value = np.nan
    else:
        cost_value = _transport_cost(
            C, log_mu, log_nu, alpha, beta, inv_eps, plan
        )
        if not np.isfinite(cost_value):
            status = STATUS_NUMERICAL_FAILURE
            cost_value = np.nan
    elapsed = time.perf_counter() - t0

    report = SolveReport(
        status=status,
        iterations=it,
        final_marginal_error=float(err),
        transport_cost=float(cost_value),
        error_trace=tuple(trace),
        elapsed_seconds=elapsed,
    )
    return report, DualPotentials(alpha=alpha, beta=beta)


def solve_standard_domain(cost, mu, nu, config):
    """Standard-domain Sinkhorn on the materialized Gibbs kernel.

    Iterates ``u = mu / (K v)`` and ``v = nu / (K^T u)`` with
    ``K = exp(-C / eps)``, deliberately unguarded: overflow, underflow, and
    division by zero propagate and are detected at the next checkpoint as
    numerical_failure. Matvecs run on the same deterministic reduction tree
    as the log-domain path.

    Returns
    -------
    (SolveReport, u, v)
        Scaling vectors in the configured precision.
    """
    _check_dims(cost, mu, nu)
    dt = np.dtype(config.dtype)
    plan = config.reduction_plan
    tol = config.tolerance
    check = config.check_interval
    K = config.max_iterations

    C = np.ascontiguousarray(cost.values, dtype=dt)
    with np.errstate(all="ignore"):
        Km = np.exp(-C / dt.type(config.epsilon))
    mu_d = mu.weights.astype(dt)
    nu_d = nu.weights.astype(dt)
    u = np.ones_like(mu_d)
    v = np.ones_like(nu_d)

    trace = []
    status = STATUS_NOT_CONVERGED
    err = np.inf
    it = 0
    t0 = time.perf_counter()
    with np.errstate(all="ignore"):
        for k in range(1, K + 1):
            Kv = reduce_sum_rows(Km * v[None, :], plan)
            u = mu_d / Kv
            Ktu = reduce_sum_cols(Km * u[:, None], plan)
            v = nu_d / Ktu
            it = k
            if k % check == 0:
                if not (np.isfinite(u).all() and np.isfinite(v).all()):
                    status = STATUS_NUMERICAL_FAILURE
                    err = np.nan
                    break
                Kv = reduce_sum_rows(Km * v[None, :], plan)
                r = u * Kv
                err = reduce_sum_rows(np.abs(r - mu_d)[None, :], plan)[0]
                trace.append((k, float(err)))
                if not np.isfinite(err):
                    status = STATUS_NUMERICAL_FAILURE
                    break
                if err < tol:
                    status = STATUS_CONVERGED
                    break
        else:
            if it % check != 0:
                if np.isfinite(u).all() and np.isfinite(v).all():
                    Kv = reduce_sum_rows(Km * v[None, :], plan)
                    r = u * Kv
                    err = reduce_sum_rows(np.abs(r - mu_d)[None, :], plan)[0]
                    trace.append((it, float(err)))
                    if not np.isfinite(err):
                        status = STATUS_NUMERICAL_FAILURE
                    elif err < tol:
                        status = STATUS_CONVERGED
                else:
                    status = STATUS_NUMERICAL_FAILURE
                    err = np.nan

        if status == STATUS_NUMERICAL_FAILURE:
            cost_value = np.nan
        else:
            plan_values = u[:, None] * Km * v[None, :]
            cost_value = float(
                reduce_sum_rows((C * plan_values).reshape(1, -1), plan)[0]
            )
            if not np.isfinite(cost_value):
                status = STATUS_NUMERICAL_FAILURE
                cost_value = np.nan
    elapsed = time.perf_counter() - t0

    report = SolveReport(
        status=status,
        iterations=it,
        final_marginal_error=float(err),
        transport_cost=float(cost_value),
        error_trace=tuple(trace),
        elapsed_seconds=elapsed,
    )
    return report, u, v


def materialize_plan(cost, mu, nu, alpha, beta, eps):
    """Materialize the dense coupling from dual potentials.

    ``pi_ij = mu_i nu_j exp((alpha_i + beta_j - C_ij) / eps)``, assembled in
    log space and exponentiated once. Allocates the full n-by-m output.

    Raises
    ------
    NonFiniteResult
        If any plan entry is NaN or infinite.
    """
    alpha = np.asarray(alpha)
    beta = np.asarray(beta)
    dt = _float_dtype(alpha, beta)
    C = np.ascontiguousarray(cost.values, dtype=dt)
    inv_eps = dt.type(1.0) / dt.type(eps)
    Z = alpha.astype(dt)[:, None] + beta.astype(dt)[None, :]
    Z -= C
    Z *= inv_eps
    Z += mu.log_weights.astype(dt)[:, None]
    Z += nu.log_weights.astype(dt)[None, :]
    values = np.exp(Z)
    if not np.isfinite(values).all():
        raise NonFiniteResult("transport plan contains non-finite entries")
    return TransportPlan(values=values)


def kkt_residual(cost, mu, nu, plan, alpha, beta, eps):
    """Max stationarity violation of a plan against dual potentials.

    Evaluates ``|C_ij + eps * ln(pi_ij / (mu_i nu_j)) - alpha_i - beta_j|``
    and returns the maximum. The expression is identically zero for any plan
    materialized from ``(alpha, beta)``, up to rounding.

    Entries below the dtype's smallest normal number are excluded: such
    values carry too few significand bits (or none, after underflow to
    zero) for their logarithm to be meaningful, so they cannot witness a
    stationarity violation at working precision.
    """
    P = plan.values
    dt = P.dtype if P.dtype in (np.float32, np.float64) else np.dtype(np.float64)
    C = cost.values.astype(dt)
    mu_d = mu.weights.astype(dt)
    nu_d = nu.weights.astype(dt)
    mask = P >= np.finfo(dt).tiny
    if not mask.any():
        return 0.0
    with np.errstate(divide="ignore"):
        ratio = np.log(P.astype(dt) / (mu_d[:, None] * nu_d[None, :]))
    resid = C + dt.type(eps) * ratio
    resid -= np.asarray(alpha).astype(dt)[:, None]
    resid -= np.asarray(beta).astype(dt)[None, :]
    return float(np.abs(resid[mask]).max())


def regularized_objective(cost, mu, nu, plan, eps):
    """Entropic objective ``<C, pi> + eps * KL(pi | mu x nu)`` of a plan.

    The KL term is ``sum_ij pi_ij (ln(pi_ij / (mu_i nu_j)) - 1) + 1``.
    Entries that underflowed to zero contribute their limit value 0. A
    diagnostic, not a solver path: sums are plain vectorized reductions.
    """
    P = plan.values.astype(np.float64)
    C = cost.values.astype(np.float64)
    outer = mu.weights[:, None] * nu.weights[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(P > 0, P * (np.log(P / outer) - 1.0), 0.0)
    kl = terms.sum() + 1.0
    return float((C * P).sum() + eps * kl)


def contraction_rate_bound(R, eps):
    """Published per-iteration contraction factors for cost radius R.

    Returns the pair ``(exp(-2 R / eps), tanh(R / (4 eps))**2)``. The two
    forms disagree as eps shrinks (the first tends to 0, the second to 1);
    both are exposed as diagnostics and neither is asserted against observed
    decay, which is far faster in practice at moderate eps.
    """
    if R < 0:
        raise ValueError("R must be >= 0")
    if not (eps > 0):
        raise ValueError("eps must be > 0")
    lam_exp = float(np.exp(-2.0 * R / eps))
    lam_tanh = float(np.tanh(R / (4.0 * eps)) ** 2)
    return lam_exp, lam_tanh
