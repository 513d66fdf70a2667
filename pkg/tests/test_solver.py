"""Dual updates, the fixed-point loop, plan utilities, and diagnostics."""

import numpy as np
import pytest

import oracles
from logsinkhorn import (
    STATUS_CONVERGED,
    STATUS_NUMERICAL_FAILURE,
    ReductionPlan,
    SinkhornConfig,
    contraction_rate_bound,
    generate_grid_problem,
    kkt_residual,
    make_cost_matrix,
    make_distribution,
    marginal_error,
    materialize_plan,
    regularized_objective,
    solve,
    solve_standard_domain,
    transport_cost,
    update_alpha,
    update_beta,
)

PLAN = ReductionPlan()


def tiny_problem():
    mu = make_distribution([0.5, 0.5])
    nu = make_distribution([0.5, 0.5])
    cost = make_cost_matrix(2, 2, [0.0, 1.0, 1.0, 0.0])
    return mu, nu, cost


class TestUpdateAlpha:
    def test_single_entry(self):
        cost = make_cost_matrix(1, 1, [0.5])
        nu = make_distribution([1.0])
        alpha = update_alpha(cost, nu, np.zeros(1), 0.1, PLAN)
        assert alpha[0] == pytest.approx(0.5, rel=1e-12)

    def test_constant_cost_gives_constant_alpha(self):
        c = 0.7
        cost = make_cost_matrix(3, 4, [c] * 12)
        nu = make_distribution([1.0] * 4)
        alpha = update_alpha(cost, nu, np.zeros(4), 0.3, PLAN)
        np.testing.assert_allclose(alpha, c, rtol=1e-12)

    def test_vs_quad_precision_oracle_single(self):
        rng = np.random.default_rng(21)
        cost = make_cost_matrix(8, 8, rng.uniform(0, 1, 64))
        nu = make_distribution(rng.uniform(0.2, 1.0, 8))
        beta = rng.uniform(-0.5, 0.5, 8).astype(np.float32)
        eps = 0.05
        alpha = update_alpha(cost, nu, beta, eps, PLAN)
        ref = oracles.alpha_update_mp(
            cost.values, beta, nu.log_weights, eps
        )
        np.testing.assert_allclose(alpha, ref, rtol=1e-6, atol=1e-6)

    def test_vs_quad_precision_oracle_double(self):
        rng = np.random.default_rng(22)
        cost = make_cost_matrix(8, 8, rng.uniform(0, 1, 64))
        nu = make_distribution(rng.uniform(0.2, 1.0, 8))
        beta = rng.uniform(-0.5, 0.5, 8)
        eps = 0.02
        alpha = update_alpha(cost, nu, beta, eps, PLAN)
        ref = oracles.alpha_update_mp(cost.values, beta, nu.log_weights, eps)
        np.testing.assert_allclose(alpha, ref, rtol=1e-13, atol=1e-13)

    def test_output_dtype_follows_beta(self):
        cost = make_cost_matrix(2, 2, [0.0, 1.0, 1.0, 0.0])
        nu = make_distribution([1.0, 1.0])
        assert update_alpha(cost, nu, np.zeros(2, np.float32), 0.1, PLAN).dtype == np.float32
        assert update_alpha(cost, nu, np.zeros(2, np.float64), 0.1, PLAN).dtype == np.float64


class TestUpdateBeta:
    def test_single_entry_mirror(self):
        cost = make_cost_matrix(1, 1, [0.5])
        mu = make_distribution([1.0])
        beta = update_beta(cost, mu, np.array([0.5]), 0.1, PLAN)
        assert beta[0] == pytest.approx(0.0, abs=1e-12)

    def test_transpose_symmetry(self):
        # on symmetric C with mu = nu, the beta update equals the alpha
        # update applied to the transpose
        rng = np.random.default_rng(17)
        A = rng.uniform(0, 1, (6, 6))
        sym = (A + A.T) / 2
        cost = make_cost_matrix(6, 6, sym.ravel())
        w = make_distribution(rng.uniform(0.5, 1.0, 6))
        alpha = update_alpha(cost, w, np.zeros(6), 0.1, PLAN)
        beta = update_beta(cost, w, alpha, 0.1, PLAN)
        cost_t = make_cost_matrix(6, 6, sym.T.ravel())
        beta_ref = update_alpha(cost_t, w, alpha, 0.1, PLAN)
        np.testing.assert_allclose(beta, beta_ref, rtol=1e-12, atol=1e-12)

    def test_strided_and_transposed_paths_agree(self):
        rng = np.random.default_rng(18)
        cost = make_cost_matrix(16, 48, rng.uniform(0, 1, 16 * 48))
        mu = make_distribution(rng.uniform(0.5, 1.0, 16))
        alpha = rng.uniform(-1, 1, 16).astype(np.float32)
        strided = update_beta(cost, mu, alpha, 0.05, PLAN)
        transposed = update_beta(
            cost, mu, alpha, 0.05, PLAN,
            transposed_cost=np.ascontiguousarray(cost.values.T),
        )
        np.testing.assert_array_equal(strided, transposed)

    def test_vs_quad_precision_oracle(self):
        rng = np.random.default_rng(23)
        values = rng.uniform(0, 1, 64)
        cost = make_cost_matrix(8, 8, values)
        mu = make_distribution(rng.uniform(0.2, 1.0, 8))
        alpha = rng.uniform(-0.5, 0.5, 8)
        eps = 0.05
        beta = update_beta(cost, mu, alpha, eps, PLAN)
        cost_t = make_cost_matrix(8, 8, values.reshape(8, 8).T.ravel())
        ref = oracles.alpha_update_mp(cost_t.values, alpha, mu.log_weights, eps)
        np.testing.assert_allclose(beta, ref, rtol=1e-6, atol=1e-6)


class TestMarginalError:
    def test_zero_after_alpha_update(self):
        rng = np.random.default_rng(31)
        cost = make_cost_matrix(5, 7, rng.uniform(0, 1, 35))
        mu = make_distribution(rng.uniform(0.5, 1.0, 5))
        nu = make_distribution(rng.uniform(0.5, 1.0, 7))
        beta = rng.uniform(-0.2, 0.2, 7)
        alpha = update_alpha(cost, nu, beta, 0.1, PLAN)
        err = marginal_error(cost, mu, nu, alpha, beta, 0.1, PLAN)
        assert err <= 1e-12

    def test_constant_cost_zero_potentials(self):
        cost = make_cost_matrix(3, 3, [0.4] * 9)
        mu = make_distribution([1.0, 1.0, 1.0])
        nu = make_distribution([1.0, 1.0, 1.0])
        # alpha = beta = 0 with constant C and uniform weights: rows are
        # already exact because the LSE terms are symmetric
        err = marginal_error(cost, mu, nu, np.zeros(3), np.zeros(3), 1.0, PLAN)
        assert err == pytest.approx(
            3 * abs(np.exp(np.log(1 / 3) - 0.4) - 1 / 3), rel=1e-10
        )

    def test_vs_materialize_oracle(self):
        rng = np.random.default_rng(33)
        cost = make_cost_matrix(6, 6, rng.uniform(0, 1, 36))
        mu = make_distribution(rng.uniform(0.5, 1.0, 6))
        nu = make_distribution(rng.uniform(0.5, 1.0, 6))
        alpha = rng.uniform(-0.3, 0.3, 6)
        beta = rng.uniform(-0.3, 0.3, 6)
        err = marginal_error(cost, mu, nu, alpha, beta, 0.2, PLAN)
        ref = oracles.marginal_error_bruteforce(
            cost.values, mu.weights, nu.weights, alpha, beta, 0.2
        )
        assert err == pytest.approx(ref, rel=1e-6, abs=1e-12)


class TestTransportCost:
    def test_single_entry(self):
        cost = make_cost_matrix(1, 1, [0.5])
        mu = make_distribution([1.0])
        nu = make_distribution([1.0])
        value = transport_cost(cost, mu, nu, np.array([0.5]), np.zeros(1), 0.7, PLAN)
        assert value == pytest.approx(0.5, rel=1e-12)

    def test_constant_cost(self):
        c = 0.3
        cost = make_cost_matrix(4, 4, [c] * 16)
        mu = make_distribution([1.0] * 4)
        nu = make_distribution([1.0] * 4)
        value = transport_cost(
            cost, mu, nu, np.full(4, c), np.zeros(4), 0.1, PLAN
        )
        assert value == pytest.approx(c, rel=1e-10)

    def test_antidiagonal_closed_form(self):
        mu, nu, cost = tiny_problem()
        config = SinkhornConfig(epsilon=0.1, tolerance=1e-9, precision="double")
        report, pot = solve(cost, mu, nu, config)
        expected = 2 * (0.5 * np.exp(-10) / (1 + np.exp(-10)))
        assert report.transport_cost == pytest.approx(expected, rel=1e-6)
        assert report.transport_cost == pytest.approx(4.5398e-5, rel=1e-4)


class TestSolve:
    def test_constant_cost_converges_in_one_check(self):
        c = 0.6
        cost = make_cost_matrix(4, 4, [c] * 16)
        mu = make_distribution([1.0] * 4)
        nu = make_distribution([1.0] * 4)
        config = SinkhornConfig(epsilon=0.1, precision="double")
        report, pot = solve(cost, mu, nu, config)
        assert report.status == STATUS_CONVERGED
        assert report.iterations <= config.check_interval
        assert report.transport_cost == pytest.approx(c, rel=1e-10)
        np.testing.assert_allclose(pot.alpha, c, atol=1e-10)
        np.testing.assert_allclose(pot.beta, 0.0, atol=1e-10)

    def test_antidiagonal_tight_tolerance(self):
        mu, nu, cost = tiny_problem()
        config = SinkhornConfig(epsilon=0.1, tolerance=1e-9, precision="double")
        report, _ = solve(cost, mu, nu, config)
        assert report.status == STATUS_CONVERGED
        assert report.final_marginal_error < 1e-9

    def test_status_converged_iff_error_below_tolerance(self):
        mu, nu, cost = generate_grid_problem(64, 64, 0)
        config = SinkhornConfig(epsilon=0.01)
        report, _ = solve(cost, mu, nu, config)
        assert report.status == STATUS_CONVERGED
        assert report.final_marginal_error < config.tolerance

    def test_iteration_cap(self):
        mu, nu, cost = generate_grid_problem(64, 64, 0)
        config = SinkhornConfig(epsilon=0.001, max_iterations=20)
        report, _ = solve(cost, mu, nu, config)
        assert report.status == "not_converged"
        assert report.iterations == 20
        assert report.final_marginal_error >= config.tolerance

    def test_final_check_runs_when_cap_not_multiple_of_interval(self):
        mu, nu, cost = generate_grid_problem(64, 64, 0)
        config = SinkhornConfig(epsilon=0.001, max_iterations=25, check_interval=10)
        report, _ = solve(cost, mu, nu, config)
        assert report.iterations == 25
        assert report.error_trace[-1][0] == 25

    def test_error_trace_matches_checkpoints(self):
        mu, nu, cost = generate_grid_problem(64, 64, 0)
        config = SinkhornConfig(epsilon=0.01, check_interval=5)
        report, _ = solve(cost, mu, nu, config)
        iterations = [k for k, _ in report.error_trace]
        assert iterations == list(range(5, report.iterations + 1, 5))
        assert report.error_trace[-1][1] == report.final_marginal_error

    def test_dimension_mismatch_rejected(self):
        mu = make_distribution([1.0, 1.0])
        nu = make_distribution([1.0, 1.0, 1.0])
        cost = make_cost_matrix(2, 2, [0.1] * 4)
        with pytest.raises(ValueError):
            solve(cost, mu, nu, SinkhornConfig(epsilon=0.1))

    def test_bit_identical_repeat_solves(self):
        mu, nu, cost = generate_grid_problem(128, 128, 3)
        config = SinkhornConfig(epsilon=0.01)
        r1, p1 = solve(cost, mu, nu, config)
        r2, p2 = solve(cost, mu, nu, config)
        assert r1.iterations == r2.iterations
        assert r1.final_marginal_error == r2.final_marginal_error
        assert r1.transport_cost == r2.transport_cost
        assert r1.error_trace == r2.error_trace
        np.testing.assert_array_equal(p1.alpha, p2.alpha)
        np.testing.assert_array_equal(p1.beta, p2.beta)

    def test_transpose_for_beta_bit_neutral(self):
        mu, nu, cost = generate_grid_problem(96, 96, 4)
        base = SinkhornConfig(epsilon=0.01)
        mirrored = SinkhornConfig(epsilon=0.01, transpose_for_beta=True)
        r1, p1 = solve(cost, mu, nu, base)
        r2, p2 = solve(cost, mu, nu, mirrored)
        assert r1.transport_cost == r2.transport_cost
        np.testing.assert_array_equal(p1.alpha, p2.alpha)
        np.testing.assert_array_equal(p1.beta, p2.beta)

    def test_rectangular_problem(self):
        mu, nu, cost = generate_grid_problem(40, 70, 1)
        report, _ = solve(cost, mu, nu, SinkhornConfig(epsilon=0.05, precision="double"))
        assert report.status == STATUS_CONVERGED


class TestSolveStandardDomain:
    def test_single_entry(self):
        cost = make_cost_matrix(1, 1, [0.5])
        mu = make_distribution([1.0])
        nu = make_distribution([1.0])
        report, u, v = solve_standard_domain(cost, mu, nu, SinkhornConfig(epsilon=1.0))
        assert report.status == STATUS_CONVERGED
        assert report.transport_cost == pytest.approx(0.5, rel=1e-6)

    def test_agrees_with_log_domain_at_moderate_eps(self):
        mu, nu, cost = generate_grid_problem(128, 128, 0)
        config = SinkhornConfig(epsilon=0.01)
        log_report, _ = solve(cost, mu, nu, config)
        std_report, _, _ = solve_standard_domain(cost, mu, nu, config)
        assert std_report.status == STATUS_CONVERGED
        rel = abs(log_report.transport_cost - std_report.transport_cost)
        assert rel / abs(std_report.transport_cost) <= 1e-3

    def test_single_precision_small_eps_fails(self):
        mu, nu, cost = generate_grid_problem(512, 512, 0)
        config = SinkhornConfig(epsilon=0.001, precision="single")
        report, _, _ = solve_standard_domain(cost, mu, nu, config)
        assert report.status == STATUS_NUMERICAL_FAILURE

    def test_failure_reports_nan_cost(self):
        mu, nu, cost = generate_grid_problem(256, 256, 0)
        config = SinkhornConfig(epsilon=0.0005, precision="single")
        report, _, _ = solve_standard_domain(cost, mu, nu, config)
        assert report.status == STATUS_NUMERICAL_FAILURE
        assert np.isnan(report.transport_cost)


class TestMaterializePlan:
    def test_single_entry(self):
        cost = make_cost_matrix(1, 1, [0.5])
        mu = make_distribution([1.0])
        nu = make_distribution([1.0])
        plan = materialize_plan(cost, mu, nu, np.array([0.5]), np.zeros(1), 0.1)
        np.testing.assert_allclose(plan.values, [[1.0]], rtol=1e-12)

    def test_constant_cost_product_plan(self):
        c = 0.2
        cost = make_cost_matrix(3, 3, [c] * 9)
        mu = make_distribution([1.0, 2.0, 3.0])
        nu = make_distribution([2.0, 2.0, 2.0])
        config = SinkhornConfig(epsilon=0.1, precision="double")
        _, pot = solve(cost, mu, nu, config)
        plan = materialize_plan(cost, mu, nu, pot.alpha, pot.beta, 0.1)
        np.testing.assert_allclose(
            plan.values, np.outer(mu.weights, nu.weights), atol=1e-6
        )

    def test_antidiagonal_closed_form(self):
        mu, nu, cost = tiny_problem()
        config = SinkhornConfig(epsilon=0.1, tolerance=1e-12, precision="double")
        _, pot = solve(cost, mu, nu, config)
        plan = materialize_plan(cost, mu, nu, pot.alpha, pot.beta, 0.1)
        diag = 0.5 / (1 + np.exp(-10))
        off = 0.5 * np.exp(-10) / (1 + np.exp(-10))
        np.testing.assert_allclose(
            plan.values, [[diag, off], [off, diag]], rtol=1e-9
        )

    def test_dtype_follows_potentials(self):
        mu, nu, cost = generate_grid_problem(8, 8, 0)
        _, pot = solve(cost, mu, nu, SinkhornConfig(epsilon=0.1))
        plan = materialize_plan(cost, mu, nu, pot.alpha, pot.beta, 0.1)
        assert plan.values.dtype == np.float32


class TestKktResidual:
    def test_materialized_plan_near_zero_double(self):
        mu, nu, cost = generate_grid_problem(32, 32, 2)
        config = SinkhornConfig(epsilon=0.05, precision="double")
        _, pot = solve(cost, mu, nu, config)
        plan = materialize_plan(cost, mu, nu, pot.alpha, pot.beta, 0.05)
        res = kkt_residual(cost, mu, nu, plan, pot.alpha, pot.beta, 0.05)
        assert res <= 1e-10

    def test_materialized_plan_near_zero_single(self):
        mu, nu, cost = generate_grid_problem(32, 32, 2)
        config = SinkhornConfig(epsilon=0.05, precision="single")
        _, pot = solve(cost, mu, nu, config)
        plan = materialize_plan(cost, mu, nu, pot.alpha, pot.beta, 0.05)
        res = kkt_residual(cost, mu, nu, plan, pot.alpha, pot.beta, 0.05)
        assert res <= 1e-5

    def test_product_plan_nonzero_for_nonconstant_cost(self):
        mu, nu, cost = generate_grid_problem(16, 16, 1)
        from logsinkhorn import TransportPlan

        plan = TransportPlan(values=np.outer(mu.weights, nu.weights))
        res = kkt_residual(
            cost, mu, nu, plan, np.zeros(16), np.zeros(16), 0.1
        )
        # with alpha = beta = 0 the residual is max |C_ij|, here 1
        assert res == pytest.approx(1.0, rel=1e-12)

    def test_vs_direct_oracle(self):
        rng = np.random.default_rng(41)
        mu = make_distribution(rng.uniform(0.5, 1.0, 6))
        nu = make_distribution(rng.uniform(0.5, 1.0, 6))
        cost = make_cost_matrix(6, 6, rng.uniform(0, 1, 36))
        alpha = rng.uniform(-0.5, 0.5, 6)
        beta = rng.uniform(-0.5, 0.5, 6)
        from logsinkhorn import TransportPlan

        P = rng.uniform(0.1, 1.0, (6, 6))
        plan = TransportPlan(values=P)
        eps = 0.3
        res = kkt_residual(cost, mu, nu, plan, alpha, beta, eps)
        direct = np.abs(
            cost.values
            + eps * np.log(P / np.outer(mu.weights, nu.weights))
            - alpha[:, None]
            - beta[None, :]
        ).max()
        assert res == pytest.approx(direct, abs=1e-9)


class TestRegularizedObjective:
    def test_product_plan_pure_cost(self):
        rng = np.random.default_rng(51)
        mu = make_distribution(rng.uniform(0.5, 1.0, 4))
        nu = make_distribution(rng.uniform(0.5, 1.0, 5))
        cost = make_cost_matrix(4, 5, rng.uniform(0, 1, 20))
        from logsinkhorn import TransportPlan

        plan = TransportPlan(values=np.outer(mu.weights, nu.weights))
        obj = regularized_objective(cost, mu, nu, plan, 0.2)
        expected = float((cost.values * plan.values).sum())
        assert obj == pytest.approx(expected, rel=1e-12)

    def test_single_entry(self):
        cost = make_cost_matrix(1, 1, [0.37])
        mu = make_distribution([1.0])
        nu = make_distribution([1.0])
        from logsinkhorn import TransportPlan

        plan = TransportPlan(values=np.array([[1.0]]))
        assert regularized_objective(cost, mu, nu, plan, 0.5) == pytest.approx(0.37)

    def test_solver_plan_minimizes(self):
        rng = np.random.default_rng(52)
        mu = make_distribution(rng.uniform(0.5, 1.0, 4))
        nu = make_distribution(rng.uniform(0.5, 1.0, 4))
        cost = make_cost_matrix(4, 4, rng.uniform(0, 1, 16))
        eps = 0.1
        config = SinkhornConfig(epsilon=eps, tolerance=1e-12, precision="double")
        report, pot = solve(cost, mu, nu, config)
        assert report.status == STATUS_CONVERGED
        plan = materialize_plan(cost, mu, nu, pot.alpha, pot.beta, eps)
        obj_star = regularized_objective(cost, mu, nu, plan, eps)

        from logsinkhorn import TransportPlan

        product = TransportPlan(values=np.outer(mu.weights, nu.weights))
        assert obj_star <= regularized_objective(cost, mu, nu, product, eps) + 1e-9

        for P in oracles.feasible_perturbations(plan.values, rng, count=100):
            other = TransportPlan(values=P)
            assert obj_star <= regularized_objective(cost, mu, nu, other, eps) + 1e-9


class TestContractionRateBound:
    def test_zero_range(self):
        lam_exp, lam_tanh = contraction_rate_bound(0.0, 0.5)
        assert lam_exp == 1.0
        assert lam_tanh == 0.0

    def test_reference_point(self):
        lam_exp, lam_tanh = contraction_rate_bound(1.0, 0.5)
        assert lam_exp == pytest.approx(np.exp(-4.0), rel=1e-12)
        assert lam_exp == pytest.approx(0.018316, rel=1e-4)
        assert lam_tanh == pytest.approx(np.tanh(0.5) ** 2, rel=1e-12)
        assert lam_tanh == pytest.approx(0.213548, rel=1e-4)

    def test_small_eps_saturates(self):
        _, lam_tanh = contraction_rate_bound(1.0, 0.01)
        assert lam_tanh == pytest.approx(1.0, abs=1e-12)

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            contraction_rate_bound(-1.0, 0.5)
        with pytest.raises(ValueError):
            contraction_rate_bound(1.0, 0.0)


class TestFeasibility:
    @pytest.mark.parametrize("precision", ["single", "double"])
    def test_converged_plan_marginals(self, precision):
        mu, nu, cost = generate_grid_problem(128, 128, 6)
        config = SinkhornConfig(epsilon=0.01, precision=precision)
        report, pot = solve(cost, mu, nu, config)
        assert report.status == STATUS_CONVERGED
        plan = materialize_plan(cost, mu, nu, pot.alpha, pot.beta, 0.01)
        rows = plan.values.sum(axis=1, dtype=np.float64)
        cols = plan.values.sum(axis=0, dtype=np.float64)
        assert np.abs(rows - mu.weights).sum() < config.tolerance
        assert np.abs(cols - nu.weights).sum() < 10 * config.tolerance
