"""Robust UCB acquisition, its context-Lipschitz penalty and the baselines."""

import numpy as np
import pytest

import acquisition
from acquisition import (
    AcquisitionProblem,
    AnalyticLipschitz,
    NumericLipschitz,
    expected_ucb,
    expected_ucb_batch,
    lipschitz_region,
    gpucb_select,
    maximize,
    maximize_expected_ucb,
    robust_value,
    robust_value_batch,
    stableopt_context_box,
    stableopt_select,
    ucb_context_lipschitz,
)
from errors import InputError
from kernel import KernelSpec, cross_gram, gram, lipschitz_constant
from optimizer import MultiStartConfig, grid_points, multistart_maximize
from surrogate import TheoreticalBeta, beta, fit, mean_norm_bound, predict, ucb, ucb_batch


X_BOX = np.array([[0.0, 1.0]])
C_BOX = np.array([[0.0, 1.0]])
SE = KernelSpec("se", 0.25)


def empty_model(lam=1.0, kernel=SE, dim=2):
    return fit(kernel, np.zeros((0, dim)), [], lam=lam, dim=dim)


def fitted_model(n=12, seed=0, lam=0.1):
    rng = np.random.default_rng(seed)
    Z = rng.uniform(0, 1, size=(n, 2))
    y = np.sin(4 * Z[:, 0]) * np.cos(3 * Z[:, 1]) + 0.05 * rng.normal(size=n)
    return fit(SE, Z, y, lam=lam)


def problem(model, beta_value=1.5, samples=None, epsilon=0.0, mode=None):
    if samples is None:
        samples = np.random.default_rng(1).uniform(0, 1, size=(10, 1))
    return AcquisitionProblem(
        model=model,
        beta=beta_value,
        x_bounds=X_BOX,
        c_bounds=C_BOX,
        center_samples=samples,
        epsilon=epsilon,
        lipschitz_mode=mode or NumericLipschitz(),
    )


class TestExpectedUcb:
    def test_empty_model(self):
        assert expected_ucb(problem(empty_model(lam=1.0)), [0.3]) == pytest.approx(1.5)

    def test_single_sample(self):
        model = fitted_model()
        p = problem(model, samples=[[0.42]])
        assert expected_ucb(p, [0.6]) == pytest.approx(ucb(model, [0.6, 0.42], 1.5), abs=1e-12)

    def test_explicit_sum(self):
        model = fitted_model()
        samples = np.random.default_rng(2).uniform(0, 1, size=(10, 1))
        p = problem(model, samples=samples)
        expected = np.mean([ucb(model, [0.25, c[0]], 1.5) for c in samples])
        assert expected_ucb(p, [0.25]) == pytest.approx(expected, abs=1e-12)

    def test_batch_matches_pointwise(self):
        p = problem(fitted_model())
        X = np.linspace(0, 1, 7)[:, None]
        np.testing.assert_allclose(expected_ucb_batch(p, X), [expected_ucb(p, x) for x in X])

    def test_dimension_checks(self):
        with pytest.raises(InputError):
            problem(fitted_model(), samples=[[0.1, 0.2]])
        with pytest.raises(InputError):
            expected_ucb(problem(fitted_model()), [0.1, 0.2])

    def test_negative_epsilon(self):
        with pytest.raises(InputError):
            problem(fitted_model(), epsilon=-0.1)


class TestContextLipschitz:
    def test_analytic_empty_model(self):
        kernel = KernelSpec("se", 1.0)
        model = fit(kernel, np.zeros((0, 2)), [], lam=1.0, noise=1.0, norm_bound=1.0, delta=0.05, dim=2)
        p = problem(model, mode=AnalyticLipschitz())
        assert ucb_context_lipschitz(p, [0.5]) == pytest.approx(2 * (1 + np.sqrt(2 * np.log(20))), abs=1e-4)
        assert ucb_context_lipschitz(p, [0.5]) == pytest.approx(6.8955, abs=1e-3)

    def test_numeric_flat_surrogate(self):
        p = problem(empty_model(), beta_value=0.0)
        assert ucb_context_lipschitz(p, [0.3]) <= 1e-6

    def test_numeric_matches_slope(self):
        """Fitted to y = 2c with no x dependence, the slope in c is close to 2."""
        Z = grid_points([[0, 1], [0, 1]], 7)
        kernel = KernelSpec("se", 1.0)
        model = fit(kernel, Z, 2 * Z[:, 1], lam=1e-3)
        p = AcquisitionProblem(
            model=model, beta=0.0, x_bounds=X_BOX, c_bounds=C_BOX, center_samples=[[0.5]]
        )
        assert ucb_context_lipschitz(p, [0.5]) == pytest.approx(1.1 * 2.0, rel=0.1)

    @pytest.mark.parametrize("seed", range(100))
    def test_numeric_below_analytic(self, seed):
        """With the theoretical β the UCB slope in c is at most 2·B̄·L."""
        rng = np.random.default_rng(seed)
        kernel = KernelSpec("se", rng.uniform(0.2, 0.6))
        centers = rng.uniform(0, 1, size=(4, 2))
        weights = rng.normal(size=4)
        weights /= np.sqrt(weights @ gram(kernel, centers) @ weights)
        n = int(rng.integers(1, 30))
        Z = rng.uniform(0, 1, size=(n, 2))
        y = cross_gram(kernel, Z, centers) @ weights + 0.1 * rng.normal(size=n)
        model = fit(kernel, Z, y, lam=1.0, noise=1.0, norm_bound=1.0, beta_mode=TheoreticalBeta())
        beta_t = beta(model, n + 1)
        x = rng.uniform(0, 1, size=1)
        numeric = ucb_context_lipschitz(
            AcquisitionProblem(model, beta_t, X_BOX, C_BOX, [[0.5]], lipschitz_mode=NumericLipschitz()), x
        )
        analytic = ucb_context_lipschitz(
            AcquisitionProblem(model, beta_t, X_BOX, C_BOX, [[0.5]], lipschitz_mode=AnalyticLipschitz()), x
        )
        assert numeric <= analytic + 1e-6

        bound = mean_norm_bound(model) * lipschitz_constant(kernel)
        c = rng.uniform(0, 1, size=200)
        h = 1e-4
        plus = predict(model, np.column_stack([np.full(200, x[0]), c + h]))[0]
        minus = predict(model, np.column_stack([np.full(200, x[0]), c - h]))[0]
        assert np.max(np.abs(plus - minus) / (2 * h)) <= bound + 1e-6

    def test_numeric_two_dimensional_context(self):
        """Fitted to y = 2·c1 + c2, the gradient norm in c is close to √5."""
        Z = grid_points([[0, 1], [0, 1], [0, 1]], 5)
        kernel = KernelSpec("se", 1.0)
        model = fit(kernel, Z, 2 * Z[:, 1] + Z[:, 2], lam=1e-3)
        p = AcquisitionProblem(
            model=model,
            beta=0.0,
            x_bounds=X_BOX,
            c_bounds=[[0, 1], [0, 1]],
            center_samples=[[0.5, 0.5]],
            epsilon=0.1,
        )
        assert p.slope_grid.shape == (32 * 32, 2)
        assert ucb_context_lipschitz(p, [0.5]) == pytest.approx(1.1 * np.sqrt(5.0), rel=0.1)

    def test_grid_needs_two_points(self):
        with pytest.raises(InputError, match="at least 2"):
            problem(fitted_model(), mode=NumericLipschitz(grid_per_dim=1))


class TestLipschitzRegion:
    def test_hull_widened_by_epsilon(self):
        np.testing.assert_allclose(lipschitz_region([[0.3], [0.7], [0.5]], 0.1, C_BOX), [[0.2, 0.8]])

    def test_clipped_to_box(self):
        np.testing.assert_allclose(lipschitz_region([[0.05], [0.5]], 0.2, C_BOX), [[0.0, 0.7]])

    def test_single_sample_keeps_minimum_width(self):
        np.testing.assert_allclose(lipschitz_region([[0.5]], 0.0, C_BOX), [[0.5 - 1e-4, 0.5 + 1e-4]])

    def test_per_axis(self):
        region = lipschitz_region([[0.2, 1.0], [0.4, 3.0]], 0.5, [[0, 1], [0, 4]])
        np.testing.assert_allclose(region, [[0.0, 0.9], [0.5, 3.5]])

    def test_slope_follows_region(self):
        """y = 4c² has slope 8c: about 4.8 within 0.1 of c = 0.5, and 8 on the whole box."""
        Z = grid_points([[0, 1], [0, 1]], 7)
        model = fit(KernelSpec("se", 1.0), Z, 4 * Z[:, 1] ** 2, lam=1e-3)

        def slope(epsilon):
            p = AcquisitionProblem(model, 0.0, X_BOX, C_BOX, [[0.5]], epsilon=epsilon)
            return ucb_context_lipschitz(p, [0.5])

        local, full = slope(0.1), slope(1.0)
        assert local == pytest.approx(1.1 * 4.8, rel=0.1)
        assert full == pytest.approx(1.1 * 8.0, rel=0.15)
        assert local < full

    def test_unobserved_contexts_do_not_set_the_penalty(self):
        """σ rises steeply away from the observed contexts; the penalty only sees the reachable ones."""
        Z = grid_points([[0, 1], [0.4, 0.6]], 7)
        model = fit(SE, Z, np.zeros(len(Z)), lam=0.1)
        samples = np.linspace(0.45, 0.55, 8)[:, None]
        local = ucb_context_lipschitz(problem(model, samples=samples, epsilon=0.05), [0.5])
        full = ucb_context_lipschitz(problem(model, samples=samples, epsilon=1.0), [0.5])
        assert local < 0.5 * full


class TestSharedEvaluation:
    def test_one_surrogate_call_per_batch(self, monkeypatch):
        calls = []

        def counting(model, Z, beta_value):
            calls.append(len(Z))
            return ucb_batch(model, Z, beta_value)

        p = problem(fitted_model(), epsilon=0.1)
        X = np.linspace(0, 1, 5)[:, None]
        monkeypatch.setattr(acquisition, "ucb_batch", counting)
        robust_value_batch(p, X)
        assert calls == [5 * (10 + 32)]

    def test_shared_call_matches_separate_terms(self):
        p = problem(fitted_model(seed=3), epsilon=0.2)
        X = np.linspace(0, 1, 9)[:, None]
        separate = expected_ucb_batch(p, X) - 0.2 * np.array([ucb_context_lipschitz(p, x) for x in X])
        np.testing.assert_allclose(robust_value_batch(p, X), separate, rtol=1e-10, atol=1e-10)


class TestRobustValue:
    def test_zero_epsilon_is_expected_ucb(self):
        p = problem(fitted_model(), epsilon=0.0)
        X = np.linspace(0, 1, 11)[:, None]
        np.testing.assert_array_equal(robust_value_batch(p, X), expected_ucb_batch(p, X))

    def test_penalty(self):
        p = problem(fitted_model(), epsilon=0.1)
        x = [0.4]
        assert robust_value(p, x) == pytest.approx(expected_ucb(p, x) - 0.1 * ucb_context_lipschitz(p, x))

    def test_analytic_penalty_arithmetic(self):
        kernel = KernelSpec("se", 1.0)
        model = fit(kernel, np.zeros((0, 2)), [], lam=1.0, dim=2)
        p = problem(model, epsilon=0.1, mode=AnalyticLipschitz())
        L = ucb_context_lipschitz(p, [0.2])
        assert robust_value(p, [0.2]) == pytest.approx(expected_ucb(p, [0.2]) - 0.1 * L)

    def test_nonincreasing_in_epsilon(self):
        model = fitted_model()
        x = [0.7]
        values = [robust_value(problem(model, epsilon=eps), x) for eps in (0.0, 0.05, 0.1, 0.5, 1.0)]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_sigma_ignores_output_shift(self):
        rng = np.random.default_rng(4)
        Z = rng.uniform(0, 1, size=(10, 2))
        y = rng.normal(size=10)
        queries = rng.uniform(0, 1, size=(30, 2))
        a = predict(fit(SE, Z, y, lam=0.1), queries)[1]
        b = predict(fit(SE, Z, y + 5.0, lam=0.1), queries)[1]
        np.testing.assert_array_equal(a, b)


class TestMaximize:
    def test_flat_objective(self):
        x, value = maximize(problem(empty_model(lam=1.0)))
        assert 0.0 <= x[0] <= 1.0
        assert value == pytest.approx(1.5)

    def test_erbo_equivalence(self):
        p = problem(fitted_model(seed=5), epsilon=0.0)
        a = maximize(p)
        b = maximize_expected_ucb(p)
        np.testing.assert_array_equal(a[0], b[0])
        assert a[1] == b[1]

    def test_matches_dense_grid(self):
        p = problem(fitted_model(seed=6), epsilon=0.1)
        x, value = maximize(p)
        dense = np.linspace(0, 1, 2001)[:, None]
        assert value >= robust_value_batch(p, dense).max() - 1e-3
        assert value == pytest.approx(robust_value(p, x))

    def test_result_in_box(self):
        x, _ = maximize(problem(fitted_model(seed=7), epsilon=0.3))
        assert 0.0 <= x[0] <= 1.0


class TestStableOpt:
    def test_context_box(self):
        np.testing.assert_allclose(stableopt_context_box([[0.3], [0.7]], C_BOX), [[0.3, 0.7]])

    def test_context_box_is_mean_plus_minus_std(self):
        box = stableopt_context_box([[0.0], [0.0], [0.9]], C_BOX)
        np.testing.assert_allclose(box, [[0.3 - np.sqrt(0.18), 0.3 + np.sqrt(0.18)]])

    def test_no_history_uses_full_box(self):
        np.testing.assert_allclose(stableopt_context_box(np.zeros((0, 1)), C_BOX), C_BOX)

    def test_single_context_is_plain_ucb(self):
        model = fitted_model(seed=8)
        box = stableopt_context_box([[0.35]], C_BOX)
        x, value = stableopt_select(model, 1.5, X_BOX, box)
        expected = multistart_maximize(
            lambda X: ucb_batch(model, np.column_stack([X, np.full(X.shape[0], 0.35)]), 1.5),
            X_BOX,
            MultiStartConfig(),
        )
        np.testing.assert_allclose(x, expected[0])
        assert value == pytest.approx(expected[1])

    def test_nested_grid_oracle(self):
        model = fitted_model(seed=9)
        box = np.array([[0.2, 0.8]])
        _, value = stableopt_select(model, 1.5, X_BOX, box)
        contexts = grid_points(box, 16)
        xs = np.linspace(0, 1, 1001)
        inner = [ucb_batch(model, np.column_stack([np.full(16, x), contexts]), 1.5).min() for x in xs]
        assert value >= max(inner) - 1e-3


class TestGpUcb:
    def test_flat(self):
        x, _ = gpucb_select(empty_model(dim=1), 1.5, X_BOX)
        assert 0.0 <= x[0] <= 1.0

    def test_zero_beta_maximizes_mean(self):
        Z = np.array([[0.1], [0.5], [0.9]])
        model = fit(KernelSpec("se", 0.2), Z, [0.0, 1.0, 0.2], lam=0.01)
        x, value = gpucb_select(model, 0.0, X_BOX)
        dense = np.linspace(0, 1, 10_001)[:, None]
        mean = predict(model, dense)[0]
        assert x[0] == pytest.approx(dense[np.argmax(mean), 0], abs=1e-3)
        assert value == pytest.approx(mean.max(), abs=1e-6)

    def test_dimension_check(self):
        with pytest.raises(InputError):
            gpucb_select(empty_model(dim=2), 1.5, X_BOX)
