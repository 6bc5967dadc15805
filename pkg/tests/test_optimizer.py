"""Multi-start pattern search over boxes."""

import numpy as np
import pytest

from errors import InputError
from optimizer import MultiStartConfig, PatternSearch, as_bounds, grid_points, multistart_maximize, pattern_search


class TestGrid:
    def test_c_order(self):
        points = grid_points([[0, 1], [10, 20]], 2)
        np.testing.assert_allclose(points, [[0, 10], [0, 20], [1, 10], [1, 20]])

    def test_density_defaults(self):
        config = MultiStartConfig()
        assert config.grid_density(1) == 25
        assert config.grid_density(2) == 25
        assert config.grid_density(3) == 7

    def test_bad_bounds(self):
        with pytest.raises(InputError):
            as_bounds([[1.0, 0.0]])
        with pytest.raises(InputError):
            as_bounds([1.0, 2.0, 3.0])


class TestPatternSearch:
    def test_never_worse_than_start(self):
        def objective(X):
            return -np.sum((X - 0.37) ** 2, axis=1)

        bounds = as_bounds([[0, 1], [0, 1]])
        start = np.array([0.9, 0.1])
        x, value = pattern_search(objective, start, float(objective(start[None, :])[0]), bounds, PatternSearch())
        assert value >= float(objective(start[None, :])[0])
        np.testing.assert_allclose(x, [0.37, 0.37], atol=1e-3)

    def test_stays_in_bounds(self):
        def objective(X):
            return X[:, 0]

        bounds = as_bounds([[-1, 2]])
        x, value = pattern_search(objective, np.array([0.0]), 0.0, bounds, PatternSearch())
        assert x[0] == pytest.approx(2.0)
        assert value == pytest.approx(2.0)

    def test_invalid_shrink(self):
        with pytest.raises(InputError):
            PatternSearch(shrink=1.5)


class TestMultistart:
    def test_quadratic_peak_1d(self):
        def objective(X):
            return -((X[:, 0] - 0.3217) ** 2)

        x, _ = multistart_maximize(objective, [[-1, 1]], MultiStartConfig())
        dense = np.linspace(-1, 1, 10_000)
        assert x[0] == pytest.approx(dense[np.argmax(-((dense - 0.3217) ** 2))], abs=1e-3)

    def test_branin_like_2d(self):
        def objective(X):
            x1, x2 = X[:, 0], X[:, 1]
            return -((x2 - 5.1 / (4 * np.pi**2) * x1**2 + 5 / np.pi * x1 - 6) ** 2) - 10 * (1 - 1 / (8 * np.pi)) * np.cos(x1)

        bounds = [[-5, 10], [0, 15]]
        _, value = multistart_maximize(objective, bounds, MultiStartConfig())
        grid = grid_points(bounds, 200)
        assert value >= objective(grid).max() - 1e-4

    def test_flat_objective_feasible(self):
        x, value = multistart_maximize(lambda X: np.full(X.shape[0], 1.5), [[-1, 1], [0, 2]], MultiStartConfig())
        assert -1 <= x[0] <= 1 and 0 <= x[1] <= 2
        assert value == 1.5

    def test_ties_go_to_lowest_index(self):
        """A flat objective returns the first grid point."""
        x, _ = multistart_maximize(lambda X: np.zeros(X.shape[0]), [[-1, 1]], MultiStartConfig())
        assert x[0] == -1.0

    def test_deterministic(self):
        rng = np.random.default_rng(0)
        weights = rng.normal(size=(5, 2))

        def objective(X):
            return np.sin(X @ weights.T).sum(axis=1)

        config = MultiStartConfig(n_random=16, rng_seed=3)
        a = multistart_maximize(objective, [[0, 3], [0, 3]], config)
        b = multistart_maximize(objective, [[0, 3], [0, 3]], config)
        np.testing.assert_array_equal(a[0], b[0])
        assert a[1] == b[1]
