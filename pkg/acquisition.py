"""Acquisition functions and their maximizers.

`robust_value` is the Wasserstein-robust objective: the expected UCB under the
ball centre minus ε times the Lipschitz constant of the UCB in the context.
With ε = 0 it reduces to the empirical-risk objective (ERBO). GP-UCB and
StableOpt are the context-blind and the worst-case-context baselines.
"""

from dataclasses import dataclass, field

import numpy as np

from errors import InputError
from kernel import lipschitz_constant
from optimizer import MultiStartConfig, as_bounds, grid_points, multistart_maximize
from surrogate import SurrogateModel, mean_norm_bound, ucb_batch


FD_STEP_FRACTION = 1e-4
LIPSCHITZ_SAFETY = 1.1


@dataclass(frozen=True)
class AnalyticLipschitz:
    """x-independent bound 2·B̄_t·L."""


@dataclass(frozen=True)
class NumericLipschitz:
    """Largest central-difference slope of c ↦ UCB(x, c) on a grid over the contexts the ball reaches."""

    grid_per_dim: int = 32


LipschitzMode = AnalyticLipschitz | NumericLipschitz


@dataclass(frozen=True, eq=False)
class AcquisitionProblem:
    model: SurrogateModel
    beta: float
    x_bounds: np.ndarray
    c_bounds: np.ndarray
    center_samples: np.ndarray  # (m, d_c)
    epsilon: float = 0.0
    lipschitz_mode: LipschitzMode = field(default_factory=NumericLipschitz)
    optimizer: MultiStartConfig = field(default_factory=MultiStartConfig)
    slope_grid: np.ndarray | None = field(default=None, init=False, repr=False)
    slope_spacing: np.ndarray | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        x_bounds = as_bounds(self.x_bounds)
        c_bounds = as_bounds(self.c_bounds)
        samples = np.atleast_2d(np.asarray(self.center_samples, dtype=float))
        if samples.size == 0:
            raise InputError("the ambiguity centre needs at least one context sample")
        if samples.shape[1] != c_bounds.shape[0]:
            raise InputError(
                f"centre samples have dimension {samples.shape[1]}, context box has {c_bounds.shape[0]}"
            )
        if x_bounds.shape[0] + c_bounds.shape[0] != self.model.dim:
            raise InputError(
                f"boxes span {x_bounds.shape[0]} + {c_bounds.shape[0]} dimensions, "
                f"the surrogate expects {self.model.dim}"
            )
        if self.epsilon < 0:
            raise InputError(f"epsilon must be nonnegative, got {self.epsilon}")
        object.__setattr__(self, "x_bounds", x_bounds)
        object.__setattr__(self, "c_bounds", c_bounds)
        object.__setattr__(self, "center_samples", samples)
        if isinstance(self.lipschitz_mode, NumericLipschitz):
            per_dim = self.lipschitz_mode.grid_per_dim
            if per_dim < 2:
                raise InputError(f"the Lipschitz grid needs at least 2 points per axis, got {per_dim}")
            region = lipschitz_region(samples, self.epsilon, c_bounds)
            object.__setattr__(self, "slope_grid", grid_points(region, per_dim))
            object.__setattr__(self, "slope_spacing", (region[:, 1] - region[:, 0]) / (per_dim - 1))

    @property
    def dim_x(self) -> int:
        return self.x_bounds.shape[0]


def lipschitz_region(samples, epsilon: float, c_bounds) -> np.ndarray:
    """Box of contexts within ε of the centre samples, clipped to the context box.

    Each axis is at least 2·FD_STEP_FRACTION·diam(C) wide, centred on the clipped hull.
    """
    c_bounds = as_bounds(c_bounds)
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    h = FD_STEP_FRACTION * float(np.linalg.norm(c_bounds[:, 1] - c_bounds[:, 0]))
    lo = np.maximum(samples.min(axis=0) - epsilon, c_bounds[:, 0])
    hi = np.minimum(samples.max(axis=0) + epsilon, c_bounds[:, 1])
    mid = 0.5 * (lo + hi)
    half = np.maximum(0.5 * (hi - lo), h)
    return np.stack([mid - half, mid + half], axis=1)


def _batch(p: AcquisitionProblem, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != p.dim_x:
        raise InputError(f"x has dimension {X.shape[1]}, expected {p.dim_x}")
    return X


def _pairs(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    """All (x_i, c_j) rows, x-major: row i·m + j holds (x_i, c_j)."""
    n, m = X.shape[0], C.shape[0]
    return np.hstack([np.repeat(X, m, axis=0), np.tile(C, (n, 1))])


def expected_ucb_batch(p: AcquisitionProblem, X) -> np.ndarray:
    X = _batch(p, X)
    m = p.center_samples.shape[0]
    values = ucb_batch(p.model, _pairs(X, p.center_samples), p.beta)
    return values.reshape(X.shape[0], m).mean(axis=1)


def expected_ucb(p: AcquisitionProblem, x) -> float:
    """Mean of UCB(x, c) over the centre samples."""
    return float(expected_ucb_batch(p, x)[0])


def _grid_slopes(p: AcquisitionProblem, values: np.ndarray) -> np.ndarray:
    """Largest central-difference gradient norm of UCB values laid out on `p.slope_grid`."""
    n_x = values.shape[0]
    d_c = p.slope_spacing.shape[0]
    if not np.all(p.slope_spacing > 0):
        return np.zeros(n_x)
    per_dim = p.lipschitz_mode.grid_per_dim
    values = values.reshape((n_x,) + (per_dim,) * d_c)
    axes = tuple(range(1, d_c + 1))
    gradient = np.gradient(values, *p.slope_spacing, axis=axes)
    if d_c == 1:
        gradient = [gradient]
    slopes = np.sqrt(sum(g**2 for g in gradient)).reshape(n_x, -1)
    return LIPSCHITZ_SAFETY * slopes.max(axis=1)


def _expected_and_slopes(p: AcquisitionProblem, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # One surrogate call: the centre samples first, then the slope grid.
    m = p.center_samples.shape[0]
    contexts = np.vstack([p.center_samples, p.slope_grid])
    values = ucb_batch(p.model, _pairs(X, contexts), p.beta).reshape(X.shape[0], contexts.shape[0])
    return values[:, :m].mean(axis=1), _grid_slopes(p, values[:, m:])


def _analytic_lipschitz(p: AcquisitionProblem) -> float:
    diameter = float(np.linalg.norm(p.c_bounds[:, 1] - p.c_bounds[:, 0]))
    return 2.0 * mean_norm_bound(p.model) * lipschitz_constant(p.model.kernel, diameter or None)


def ucb_context_lipschitz_batch(p: AcquisitionProblem, X) -> np.ndarray:
    X = _batch(p, X)
    match p.lipschitz_mode:
        case AnalyticLipschitz():
            return np.full(X.shape[0], _analytic_lipschitz(p))
        case NumericLipschitz():
            values = ucb_batch(p.model, _pairs(X, p.slope_grid), p.beta)
            return _grid_slopes(p, values.reshape(X.shape[0], -1))


def ucb_context_lipschitz(p: AcquisitionProblem, x) -> float:
    """Lipschitz constant of c ↦ UCB(x, c) over the contexts the ball reaches."""
    return float(ucb_context_lipschitz_batch(p, x)[0])


def robust_value_batch(p: AcquisitionProblem, X) -> np.ndarray:
    if p.epsilon == 0.0:
        return expected_ucb_batch(p, X)
    X = _batch(p, X)
    match p.lipschitz_mode:
        case AnalyticLipschitz():
            return expected_ucb_batch(p, X) - p.epsilon * _analytic_lipschitz(p)
        case NumericLipschitz():
            expected, slopes = _expected_and_slopes(p, X)
            return expected - p.epsilon * slopes


def robust_value(p: AcquisitionProblem, x) -> float:
    """Expected UCB under the centre minus ε · L_UCB(x)."""
    return float(robust_value_batch(p, x)[0])


def maximize(p: AcquisitionProblem) -> tuple[np.ndarray, float]:
    """The next query point x_t and its robust acquisition value."""
    return multistart_maximize(lambda X: robust_value_batch(p, X), p.x_bounds, p.optimizer)


def maximize_expected_ucb(p: AcquisitionProblem) -> tuple[np.ndarray, float]:
    """Maximize the empirical-risk objective alone, ignoring ε."""
    return multistart_maximize(lambda X: expected_ucb_batch(p, X), p.x_bounds, p.optimizer)


# Baselines


def stableopt_context_box(history, c_bounds) -> np.ndarray:
    """Per-dimension [mean − std, mean + std] of the observed contexts.

    Without history the whole context box is used.
    """
    c_bounds = as_bounds(c_bounds)
    history = np.asarray(history, dtype=float)
    if history.size == 0:
        return c_bounds
    history = history.reshape(-1, c_bounds.shape[0])
    center = history.mean(axis=0)
    spread = history.std(axis=0)
    return np.stack([center - spread, center + spread], axis=1)


def stableopt_select(
    model: SurrogateModel,
    beta: float,
    x_bounds,
    context_box,
    optimizer: MultiStartConfig | None = None,
    grid_per_dim: int = 16,
) -> tuple[np.ndarray, float]:
    """Maximize over x the minimum of UCB(x, c) over a grid of the context box."""
    optimizer = optimizer or MultiStartConfig()
    x_bounds = as_bounds(x_bounds)
    context_box = as_bounds(context_box)
    contexts = np.unique(grid_points(context_box, grid_per_dim), axis=0)
    dim_x = x_bounds.shape[0]

    def worst_case(X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        if X.shape[1] != dim_x:
            raise InputError(f"x has dimension {X.shape[1]}, expected {dim_x}")
        values = ucb_batch(model, _pairs(X, contexts), beta)
        return values.reshape(X.shape[0], contexts.shape[0]).min(axis=1)

    return multistart_maximize(worst_case, x_bounds, optimizer)


def gpucb_select(
    model_x_only: SurrogateModel, beta: float, x_bounds, optimizer: MultiStartConfig | None = None
) -> tuple[np.ndarray, float]:
    """Maximize μ(x) + β·σ(x) of a surrogate that never saw the context."""
    optimizer = optimizer or MultiStartConfig()
    x_bounds = as_bounds(x_bounds)
    if model_x_only.dim != x_bounds.shape[0]:
        raise InputError(
            f"GP-UCB surrogate has dimension {model_x_only.dim}, x box has {x_bounds.shape[0]}"
        )
    return multistart_maximize(lambda X: ucb_batch(model_x_only, X, beta), x_bounds, optimizer)
