"""Gradient-free multi-start maximization over a box.

Candidates come from a regular grid (plus optional random points); the best
`n_starts` of them seed a compass pattern search. Objectives are batch
functions: an (n, d) array of points in, an (n,) array of values out.
"""

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from errors import InputError


BatchObjective = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PatternSearch:
    """Compass search: poll ±step along each axis, shrink the step on failure."""

    max_iterations: int = 60
    shrink: float = 0.5
    initial_step: float = 0.1  # fraction of the box width
    tolerance: float = 1e-6  # stop once every step is below this fraction of the width

    def __post_init__(self):
        if self.max_iterations < 1:
            raise InputError("pattern search needs at least one iteration")
        if not 0 < self.shrink < 1:
            raise InputError(f"shrink factor must lie in (0, 1), got {self.shrink}")


@dataclass(frozen=True)
class MultiStartConfig:
    n_starts: int = 8
    n_grid_per_dim: int | None = None  # None: 25 per axis up to 2-D, 7 in 3-D and above
    local_search: PatternSearch = field(default_factory=PatternSearch)
    rng_seed: int = 0
    n_random: int = 0

    def __post_init__(self):
        if self.n_starts < 1:
            raise InputError(f"n_starts must be at least 1, got {self.n_starts}")
        if self.n_grid_per_dim is not None and self.n_grid_per_dim < 1:
            raise InputError(f"n_grid_per_dim must be positive, got {self.n_grid_per_dim}")

    def grid_density(self, dim: int) -> int:
        if self.n_grid_per_dim is not None:
            return self.n_grid_per_dim
        return default_grid_density(dim)


def default_grid_density(dim: int) -> int:
    return 25 if dim <= 2 else 7


def as_bounds(bounds) -> np.ndarray:
    """Validate a box given as (d, 2) rows of (low, high)."""
    bounds = np.atleast_2d(np.asarray(bounds, dtype=float))
    if bounds.ndim != 2 or bounds.shape[1] != 2 or bounds.shape[0] == 0:
        raise InputError(f"bounds must have shape (d, 2), got {bounds.shape}")
    if np.any(bounds[:, 1] < bounds[:, 0]) or not np.all(np.isfinite(bounds)):
        raise InputError(f"bounds must be finite with low <= high, got {bounds.tolist()}")
    return bounds


def grid_points(bounds, per_dim: int) -> np.ndarray:
    """Regular grid over the box in C order (last axis varies fastest)."""
    bounds = as_bounds(bounds)
    axes = [np.linspace(lo, hi, per_dim) for lo, hi in bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def pattern_search(
    objective: BatchObjective,
    start: np.ndarray,
    start_value: float,
    bounds: np.ndarray,
    settings: PatternSearch,
    initial_step: np.ndarray | None = None,
) -> tuple[np.ndarray, float]:
    """Climb from `start`; only strict improvements are accepted."""
    width = bounds[:, 1] - bounds[:, 0]
    step = settings.initial_step * width if initial_step is None else np.array(initial_step, dtype=float)
    floor = settings.tolerance * np.maximum(width, 1e-300)
    x, value = np.array(start, dtype=float), float(start_value)
    dim = x.size
    directions = np.concatenate([np.eye(dim), -np.eye(dim)])

    for _ in range(settings.max_iterations):
        if np.all(step <= floor):
            break
        polls = np.clip(x + directions * step, bounds[:, 0], bounds[:, 1])
        values = np.asarray(objective(polls), dtype=float)
        best = int(np.argmax(values))
        if values[best] > value:
            x, value = polls[best], float(values[best])
        else:
            step = step * settings.shrink
    return x, value


def multistart_maximize(
    objective: BatchObjective, bounds, config: MultiStartConfig
) -> tuple[np.ndarray, float]:
    """Maximize a batch objective over a box.

    Deterministic given `config.rng_seed`. The returned value is the objective
    at the returned point and is never below the best seed candidate.
    """
    bounds = as_bounds(bounds)
    candidates = grid_points(bounds, config.grid_density(bounds.shape[0]))
    if config.n_random:
        rng = np.random.default_rng(config.rng_seed)
        extra = rng.uniform(bounds[:, 0], bounds[:, 1], size=(config.n_random, bounds.shape[0]))
        candidates = np.vstack([candidates, extra])
    values = np.asarray(objective(candidates), dtype=float)

    # Stable sort: equal values keep grid order, so ties go to the lowest index.
    order = np.argsort(-values, kind="stable")[: config.n_starts]
    best_x, best_value = candidates[order[0]], float(values[order[0]])
    for idx in order:
        x, value = pattern_search(
            objective, candidates[idx], float(values[idx]), bounds, config.local_search
        )
        if value > best_value:
            best_x, best_value = x, value
    return np.array(best_x, dtype=float), best_value
