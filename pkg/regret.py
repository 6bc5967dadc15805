"""Benchmark oracle and expected-regret bookkeeping.

Expectations under the true context law are Monte-Carlo averages over one
frozen panel of contexts per (environment, step, seed). Every algorithm in a
comparison is scored against the same panel, so regret differences come from
decisions only.
"""

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from environments import Environment
from errors import InputError
from optimizer import PatternSearch, as_bounds, grid_points, pattern_search


logger = logging.getLogger(__name__)

DEFAULT_MC_SAMPLES = 20_000
# Upper bound on objective evaluations held in memory at once.
EVALUATION_CHUNK = 2_000_000


def default_oracle_density(dim_x: int) -> int:
    return 2001 if dim_x == 1 else 201


@dataclass(frozen=True, eq=False)
class OracleResult:
    """x*_t, its expected value and the panel both were computed on."""

    x: np.ndarray
    value: float
    panel: np.ndarray  # (mc_samples, d_c)
    t: int = 1


def context_panel(env: Environment, t: int, mc_samples: int, rng_seed: int) -> np.ndarray:
    """The frozen common-random-number panel for step t."""
    if mc_samples < 1:
        raise InputError(f"mc_samples must be positive, got {mc_samples}")
    rng = np.random.default_rng([rng_seed, t])
    return env.context_at(t).sample(rng, mc_samples)


def expected_values(env: Environment, X, panel: np.ndarray) -> np.ndarray:
    """Panel average of f(x, c) for each row of X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    m = panel.shape[0]
    rows = max(1, EVALUATION_CHUNK // m)
    out = np.empty(X.shape[0])
    for start in range(0, X.shape[0], rows):
        block = X[start : start + rows]
        values = env.evaluate(np.repeat(block, m, axis=0), np.tile(panel, (block.shape[0], 1)))
        out[start : start + rows] = values.reshape(block.shape[0], m).mean(axis=1)
    return out


_ORACLE_CACHE: dict[tuple, OracleResult] = {}


def _oracle_key(env: Environment, t_key: int, density: int, mc_samples: int, rng_seed: int) -> tuple:
    """Everything the oracle depends on. The noise level is not part of it."""
    law = env.context_schedule if env.context_schedule is not None else json.dumps(env.true_context.describe())
    return (env.name, env.objective, env.x_bounds.tobytes(), law, t_key, density, mc_samples, rng_seed)


def oracle_best(
    env: Environment,
    t: int = 1,
    x_grid_density: int | None = None,
    mc_samples: int = DEFAULT_MC_SAMPLES,
    rng_seed: int = 0,
) -> OracleResult:
    """argmax over x of the panel expectation, by dense grid then pattern search.

    Results are cached by environment content, so separately built copies of
    an environment share them. A time-invariant context law caches one result.
    """
    t_key = 1 if env.time_invariant else t
    density = x_grid_density or default_oracle_density(env.dim_x)
    key = _oracle_key(env, t_key, density, mc_samples, rng_seed)
    if key in _ORACLE_CACHE:
        logger.debug("oracle cache hit for %s at t=%d", env.name, t_key)
        return _ORACLE_CACHE[key]

    panel = context_panel(env, t_key, mc_samples, rng_seed)
    bounds = as_bounds(env.x_bounds)
    grid = grid_points(bounds, density)
    values = expected_values(env, grid, panel)
    best = int(np.argmax(values))

    spacing = (bounds[:, 1] - bounds[:, 0]) / max(density - 1, 1)
    x, value = pattern_search(
        lambda X: expected_values(env, X, panel),
        grid[best],
        float(values[best]),
        bounds,
        PatternSearch(max_iterations=80, tolerance=1e-9),
        initial_step=spacing,
    )
    result = OracleResult(x=np.array(x, dtype=float), value=value, panel=panel, t=t_key)
    _ORACLE_CACHE[key] = result
    return result


def clear_oracle_cache() -> None:
    _ORACLE_CACHE.clear()


def instantaneous_regret(env: Environment, x_t, oracle: OracleResult) -> float:
    """E[f(x*_t, c)] − E[f(x_t, c)] on the oracle's panel, clamped at 0."""
    raw = oracle.value - float(expected_values(env, np.atleast_1d(x_t)[None, :], oracle.panel)[0])
    if raw < 0:
        logger.debug("negative regret %.3e at x=%s clamped to 0", raw, np.atleast_1d(x_t).tolist())
        return 0.0
    return raw


@dataclass
class StepRecord:
    t: int
    x: np.ndarray
    c: np.ndarray
    y: float
    eps: float
    r_inst: float
    r_cum: float
    elapsed_ms: float


@dataclass
class Diagnostics:
    """Per-step quantities reported next to the trace, never fed back."""

    t: int
    beta: float
    bar_b: float
    info_gain: float
    lipschitz: float
    rho: float


@dataclass
class RegretTrace:
    """Everything one seed of one algorithm did, step by step."""

    algo: str
    seed: int
    oracle: OracleResult
    steps: list[StepRecord] = field(default_factory=list)
    diagnostics: list[Diagnostics] = field(default_factory=list)

    def append(self, x, c, y: float, eps: float, r_inst: float, elapsed_ms: float) -> StepRecord:
        previous = self.steps[-1].r_cum if self.steps else 0.0
        record = StepRecord(
            t=len(self.steps) + 1,
            x=np.atleast_1d(np.asarray(x, dtype=float)),
            c=np.atleast_1d(np.asarray(c, dtype=float)),
            y=float(y),
            eps=float(eps),
            r_inst=float(r_inst),
            r_cum=previous + float(r_inst),
            elapsed_ms=float(elapsed_ms),
        )
        self.steps.append(record)
        return record

    @property
    def horizon(self) -> int:
        return len(self.steps)

    def instantaneous(self) -> np.ndarray:
        return np.array([s.r_inst for s in self.steps])

    def cumulative(self) -> np.ndarray:
        return np.array([s.r_cum for s in self.steps])

    def total_seconds(self) -> float:
        return sum(s.elapsed_ms for s in self.steps) / 1000.0


def cumulative(trace: RegretTrace | list[float] | np.ndarray) -> np.ndarray:
    """Prefix sums R_t of the instantaneous regrets."""
    r = trace.instantaneous() if isinstance(trace, RegretTrace) else np.asarray(trace, dtype=float)
    return np.cumsum(r)
