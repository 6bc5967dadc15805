"""Black-box objectives with an exogenous context, and how they are observed.

The framework maximizes. Benchmarks that are conventionally minimized
(Ackley, Branin, Hartmann, Three Humps Camel) are kept below in their usual
form and negated inside the Environment.

Context coupling for the synthetic suite:
  ackley    2-D Ackley at (x, c); c = 0 is the neutral value.
  branin    Branin at (x1 + 3(c1 - 0.5), x2 + 3(c2 - 0.5)); c = (0.5, 0.5) is neutral.
  hartmann  3-D Hartmann at (x1, x2, c): the context is the trailing input.
"""

from collections.abc import Callable
from dataclasses import dataclass, field, replace

import numpy as np

from ambiguity import ParametricDistribution
from errors import InputError


DEFAULT_NOISE_STD = 0.01
BOUNDS_TOLERANCE = 1e-12

Objective = Callable[[np.ndarray, np.ndarray], np.ndarray]


# Benchmark formulas, conventional (minimization) form, vectorized over rows.


def ackley(Z) -> np.ndarray:
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    mean_sq = np.mean(Z**2, axis=1)
    mean_cos = np.mean(np.cos(2.0 * np.pi * Z), axis=1)
    return -20.0 * np.exp(-0.2 * np.sqrt(mean_sq)) - np.exp(mean_cos) + 20.0 + np.e


def branin(Z) -> np.ndarray:
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    x1, x2 = Z[:, 0], Z[:, 1]
    b = 5.1 / (4.0 * np.pi**2)
    c = 5.0 / np.pi
    t = 1.0 / (8.0 * np.pi)
    return (x2 - b * x1**2 + c * x1 - 6.0) ** 2 + 10.0 * (1.0 - t) * np.cos(x1) + 10.0


HARTMANN3_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
HARTMANN3_A = np.array(
    [
        [3.0, 10.0, 30.0],
        [0.1, 10.0, 35.0],
        [3.0, 10.0, 30.0],
        [0.1, 10.0, 35.0],
    ]
)
HARTMANN3_P = 1e-4 * np.array(
    [
        [3689, 1170, 2673],
        [4699, 4387, 7470],
        [1091, 8732, 5547],
        [381, 5743, 8828],
    ]
)


def hartmann3(Z) -> np.ndarray:
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    inner = np.sum(HARTMANN3_A[None, :, :] * (Z[:, None, :] - HARTMANN3_P[None, :, :]) ** 2, axis=2)
    return -np.sum(HARTMANN3_ALPHA * np.exp(-inner), axis=1)


def three_humps_camel(x, c) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    c = np.asarray(c, dtype=float)
    return 2.0 * x**2 - 1.05 * x**4 + x**6 / 6.0 + x * c + c**2


# Objectives in maximization form: X is (n, d_x), C is (n, d_c).


def general_objective(X, C) -> np.ndarray:
    x = np.abs(np.asarray(X, dtype=float)[:, 0])
    c = np.asarray(C, dtype=float)[:, 0]
    return 1.0 - np.abs(c - 0.5) / (x + 0.2) - np.sqrt(x + 0.05)


def three_humps_objective(X, C) -> np.ndarray:
    return -three_humps_camel(np.asarray(X)[:, 0], np.asarray(C)[:, 0])


def ackley_objective(X, C) -> np.ndarray:
    return -ackley(np.hstack([X, C]))


BRANIN_CONTEXT_SHIFT = 3.0


def branin_objective(X, C) -> np.ndarray:
    shifted = np.asarray(X, dtype=float) + BRANIN_CONTEXT_SHIFT * (np.asarray(C, dtype=float) - 0.5)
    return -branin(shifted)


def hartmann_objective(X, C) -> np.ndarray:
    return -hartmann3(np.hstack([X, C]))


@dataclass(frozen=True, eq=False)
class Environment:
    """An objective f(x, c), its boxes, the true context law and the noise level."""

    name: str
    objective: Objective
    x_bounds: np.ndarray  # (d_x, 2)
    c_bounds: np.ndarray  # (d_c, 2); contexts may leave it when the law is unclipped
    true_context: ParametricDistribution
    noise_std: float = DEFAULT_NOISE_STD
    center: ParametricDistribution | None = None  # ambiguity centre handed to the learner, if any
    context_schedule: Callable[[int], ParametricDistribution] | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.noise_std < 0:
            raise InputError(f"noise_std must be nonnegative, got {self.noise_std}")
        object.__setattr__(self, "x_bounds", np.atleast_2d(np.asarray(self.x_bounds, dtype=float)))
        object.__setattr__(self, "c_bounds", np.atleast_2d(np.asarray(self.c_bounds, dtype=float)))
        if self.true_context.dim != self.dim_c:
            raise InputError(f"{self.name}: context law has dimension {self.true_context.dim}, box {self.dim_c}")

    @property
    def dim_x(self) -> int:
        return self.x_bounds.shape[0]

    @property
    def dim_c(self) -> int:
        return self.c_bounds.shape[0]

    @property
    def time_invariant(self) -> bool:
        return self.context_schedule is None

    def context_at(self, t: int) -> ParametricDistribution:
        """True context distribution P*_t."""
        if self.context_schedule is None:
            return self.true_context
        return self.context_schedule(t)

    def evaluate(self, X, C) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        C = np.atleast_2d(np.asarray(C, dtype=float))
        if X.shape[1] != self.dim_x or C.shape[1] != self.dim_c:
            raise InputError(
                f"{self.name}: expected x of dimension {self.dim_x} and c of dimension {self.dim_c}"
            )
        return np.asarray(self.objective(X, C), dtype=float)

    def contains_x(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(
            np.all(x >= self.x_bounds[:, 0] - BOUNDS_TOLERANCE)
            and np.all(x <= self.x_bounds[:, 1] + BOUNDS_TOLERANCE)
        )


def observe(env: Environment, x, c, rng: np.random.Generator) -> float:
    """y = f(x, c) + η with η ~ N(0, noise_std²) drawn from the caller's rng."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if x.shape != (env.dim_x,):
        raise InputError(f"{env.name}: x has shape {x.shape}, expected ({env.dim_x},)")
    if not env.contains_x(x):
        raise InputError(f"{env.name}: x = {x.tolist()} lies outside {env.x_bounds.tolist()}")
    value = float(env.evaluate(x[None, :], c[None, :])[0])
    return value + float(rng.normal(0.0, env.noise_std)) if env.noise_std > 0 else value


def clipped_unit_normal(dim: int) -> ParametricDistribution:
    """c ~ N(0.5, 0.2²) per dimension, clipped to [0, 1]."""
    return ParametricDistribution("normal", (0.5, 0.2), dim=dim, clip=(0.0, 1.0))


def general_setting_env(noise_std: float = DEFAULT_NOISE_STD) -> Environment:
    """Centre N(0.5, 0.1) handed to the learner, truth N(0.6, 0.2), contexts unclipped."""
    return Environment(
        name="general",
        objective=general_objective,
        x_bounds=np.array([[-1.0, 1.0]]),
        c_bounds=np.array([[-0.2, 1.4]]),
        true_context=ParametricDistribution("normal", (0.6, 0.2)),
        noise_std=noise_std,
        center=ParametricDistribution("normal", (0.5, 0.1)),
    )


def three_humps_env(noise_std: float = DEFAULT_NOISE_STD) -> Environment:
    return Environment(
        name="three_humps",
        objective=three_humps_objective,
        x_bounds=np.array([[-1.0, 1.0]]),
        c_bounds=np.array([[-1.0, 1.0]]),
        true_context=ParametricDistribution("uniform", (-1.0, 1.0)),
        noise_std=noise_std,
    )


def ackley_env(noise_std: float = DEFAULT_NOISE_STD) -> Environment:
    return Environment(
        name="ackley",
        objective=ackley_objective,
        x_bounds=np.array([[-1.0, 1.0]]),
        c_bounds=np.array([[0.0, 1.0]]),
        true_context=clipped_unit_normal(1),
        noise_std=noise_std,
    )


def branin_env(noise_std: float = DEFAULT_NOISE_STD) -> Environment:
    return Environment(
        name="branin",
        objective=branin_objective,
        x_bounds=np.array([[-5.0, 10.0], [0.0, 15.0]]),
        c_bounds=np.array([[0.0, 1.0], [0.0, 1.0]]),
        true_context=clipped_unit_normal(2),
        noise_std=noise_std,
    )


def hartmann_env(noise_std: float = DEFAULT_NOISE_STD) -> Environment:
    return Environment(
        name="hartmann",
        objective=hartmann_objective,
        x_bounds=np.array([[0.0, 1.0], [0.0, 1.0]]),
        c_bounds=np.array([[0.0, 1.0]]),
        true_context=clipped_unit_normal(1),
        noise_std=noise_std,
    )


def synthetic_suite(noise_std: float = DEFAULT_NOISE_STD) -> list[Environment]:
    return [ackley_env(noise_std), branin_env(noise_std), hartmann_env(noise_std)]


ENVIRONMENTS: dict[str, Callable[..., Environment]] = {
    "general": general_setting_env,
    "three_humps": three_humps_env,
    "ackley": ackley_env,
    "branin": branin_env,
    "hartmann": hartmann_env,
}


def get_environment(name: str, noise_std: float | None = None) -> Environment:
    """Look up an environment by name, optionally overriding its noise level."""
    if name not in ENVIRONMENTS:
        raise InputError(f"unknown environment {name!r}; choose from {sorted(ENVIRONMENTS)}")
    env = ENVIRONMENTS[name]()
    if noise_std is not None:
        env = replace(env, noise_std=noise_std)
    return env
