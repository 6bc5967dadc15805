"""Wasserstein ambiguity sets: where the ball is centred and how wide it is.

The centre is either the empirical distribution of the contexts seen so far
(data-driven setting) or a parametric sampler handed to the learner (general
setting). The radius follows a schedule indexed by the step t.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from errors import InputError


# Context distributions


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Uniform distribution over a finite set of context points."""

    points: np.ndarray  # (m, d_c)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        idx = rng.integers(0, self.points.shape[0], size=n)
        return self.points[idx]

    def enumerate(self) -> np.ndarray:
        return self.points

    def mean(self) -> np.ndarray:
        return self.points.mean(axis=0)


@dataclass(frozen=True, eq=False)
class ParametricDistribution:
    """Independent per-dimension normal or uniform contexts, optionally clipped.

    For "normal" the parameters are (mean, std); for "uniform" (low, high).
    """

    family: str
    params: tuple[float, float]
    dim: int = 1
    clip: tuple[float, float] | None = None
    _frozen: object = field(init=False, repr=False)

    def __post_init__(self):
        a, b = (float(v) for v in self.params)
        match self.family:
            case "normal":
                if not b > 0:
                    raise InputError(f"normal context needs a positive std, got {b}")
                frozen = stats.norm(loc=a, scale=b)
            case "uniform":
                if not b > a:
                    raise InputError(f"uniform context needs low < high, got ({a}, {b})")
                frozen = stats.uniform(loc=a, scale=b - a)
            case _:
                raise InputError(f"unknown context family {self.family!r}")
        object.__setattr__(self, "params", (a, b))
        object.__setattr__(self, "_frozen", frozen)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        draws = self._frozen.rvs(size=(n, self.dim), random_state=rng)
        draws = np.asarray(draws, dtype=float).reshape(n, self.dim)
        if self.clip is not None:
            draws = np.clip(draws, *self.clip)
        return draws

    def mean(self) -> np.ndarray:
        return np.full(self.dim, float(self._frozen.mean()))

    def describe(self) -> dict:
        """JSON form, e.g. {"normal": [0.5, 0.2], "dim": 1, "clip": [0.0, 1.0]}."""
        spec = {self.family: list(self.params), "dim": self.dim}
        if self.clip is not None:
            spec["clip"] = list(self.clip)
        return spec


ContextDistribution = DiscreteDistribution | ParametricDistribution


# Centres and radius schedules


@dataclass(frozen=True, eq=False)
class EmpiricalCenter:
    """Centre at the empirical distribution of the contexts observed so far."""

    history: tuple[tuple[float, ...], ...] = ()


@dataclass(frozen=True, eq=False)
class ParametricCenter:
    distribution: ParametricDistribution


Center = EmpiricalCenter | ParametricCenter


@dataclass(frozen=True)
class Constant:
    epsilon: float


@dataclass(frozen=True)
class InverseSqrt:
    epsilon0: float = 1.0


@dataclass(frozen=True)
class Explicit:
    radii: tuple[float, ...]


RadiusSchedule = Constant | InverseSqrt | Explicit


@dataclass(frozen=True, eq=False)
class AmbiguityModel:
    """A centre, a radius schedule and the context box the centre lives in."""

    center: Center
    radius: RadiusSchedule
    c_bounds: np.ndarray  # (d_c, 2)

    def __post_init__(self):
        bounds = np.atleast_2d(np.asarray(self.c_bounds, dtype=float))
        if bounds.shape[1] != 2 or np.any(bounds[:, 1] < bounds[:, 0]):
            raise InputError(f"context bounds must be (d_c, 2) with low <= high, got {self.c_bounds!r}")
        object.__setattr__(self, "c_bounds", bounds)
        match self.radius:
            case Constant(epsilon=eps) if eps < 0:
                raise InputError(f"radius must be nonnegative, got {eps}")
            case InverseSqrt(epsilon0=eps) if eps < 0:
                raise InputError(f"radius must be nonnegative, got {eps}")
            case Explicit(radii=radii) if any(r < 0 for r in radii):
                raise InputError("explicit radii must all be nonnegative")

    @property
    def dim(self) -> int:
        return self.c_bounds.shape[0]

    def with_context(self, c) -> "AmbiguityModel":
        """Record an observed context; parametric centres ignore it."""
        match self.center:
            case EmpiricalCenter(history=history):
                point = tuple(float(v) for v in np.atleast_1d(c))
                if len(point) != self.dim:
                    raise InputError(f"context has dimension {len(point)}, expected {self.dim}")
                return replace(self, center=EmpiricalCenter(history + (point,)))
            case ParametricCenter():
                return self


def center_at(model: AmbiguityModel, t: int) -> ContextDistribution:
    """The ball centre at step t.

    The empirical centre uses exactly the contexts c_1..c_{t-1}; before any
    context is seen it is a Dirac at the midpoint of the context box.
    """
    if t < 1:
        raise InputError(f"steps start at 1, got {t}")
    match model.center:
        case EmpiricalCenter(history=history):
            seen = history[: t - 1]
            if not seen:
                midpoint = model.c_bounds.mean(axis=1)
                return DiscreteDistribution(midpoint[None, :])
            return DiscreteDistribution(np.asarray(seen, dtype=float))
        case ParametricCenter(distribution=distribution):
            return distribution


def radius_at(model: AmbiguityModel, t: int) -> float:
    if t < 1:
        raise InputError(f"steps start at 1, got {t}")
    match model.radius:
        case Constant(epsilon=eps):
            return float(eps)
        case InverseSqrt(epsilon0=eps0):
            return float(eps0 / np.sqrt(t))
        case Explicit(radii=radii):
            if t > len(radii):
                raise InputError(f"explicit radius schedule has {len(radii)} entries, step {t} requested")
            return float(radii[t - 1])


def center_samples(
    distribution: ContextDistribution, rng: np.random.Generator, n_samples: int = 64
) -> np.ndarray:
    """Points to average the acquisition over.

    Empirical centres are enumerated exactly; parametric ones are reduced to
    a Monte-Carlo sample drawn with the caller's rng.
    """
    match distribution:
        case DiscreteDistribution():
            return distribution.enumerate()
        case ParametricDistribution():
            return distribution.sample(rng, n_samples)


def robust_gap_bound(epsilon: float, lipschitz: float) -> float:
    """Largest change of an L-Lipschitz expectation over a Wasserstein ball of radius ε."""
    if epsilon < 0 or lipschitz < 0:
        raise InputError("epsilon and lipschitz must be nonnegative")
    return float(epsilon * lipschitz)


def correction_term(bar_b: float, lipschitz: float, t: int) -> float:
    """ρ_t = (1 + 2·L·B̄_t) / t, reported alongside the data-driven radius."""
    if t < 1:
        raise InputError(f"steps start at 1, got {t}")
    return float((1.0 + 2.0 * lipschitz * bar_b) / t)


def wasserstein_1d(samples_a, samples_b) -> float:
    """Type-1 Wasserstein distance between two equal-size 1-D empirical samples."""
    a = np.asarray(samples_a, dtype=float).reshape(-1)
    b = np.asarray(samples_b, dtype=float).reshape(-1)
    if a.size == 0 or a.size != b.size:
        raise InputError(f"need equal nonempty sample counts, got {a.size} and {b.size}")
    return float(stats.wasserstein_distance(a, b))
