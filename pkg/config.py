"""Experiment configuration: a strict JSON schema and its loader.

Unknown keys are rejected everywhere. Defaults: T = 100 over 15 seeds,
β = 1.5, λ = 0.1, an SE kernel with ℓ = 0.2 on inputs normalized to the
unit box and ε₀ = 1.0.
"""

import json
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from errors import ConfigError


ALGORITHMS = ("wdrbo", "erbo", "gpucb", "stableopt")
Algorithm = Literal["wdrbo", "erbo", "gpucb", "stableopt"]
EnvironmentName = Literal["general", "three_humps", "ackley", "branin", "hartmann"]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)


class KernelConfig(StrictModel):
    family: Literal["se", "matern52"] = "se"
    # In units of the normalized [0, 1] box.
    lengthscale: float | list[float] = 0.2
    output_scale: float = Field(1.0, gt=0)

    @field_validator("lengthscale")
    @classmethod
    def positive_lengthscale(cls, value):
        values = value if isinstance(value, list) else [value]
        if not values or any(v <= 0 for v in values):
            raise ValueError("lengthscales must be strictly positive")
        return value


class NormalCenter(StrictModel):
    normal: tuple[float, float]


class UniformCenter(StrictModel):
    uniform: tuple[float, float]


class ConstantRadius(StrictModel):
    constant: float = Field(ge=0)


class InverseSqrtRadius(StrictModel):
    inv_sqrt: float = Field(ge=0)


class ExplicitRadius(StrictModel):
    explicit: list[float]

    @field_validator("explicit")
    @classmethod
    def nonnegative(cls, value):
        if any(v < 0 for v in value):
            raise ValueError("radii must be nonnegative")
        return value


class AmbiguityConfig(StrictModel):
    # None: the environment's own centre if it has one, else the empirical centre.
    center: Literal["empirical"] | NormalCenter | UniformCenter | None = None
    radius: ConstantRadius | InverseSqrtRadius | ExplicitRadius = InverseSqrtRadius(inv_sqrt=1.0)


class OptimizerConfig(StrictModel):
    starts: int = Field(8, ge=1)
    grid: int | None = Field(None, ge=1)
    max_iterations: int = Field(60, ge=1)
    shrink: float = Field(0.5, gt=0, lt=1)
    seed: int = 0


class AcquisitionConfig(StrictModel):
    algo: Algorithm = "wdrbo"
    beta: float | Literal["theoretical"] = 1.5
    lipschitz: Literal["numeric", "analytic"] = "numeric"
    lipschitz_grid: int = Field(32, ge=2)
    center_samples: int = Field(64, ge=1)
    stableopt_grid: int = Field(16, ge=1)
    optimizer: OptimizerConfig = OptimizerConfig()


class OracleConfig(StrictModel):
    grid: int | None = Field(None, ge=2)
    mc_samples: int = Field(20_000, ge=1)
    seed: int = 0


class ExperimentConfig(StrictModel):
    env: EnvironmentName = "general"
    noise_std: float | None = Field(None, ge=0)
    kernel: KernelConfig = KernelConfig()
    lam: float = Field(0.1, gt=0, alias="lambda")
    noise_bound: float = Field(1.0, ge=0)  # R
    norm_bound: float = Field(1.0, ge=0)  # B
    delta: float = Field(0.05, gt=0, lt=1)
    ambiguity: AmbiguityConfig = AmbiguityConfig()
    acquisition: AcquisitionConfig = AcquisitionConfig()
    algos: list[Algorithm] | None = None  # for `compare`; defaults to [acquisition.algo]
    oracle: OracleConfig = OracleConfig()
    T: int = Field(100, ge=1)
    seeds: list[int] = Field(default_factory=lambda: list(range(15)))
    outdir: str = "runs"
    workers: int = Field(1, ge=1)
    timing_in_trace: bool = False

    @field_validator("seeds")
    @classmethod
    def distinct_seeds(cls, value):
        if not value:
            raise ValueError("at least one seed is required")
        if len(set(value)) != len(value):
            raise ValueError("seeds must be distinct")
        return value

    @field_validator("algos")
    @classmethod
    def distinct_algos(cls, value):
        if value is not None and (not value or len(set(value)) != len(value)):
            raise ValueError("algos must be a nonempty list without repeats")
        return value

    @model_validator(mode="after")
    def schedule_covers_horizon(self):
        radius = self.ambiguity.radius
        if isinstance(radius, ExplicitRadius) and len(radius.explicit) < self.T:
            raise ValueError(f"explicit radius schedule has {len(radius.explicit)} entries but T = {self.T}")
        return self

    @property
    def algorithms(self) -> list[str]:
        return list(self.algos) if self.algos else [self.acquisition.algo]

    def resolved(self) -> dict:
        """The full config with defaults filled in, as written to meta.json."""
        return self.model_dump(mode="json", by_alias=True)


def _format_errors(error: ValidationError) -> str:
    lines = []
    for item in error.errors():
        path = ".".join(str(part) for part in item["loc"]) or "<root>"
        lines.append(f"  {path}: {item['msg']}")
    return "\n".join(lines)


def parse_config(data: dict, source: str = "<config>") -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid config {source}:\n{_format_errors(e)}") from e


def load_config(path: str | Path) -> ExperimentConfig:
    """Read and validate a JSON experiment config."""
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must contain a JSON object")
    return parse_config(data, source=str(path))
