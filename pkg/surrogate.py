"""Regularized least-squares (kernel ridge) surrogate in the RKHS of a kernel.

The model keeps the Cholesky factor of K + λI so that the posterior mean,
the posterior scale, the confidence width β_t, the mean-norm bound B̄_t and the
log-det information gain all come from one factorization. Appending an
observation extends the factor by one row instead of refactorizing.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular

from errors import InputError, NumericalError
from kernel import KernelSpec, cross_gram


logger = logging.getLogger(__name__)

# Jitter ladder, as multiples of trace(K + λI).
JITTER_START = 1e-10
JITTER_GROWTH = 10.0
JITTER_MAX = 1e-4

VARIANCE_TOLERANCE = 1e-10


@dataclass(frozen=True)
class FixedBeta:
    """Use the same confidence width at every step."""

    value: float = 1.5


@dataclass(frozen=True)
class TheoreticalBeta:
    """Use the finite-sample confidence width built from R, B, δ and the log-det."""


BetaMode = FixedBeta | TheoreticalBeta


@dataclass(frozen=True, eq=False)
class SurrogateModel:
    """A fitted kernel ridge estimator. Immutable: `update` returns a new model."""

    kernel: KernelSpec
    lam: float
    Z: np.ndarray  # (n, d) observed inputs z_i = (x_i, c_i)
    y: np.ndarray  # (n,)
    chol: np.ndarray  # lower factor of K + (λ + jitter) I
    alpha: np.ndarray  # (K + λI)^-1 y
    noise: float = 1.0  # R, sub-Gaussian noise bound
    norm_bound: float = 1.0  # B, RKHS norm bound of the objective
    delta: float = 0.05
    beta_mode: BetaMode = field(default_factory=FixedBeta)
    jitter: float = 0.0

    @property
    def dim(self) -> int:
        return self.Z.shape[1]

    @property
    def n(self) -> int:
        return self.Z.shape[0]


def _validate_hyperparameters(lam: float, delta: float, noise: float, norm_bound: float) -> None:
    if not lam > 0:
        raise InputError(f"regularizer lambda must be positive, got {lam}")
    if not 0 < delta < 1:
        raise InputError(f"delta must lie in (0, 1), got {delta}")
    if noise < 0 or norm_bound < 0:
        raise InputError("noise bound R and norm bound B must be nonnegative")


def _factorize(A: np.ndarray) -> tuple[np.ndarray, float]:
    """Cholesky of A, escalating diagonal jitter on failure."""
    if A.size == 0:
        return np.zeros((0, 0)), 0.0
    try:
        return cholesky(A, lower=True), 0.0
    except LinAlgError:
        pass
    trace = float(np.trace(A))
    jitter = JITTER_START * trace
    while jitter <= JITTER_MAX * trace:
        logger.debug("Cholesky failed, retrying with jitter %.3e", jitter)
        try:
            chol = cholesky(A + jitter * np.eye(A.shape[0]), lower=True)
            logger.warning("Cholesky needed jitter %.3e on %d points", jitter, A.shape[0])
            return chol, jitter
        except LinAlgError:
            jitter *= JITTER_GROWTH
    raise NumericalError(
        f"Cholesky of a {A.shape[0]}x{A.shape[0]} kernel system failed after jitter escalation",
        condition=float(np.linalg.cond(A)),
    )


def fit(
    kernel: KernelSpec,
    Z,
    y,
    *,
    lam: float,
    noise: float = 1.0,
    norm_bound: float = 1.0,
    delta: float = 0.05,
    beta_mode: BetaMode | None = None,
    dim: int | None = None,
) -> SurrogateModel:
    """Fit the estimator on observed inputs Z (n × d) and outputs y (n,).

    With no data the result is the prior-only model; pass `dim` so that
    queries can still be checked for dimension.
    """
    _validate_hyperparameters(lam, delta, noise, norm_bound)
    y = np.asarray(y, dtype=float).reshape(-1)
    Z = np.asarray(Z, dtype=float)
    if Z.size == 0:
        if dim is None:
            raise InputError("an empty dataset needs an explicit input dimension")
        Z = np.zeros((0, dim))
    Z = np.atleast_2d(Z)
    if dim is not None and Z.shape[1] != dim:
        raise InputError(f"inputs have dimension {Z.shape[1]}, expected {dim}")
    if Z.shape[0] != y.shape[0]:
        raise InputError(f"{Z.shape[0]} inputs but {y.shape[0]} outputs")
    if not np.all(np.isfinite(y)):
        raise InputError("observed outputs must be finite")
    kernel.check_dimension(Z.shape[1])

    A = cross_gram(kernel, Z, Z) if Z.shape[0] else np.zeros((0, 0))
    A = 0.5 * (A + A.T) + lam * np.eye(Z.shape[0])
    chol, jitter = _factorize(A)
    alpha = cho_solve((chol, True), y) if y.size else np.zeros(0)
    return SurrogateModel(
        kernel=kernel,
        lam=lam,
        Z=Z,
        y=y,
        chol=chol,
        alpha=alpha,
        noise=noise,
        norm_bound=norm_bound,
        delta=delta,
        beta_mode=beta_mode if beta_mode is not None else FixedBeta(),
        jitter=jitter,
    )


def refit(model: SurrogateModel, Z, y) -> SurrogateModel:
    """Fit a new dataset with the hyperparameters of an existing model."""
    return fit(
        model.kernel,
        Z,
        y,
        lam=model.lam,
        noise=model.noise,
        norm_bound=model.norm_bound,
        delta=model.delta,
        beta_mode=model.beta_mode,
        dim=model.dim,
    )


def update(model: SurrogateModel, z, y: float) -> SurrogateModel:
    """Append one observation by extending the Cholesky factor by a row."""
    z = _as_point(model, z)
    y = float(y)
    if not np.isfinite(y):
        raise InputError("observed outputs must be finite")
    Z = np.vstack([model.Z, z[None, :]])
    y_all = np.append(model.y, y)

    k_new = cross_gram(model.kernel, model.Z, z[None, :])[:, 0] if model.n else np.zeros(0)
    k_self = model.kernel.output_scale + model.lam + model.jitter
    row = solve_triangular(model.chol, k_new, lower=True) if model.n else np.zeros(0)
    pivot = k_self - float(row @ row)
    if pivot <= JITTER_START * k_self:
        # The new point is numerically a duplicate: refactorize with jitter.
        return refit(model, Z, y_all)

    n = model.n
    chol = np.zeros((n + 1, n + 1))
    chol[:n, :n] = model.chol
    chol[n, :n] = row
    chol[n, n] = np.sqrt(pivot)
    alpha = cho_solve((chol, True), y_all)
    return SurrogateModel(
        kernel=model.kernel,
        lam=model.lam,
        Z=Z,
        y=y_all,
        chol=chol,
        alpha=alpha,
        noise=model.noise,
        norm_bound=model.norm_bound,
        delta=model.delta,
        beta_mode=model.beta_mode,
        jitter=model.jitter,
    )


def _as_point(model: SurrogateModel, z) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.shape != (model.dim,):
        raise InputError(f"query has shape {z.shape}, expected ({model.dim},)")
    return z


def _as_batch(model: SurrogateModel, Zq) -> np.ndarray:
    Zq = np.atleast_2d(np.asarray(Zq, dtype=float))
    if Zq.shape[1] != model.dim:
        raise InputError(f"queries have dimension {Zq.shape[1]}, expected {model.dim}")
    return Zq


def predict(model: SurrogateModel, Zq) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and scale at each row of Zq."""
    Zq = _as_batch(model, Zq)
    prior = np.full(Zq.shape[0], model.kernel.output_scale)
    if model.n == 0:
        return np.zeros(Zq.shape[0]), np.sqrt(prior / model.lam)

    Kq = cross_gram(model.kernel, model.Z, Zq)  # (n, m)
    mean = Kq.T @ model.alpha
    V = solve_triangular(model.chol, Kq, lower=True)
    radicand = (prior - np.einsum("ij,ij->j", V, V)) / model.lam
    worst = float(radicand.min())
    if worst < -VARIANCE_TOLERANCE:
        raise NumericalError(f"posterior variance radicand {worst:.3e} below tolerance")
    return mean, np.sqrt(np.maximum(radicand, 0.0))


def posterior_mean(model: SurrogateModel, z) -> float:
    """μ(z) = k_t(z)ᵀ (K_t + λI)⁻¹ y."""
    return float(predict(model, _as_point(model, z)[None, :])[0][0])


def posterior_std(model: SurrogateModel, z) -> float:
    """σ(z) = sqrt((k(z, z) − k_t(z)ᵀ (K_t + λI)⁻¹ k_t(z)) / λ)."""
    return float(predict(model, _as_point(model, z)[None, :])[1][0])


def information_gain(model: SurrogateModel) -> float:
    """log det(I + K/λ), read off the Cholesky diagonal."""
    if model.n == 0:
        return 0.0
    logdet = 2.0 * float(np.sum(np.log(np.diag(model.chol))))
    return logdet - model.n * float(np.log(model.lam))


def _confidence_radius(model: SurrogateModel) -> float:
    """R · sqrt(2 log(det(I + K/λ)^(1/2) / δ))."""
    return model.noise * float(np.sqrt(2.0 * (0.5 * information_gain(model) - np.log(model.delta))))


def beta(model: SurrogateModel, t: int) -> float:
    """Confidence width β_t for step t; the model must hold t − 1 observations."""
    if t < 1 or model.n != t - 1:
        raise InputError(f"beta for step {t} needs a model fitted on {t - 1} points, got {model.n}")
    match model.beta_mode:
        case FixedBeta(value=value):
            return float(value)
        case TheoreticalBeta():
            return _confidence_radius(model) + float(np.sqrt(model.lam)) * model.norm_bound


def mean_norm_bound(model: SurrogateModel) -> float:
    """High-probability bound B̄_t on the RKHS norm of the fitted mean."""
    return _confidence_radius(model) / float(np.sqrt(model.lam)) + model.norm_bound


def rkhs_norm(model: SurrogateModel) -> float:
    """‖μ‖ in the RKHS, sqrt(αᵀ K α)."""
    if model.n == 0:
        return 0.0
    K = cross_gram(model.kernel, model.Z, model.Z)
    return float(np.sqrt(max(float(model.alpha @ K @ model.alpha), 0.0)))


def ucb_batch(model: SurrogateModel, Zq, beta_value: float) -> np.ndarray:
    mean, std = predict(model, Zq)
    return mean + beta_value * std


def ucb(model: SurrogateModel, z, beta_value: float) -> float:
    mean, std = predict(model, _as_point(model, z)[None, :])
    return float(mean[0] + beta_value * std[0])


def lcb(model: SurrogateModel, z, beta_value: float) -> float:
    mean, std = predict(model, _as_point(model, z)[None, :])
    return float(mean[0] - beta_value * std[0])
