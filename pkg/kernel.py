"""Stationary kernels on the joint input space Z = X × C.

A kernel here is k(z, z') = s · r(‖(z − z') / ℓ‖), where r is the radial
profile of the family, ℓ the (per-dimension) lengthscale and s the output
scale. Everything the surrogate needs is built on top of `cross_gram`.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.spatial.distance import cdist

from errors import InputError, NumericalError


SQRT5 = np.sqrt(5.0)

# Negative radicands smaller than this in magnitude are rounding noise.
FEATURE_DISTANCE_TOLERANCE = 1e-12
PSD_TOLERANCE = 1e-9
LIPSCHITZ_GRID_SIZE = 10_000


class KernelFamily(Enum):
    SQUARED_EXPONENTIAL = "se"
    MATERN52 = "matern52"

    def profile(self, s: np.ndarray) -> np.ndarray:
        """Radial profile r(s) with r(0) = 1, s the lengthscale-scaled distance."""
        s = np.asarray(s, dtype=float)
        match self:
            case KernelFamily.SQUARED_EXPONENTIAL:
                return np.exp(-0.5 * s**2)
            case KernelFamily.MATERN52:
                return (1.0 + SQRT5 * s + 5.0 * s**2 / 3.0) * np.exp(-SQRT5 * s)

    def curvature(self, s: np.ndarray) -> np.ndarray:
        """-r''(s), the quantity whose square root bounds the feature-map slope."""
        s = np.asarray(s, dtype=float)
        match self:
            case KernelFamily.SQUARED_EXPONENTIAL:
                return (1.0 - s**2) * np.exp(-0.5 * s**2)
            case KernelFamily.MATERN52:
                return (5.0 / 3.0) * (1.0 + SQRT5 * s - 5.0 * s**2) * np.exp(-SQRT5 * s)


@dataclass(frozen=True)
class KernelSpec:
    """A stationary kernel: family, lengthscale(s) and output scale."""

    family: KernelFamily
    lengthscale: tuple[float, ...] | float
    output_scale: float = 1.0
    _scales: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if isinstance(self.family, str):
            object.__setattr__(self, "family", KernelFamily(self.family))
        scales = np.atleast_1d(np.asarray(self.lengthscale, dtype=float))
        if scales.ndim != 1 or scales.size == 0:
            raise InputError(f"lengthscale must be a scalar or a vector, got {self.lengthscale!r}")
        if not np.all(np.isfinite(scales)) or np.any(scales <= 0):
            raise InputError(f"lengthscales must be strictly positive, got {self.lengthscale!r}")
        if not self.output_scale > 0:
            raise InputError(f"output_scale must be positive, got {self.output_scale!r}")
        if scales.size > 1:
            object.__setattr__(self, "lengthscale", tuple(float(v) for v in scales))
        else:
            object.__setattr__(self, "lengthscale", float(scales[0]))
        scales.setflags(write=False)
        object.__setattr__(self, "_scales", scales)

    @property
    def is_isotropic(self) -> bool:
        return self._scales.size == 1

    @property
    def min_lengthscale(self) -> float:
        return float(self._scales.min())

    def check_dimension(self, dim: int) -> None:
        """Raise InputError if an anisotropic lengthscale does not fit `dim`."""
        if not self.is_isotropic and self._scales.size != dim:
            raise InputError(
                f"kernel has {self._scales.size} lengthscales but points have dimension {dim}"
            )

    def scaled_distances(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        """Pairwise ‖(a − b) / ℓ‖ between the rows of A and B."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.atleast_2d(np.asarray(B, dtype=float))
        if A.shape[1] != B.shape[1]:
            raise InputError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
        self.check_dimension(A.shape[1])
        return cdist(A / self._scales, B / self._scales)

    def evaluate(self, z, z2) -> float:
        """k(z, z2) for two single points."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        z2 = np.atleast_1d(np.asarray(z2, dtype=float))
        if z.shape != z2.shape or z.ndim != 1:
            raise InputError(f"dimension mismatch: {z.shape} vs {z2.shape}")
        return float(cross_gram(self, z[None, :], z2[None, :])[0, 0])


def cross_gram(k: KernelSpec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Kernel matrix between the rows of A and the rows of B."""
    return k.output_scale * k.family.profile(k.scaled_distances(A, B))


def gram(k: KernelSpec, Z) -> np.ndarray:
    """Symmetric kernel matrix of a point set; an empty set gives a 0×0 matrix."""
    Z = np.asarray(Z, dtype=float)
    if Z.size == 0:
        return np.zeros((0, 0))
    Z = np.atleast_2d(Z)
    K = cross_gram(k, Z, Z)
    # cdist is symmetric up to rounding; force exact symmetry.
    return 0.5 * (K + K.T)


def is_psd(K: np.ndarray, tolerance: float = PSD_TOLERANCE) -> bool:
    if K.size == 0:
        return True
    return bool(np.linalg.eigvalsh(K).min() >= -tolerance)


def feature_distance(k: KernelSpec, z, z2) -> float:
    """‖k(·, z) − k(·, z2)‖ in the RKHS."""
    radicand = k.evaluate(z, z) + k.evaluate(z2, z2) - 2.0 * k.evaluate(z, z2)
    if radicand < -FEATURE_DISTANCE_TOLERANCE:
        raise NumericalError(f"negative feature-distance radicand {radicand:.3e}")
    return float(np.sqrt(max(radicand, 0.0)))


def lipschitz_constant(k: KernelSpec, diameter: float | None = None) -> float:
    """Constant L with feature_distance(z, z2) ≤ L·‖z − z2‖.

    The squared exponential has the closed form sqrt(s)/min(ℓ). Other families
    maximise -r'' numerically over [0, diameter] (in scaled units); since
    r'(0) = 0, d(u)² = 2·s·(r(0) − r(u/ℓ)) ≤ s·max(-r'')·u²/ℓ².
    """
    ell = k.min_lengthscale
    if k.family is KernelFamily.SQUARED_EXPONENTIAL:
        return float(np.sqrt(k.output_scale) / ell)
    if diameter is None:
        diameter = 10.0 * float(k._scales.max())
    grid = np.linspace(0.0, diameter / ell, LIPSCHITZ_GRID_SIZE)
    peak = float(np.max(k.family.curvature(grid)))
    return float(np.sqrt(k.output_scale * max(peak, 0.0)) / ell)
