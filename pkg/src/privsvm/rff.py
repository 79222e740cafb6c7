"""Random cosine/sine feature maps whose inner product approximates a kernel.

A map of d_hat spectral vectors w_1..w_{d_hat} in R^d defines the
2*d_hat-dimensional feature map

    phi(x) = d_hat^{-1/2} [cos<w_1, x>, sin<w_1, x>, ..., cos<w_{d_hat}, x>, sin<w_{d_hat}, x>]

so that <phi(x), phi(y)> = mean_i cos(<w_i, x - y>), an unbiased estimate of
the translation-invariant kernel the vectors were drawn from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import KernelSpec, sample_spectral

__all__ = [
    "CalibrationError",
    "RandomFeatureMap",
    "rff_features",
    "feature_matrix",
    "rff_kernel",
    "gram",
    "calibrate_rff_dim",
]


class CalibrationError(ValueError):
    """Raised when the dimension calibration formula does not apply."""


@dataclass(frozen=True, eq=False)
class RandomFeatureMap:
    """d_hat spectral vectors defining a 2*d_hat-dimensional feature map.

    `seed` records the integer used by `draw`, when the map was built that
    way; a map rebuilt from (kernel, dim, d_hat, seed) reproduces the same
    spectral vectors bit for bit.
    """

    omegas: np.ndarray
    kernel: KernelSpec
    seed: int | None = None

    def __post_init__(self):
        omegas = np.array(self.omegas, dtype=np.float64)
        if omegas.ndim != 2 or omegas.shape[0] < 1:
            raise ValueError("omegas must be a (d_hat, d) array with d_hat >= 1")
        if not self.kernel.translation_invariant():
            raise ValueError("feature maps require a translation-invariant kernel")
        omegas.setflags(write=False)
        object.__setattr__(self, "omegas", omegas)

    @classmethod
    def draw(cls, kernel: KernelSpec, dim: int, d_hat: int, seed: int) -> "RandomFeatureMap":
        rng = np.random.default_rng(seed)
        return cls(sample_spectral(kernel, dim, d_hat, rng), kernel, seed)

    @classmethod
    def from_rng(cls, kernel: KernelSpec, dim: int, d_hat: int, rng) -> "RandomFeatureMap":
        return cls(sample_spectral(kernel, dim, d_hat, rng), kernel, None)

    @property
    def d_hat(self) -> int:
        return self.omegas.shape[0]

    @property
    def dim(self) -> int:
        return self.omegas.shape[1]

    @property
    def feature_dim(self) -> int:
        return 2 * self.d_hat

    def __eq__(self, other):
        # seed is provenance metadata, not part of the map's identity
        if not isinstance(other, RandomFeatureMap):
            return NotImplemented
        return np.array_equal(self.omegas, other.omegas) and self.kernel == other.kernel


def rff_features(m: RandomFeatureMap, x) -> np.ndarray:
    """Feature vector of length 2*d_hat: interleaved cos/sin pairs, unit norm."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (m.dim,):
        raise ValueError(f"point has dimension {x.shape}, map expects {m.dim}")
    return feature_matrix(m, x[None, :])[0]


def feature_matrix(m: RandomFeatureMap, X: np.ndarray) -> np.ndarray:
    """Row-wise feature vectors for an (n, d) array of points."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != m.dim:
        raise ValueError("points must be an (n, d) array matching the map dimension")
    z = X @ m.omegas.T
    out = np.empty((X.shape[0], 2 * m.d_hat))
    out[:, 0::2] = np.cos(z)
    out[:, 1::2] = np.sin(z)
    out *= m.d_hat**-0.5
    return out


def rff_kernel(m: RandomFeatureMap, x, y) -> float:
    """Approximate kernel value <phi(x), phi(y)> = mean_i cos(<w_i, x - y>).

    Computed through the displacement form, so rff_kernel(m, x, x) is exactly 1.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.shape != (m.dim,):
        raise ValueError("x and y must be vectors matching the map dimension")
    return float(np.mean(np.cos(m.omegas @ (x - y))))


def gram(m: RandomFeatureMap, A: np.ndarray, B: np.ndarray | None = None) -> np.ndarray:
    """Pairwise approximate-kernel matrix between the rows of A and B."""
    A = np.asarray(A, dtype=np.float64)
    B = A if B is None else np.asarray(B, dtype=np.float64)
    if A.shape[1] != m.dim or B.shape[1] != m.dim:
        raise ValueError("point sets must match the map dimension")
    za = A @ m.omegas.T
    zb = B @ m.omegas.T
    out = np.empty((A.shape[0], B.shape[0]))
    for i in range(A.shape[0]):
        out[i] = np.mean(np.cos(za[i][None, :] - zb), axis=1)
    return out


def calibrate_rff_dim(eps: float, delta: float, d: int, sigma_p: float, diam: float) -> int:
    """Smallest d_hat guaranteeing sup |approx - true kernel| < eps w.p. >= 1 - delta.

    Evaluates ceil((4 (d+2) / eps^2) * ln(2^8 (sigma_p * diam)^2 / (delta eps^2)))
    where sigma_p^2 is the spectral second moment and diam the diameter of the
    domain. Fails for kernels whose spectral second moment diverges.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if d < 1:
        raise ValueError("d must be positive")
    if diam <= 0:
        raise ValueError("diam must be positive")
    if not math.isfinite(sigma_p) or sigma_p <= 0:
        raise CalibrationError(
            "spectral second moment is not finite; choose d_hat manually"
        )
    bound = (4.0 * (d + 2) / eps**2) * math.log(
        2.0**8 * (sigma_p * diam) ** 2 / (delta * eps**2)
    )
    return max(1, math.ceil(bound))
