"""
Random Fourier features for the RBF kernel ``k(z, w) = exp(-||z - w||^2 / (2 sigma^2))``.

The map ``phi(z) = sqrt(2/D) cos(z @ omega + phase)`` uses frequencies
``omega ~ Normal(0, sigma^-2)`` and phases ``~ Uniform[0, 2 pi)``, so that
``phi(z) . phi(w)`` is an unbiased estimate of ``k(z, w)``.

Maps are drawn from a counter-based generator (Philox) keyed by the seed, so every
client rebuilds the same ``omega`` from ``(d, D, sigma, seed)`` alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from src.fed3r.exception.core import DimensionMismatch, InvalidBandwidth, InvalidParams
from src.fed3r.linalg import DenseMatrix, as_dense

# cosine with a random phase; the paired sin/cos estimator is not implemented
ESTIMATOR = "cos_phase"


@dataclass(frozen=True)
class RFFMap:
    input_dim: int
    output_dim: int
    sigma: float
    seed: int
    frequencies: DenseMatrix
    phases: np.ndarray

    @property
    def scale(self) -> float:
        return float(np.sqrt(2.0 / self.output_dim))


def rff_generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed) & 0xFFFFFFFFFFFFFFFF))


def sample_rff(d: int, D: int, sigma: float, seed: int) -> RFFMap:
    """
    Draw a frozen random-feature map.

    :raises InvalidBandwidth: if `sigma` is not positive
    :raises InvalidParams: if `d` or `D` is smaller than one
    """
    if not sigma > 0:
        raise InvalidBandwidth()
    if d < 1 or D < 1:
        raise InvalidParams("rff_dims_must_be_positive")

    rng = rff_generator(seed)
    frequencies = rng.normal(loc=0.0, scale=1.0 / sigma, size=(d, D))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=D)
    return RFFMap(
        input_dim=int(d),
        output_dim=int(D),
        sigma=float(sigma),
        seed=int(seed),
        frequencies=np.ascontiguousarray(frequencies),
        phases=phases,
    )


def apply_rff(rff: RFFMap, Z: DenseMatrix) -> DenseMatrix:
    """Lift n x d features to n x D random features."""
    Z = as_dense(Z, check_finite=False)
    if Z.shape[1] != rff.input_dim:
        raise DimensionMismatch("rff_input_dim_mismatch")
    return rff.scale * np.cos(Z @ rff.frequencies + rff.phases)


def kernel_exact(z: DenseMatrix, zeta: DenseMatrix, sigma: float) -> float:
    if not sigma > 0:
        raise InvalidBandwidth()
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    zeta = np.asarray(zeta, dtype=np.float64).reshape(-1)
    if z.shape != zeta.shape:
        raise DimensionMismatch("kernel_dim_mismatch")
    sq_dist = float(np.sum((z - zeta) ** 2))
    return float(np.exp(-sq_dist / (2.0 * sigma ** 2)))
