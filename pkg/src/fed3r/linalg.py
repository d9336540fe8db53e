"""Dense linear-algebra kernels shared by every solver path.

All matrices are C-ordered ``float64`` numpy arrays (row-major, like the feature
file layout). Functions never modify their inputs.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Sequence

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.linalg.blas import dsyrk

from src.fed3r.exception.core import (
    DimensionMismatch, InvalidParams, LabelOutOfRange, NotPositiveDefinite
)

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

    DenseMatrix = NDArray[np.float64]
else:
    DenseMatrix = np.ndarray

_SYMMETRY_RTOL = 1e-9


def as_dense(data: ArrayLike, *, ndim: int = 2, check_finite: bool = True) -> DenseMatrix:
    """
    Promote `data` to a C-contiguous float64 array with exactly `ndim` dimensions.

    :param data: anything numpy can turn into an array
    :param ndim: required number of dimensions
    :param check_finite: reject NaN/Inf entries (used on every I/O path)
    :raises DimensionMismatch: if the array has the wrong rank
    :raises InvalidParams: if non-finite values are present
    """
    matrix = np.ascontiguousarray(data, dtype=np.float64)
    if matrix.ndim != ndim:
        raise DimensionMismatch(f"expected_{ndim}d_array_got_{matrix.ndim}d")
    if check_finite and not np.all(np.isfinite(matrix)):
        raise InvalidParams("non_finite_values")
    return matrix


def spd_solve(A: DenseMatrix, rhs: DenseMatrix) -> DenseMatrix:
    """
    Solve ``A @ M = rhs`` for a symmetric positive-definite `A` through a Cholesky
    factorization. The inverse of `A` is never formed.

    :param A: q x q symmetric positive-definite matrix
    :param rhs: q x C right-hand side (a length-q vector is accepted as well)
    :raises DimensionMismatch: if `A` is not square or `rhs` has a different row count
    :raises InvalidParams: if `A` is not symmetric within 1e-9 relative
    :raises NotPositiveDefinite: if the factorization meets a non-positive pivot
    :return: the q x C solution
    """
    A = np.asarray(A, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch("solve_matrix_not_square")
    if rhs.shape[0] != A.shape[0]:
        raise DimensionMismatch("solve_rhs_rows_mismatch")

    scale = np.linalg.norm(A)
    if np.linalg.norm(A - A.T) > _SYMMETRY_RTOL * max(scale, np.finfo(np.float64).tiny):
        raise InvalidParams("solve_matrix_not_symmetric")

    try:
        factor = cho_factor(A, lower=False, check_finite=True)
    except LinAlgError as error:
        raise NotPositiveDefinite() from error

    return np.ascontiguousarray(cho_solve(factor, rhs, check_finite=False))


def gram(Z: DenseMatrix) -> DenseMatrix:
    """
    Compute ``Z.T @ Z``. Only the upper triangle is accumulated (BLAS ``syrk``);
    the lower triangle is a mirror of it, so the result is bitwise symmetric.
    """
    Z = as_dense(Z, check_finite=False)
    n, q = Z.shape
    if n == 0:
        return np.zeros((q, q), dtype=np.float64)

    upper = np.triu(dsyrk(1.0, Z, trans=1, lower=0))
    return np.ascontiguousarray(upper + np.triu(upper, 1).T)


def cross(Z: DenseMatrix, Y: DenseMatrix) -> DenseMatrix:
    """Compute ``Z.T @ Y`` for row-aligned `Z` (n x q) and `Y` (n x C)."""
    Z = as_dense(Z, check_finite=False)
    Y = as_dense(Y, check_finite=False)
    if Z.shape[0] != Y.shape[0]:
        raise DimensionMismatch("cross_row_count_mismatch")
    if Z.shape[0] == 0:
        return np.zeros((Z.shape[1], Y.shape[1]), dtype=np.float64)
    return np.ascontiguousarray(Z.T @ Y)


def one_hot(labels: Sequence[int] | np.ndarray, num_classes: int) -> DenseMatrix:
    """
    Encode `labels` as +1/0 rows of width `num_classes`.

    :raises LabelOutOfRange: if any label falls outside [0, num_classes)
    """
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise LabelOutOfRange()
    encoded = np.zeros((labels.size, num_classes), dtype=np.float64)
    encoded[np.arange(labels.size), labels] = 1.0
    return encoded
