"""
Ridge-regression statistics lifecycle: local computation, exact merge, closed-form
solve, column normalization, prediction and the centralized reference solver.

The statistics ``A = Z.T Z`` and ``b = Z.T Y`` are sums over samples, so they form
a commutative monoid under elementwise addition. Anything that only needs sums
(a server, a secure aggregator, a continual learner) can work with them.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field, replace
from functools import reduce
from typing import TYPE_CHECKING, Iterable, Optional, Sequence

import numpy as np

from src.fed3r.data.files import ByteReader, PathLike, atomic_write_bytes, read_bytes
from src.fed3r.exception.core import (
    BadMagic, DimensionMismatch, EmptyDataset, InvalidParams, NotPositiveDefinite,
    VersionUnsupported
)
from src.fed3r.linalg import DenseMatrix, as_dense, cross, gram, one_hot, spd_solve

if TYPE_CHECKING:
    from src.fed3r.data.dataset import FeatureDataset
    from src.fed3r.random_features import RFFMap

logger = logging.getLogger(__name__)

DEFAULT_LAMBDA = 0.01
_ZERO_NORM = 1e-12

_STATS_MAGIC = b"F3RS"
_STATS_VERSION = 1
_STATS_HEADER = struct.Struct("<4sIIIQ")


@dataclass(frozen=True)
class RRStatistics:
    """Mergeable ridge summary: ``A`` (q x q), ``b`` (q x C) and the sample count."""

    A: DenseMatrix
    b: DenseMatrix
    count: int

    def __post_init__(self) -> None:
        if self.A.ndim != 2 or self.A.shape[0] != self.A.shape[1]:
            raise DimensionMismatch("stats_A_not_square")
        if self.b.ndim != 2 or self.b.shape[0] != self.A.shape[0]:
            raise DimensionMismatch("stats_b_rows_mismatch")
        if self.count < 0:
            raise InvalidParams("stats_negative_count")

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def classes(self) -> int:
        return self.b.shape[1]

    @classmethod
    def zero(cls, dim: int, classes: int) -> "RRStatistics":
        return cls(
            A=np.zeros((dim, dim), dtype=np.float64),
            b=np.zeros((dim, classes), dtype=np.float64),
            count=0,
        )


@dataclass(frozen=True)
class Classifier:
    """
    Linear classifier ``f(z) = W.T z`` with an optional softmax temperature.

    `zero_columns` lists classes whose column was (numerically) zero when
    normalization ran; those columns are left untouched.
    """

    W: DenseMatrix
    temperature: float = 1.0
    normalized: bool = False
    zero_columns: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.W.ndim != 2:
            raise DimensionMismatch("classifier_W_not_2d")
        if not self.temperature > 0:
            raise InvalidParams("temperature_must_be_positive")

    @property
    def dim(self) -> int:
        return self.W.shape[0]

    @property
    def classes(self) -> int:
        return self.W.shape[1]

    def with_temperature(self, temperature: float) -> "Classifier":
        return replace(self, temperature=float(temperature))


def compute_local_stats(features: DenseMatrix, labels: Sequence[int] | np.ndarray, num_classes: int) -> RRStatistics:
    """
    Compute one shard's contribution: ``A_k = Z_k.T Z_k`` and ``b_k = Z_k.T Y_k``.

    :param features: n_k x q mapped features (n_k may be zero)
    :param labels: n_k class indices in [0, num_classes)
    :param num_classes: C
    :raises LabelOutOfRange: if a label is outside [0, C)
    :raises DimensionMismatch: if features and labels disagree on n_k
    """
    features = as_dense(features, check_finite=False)
    targets = one_hot(labels, num_classes)
    if targets.shape[0] != features.shape[0]:
        raise DimensionMismatch("stats_labels_rows_mismatch")

    return RRStatistics(A=gram(features), b=cross(features, targets), count=features.shape[0])


def merge_stats(s1: RRStatistics, s2: RRStatistics) -> RRStatistics:
    if s1.A.shape != s2.A.shape or s1.b.shape != s2.b.shape:
        raise DimensionMismatch("stats_shape_mismatch")
    return RRStatistics(A=s1.A + s2.A, b=s1.b + s2.b, count=s1.count + s2.count)


def fold_stats(stats: Iterable[RRStatistics], dim: int, classes: int) -> RRStatistics:
    """Left fold of `merge_stats` starting from the zero statistics, in iteration order."""
    return reduce(merge_stats, stats, RRStatistics.zero(dim, classes))


def solve_classifier(stats: RRStatistics, lam: float = DEFAULT_LAMBDA) -> Classifier:
    """
    Closed-form ridge solution ``W = (A + lam I)^-1 b``; not normalized.

    :raises InvalidParams: if `lam` is not positive
    """
    if not lam > 0:
        raise InvalidParams("lambda_must_be_positive")

    regularized = stats.A + lam * np.eye(stats.dim)
    try:
        W = spd_solve(regularized, stats.b)
    except NotPositiveDefinite:
        # A is PSD by construction, so this means the statistics are corrupted
        logger.error("ridge_solve_failed dim=%d lam=%g count=%d", stats.dim, lam, stats.count)
        raise

    return Classifier(W=W)


def normalize_columns(classifier: Classifier) -> Classifier:
    """Divide every class column by its Euclidean norm; (near-)zero columns are skipped and reported."""
    norms = np.linalg.norm(classifier.W, axis=0)
    zero_columns = tuple(int(c) for c in np.flatnonzero(norms <= _ZERO_NORM))
    if zero_columns:
        logger.warning("zero_norm_classifier_columns classes=%s", list(zero_columns))

    safe = np.where(norms > _ZERO_NORM, norms, 1.0)
    return replace(
        classifier,
        W=np.ascontiguousarray(classifier.W / safe),
        normalized=True,
        zero_columns=zero_columns,
    )


def centralized_rr(
    features: DenseMatrix,
    labels: Sequence[int] | np.ndarray,
    num_classes: int,
    lam: float = DEFAULT_LAMBDA,
    rff: Optional["RFFMap"] = None,
) -> Classifier:
    """
    Ridge classifier fitted on the whole dataset at once: the reference the
    federated solution must reproduce. With `rff`, features are lifted first.
    """
    if rff is not None:
        from src.fed3r.random_features import apply_rff

        features = apply_rff(rff, features)
    stats = compute_local_stats(features, labels, num_classes)
    return normalize_columns(solve_classifier(stats, lam))


def predict(classifier: Classifier, z: DenseMatrix) -> int:
    """Class with the largest score ``(W.T z)_c``; ties go to the lowest index."""
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    if z.shape[0] != classifier.dim:
        raise DimensionMismatch("predict_feature_dim_mismatch")
    return int(np.argmax(classifier.W.T @ z))


def predict_batch(classifier: Classifier, Z: DenseMatrix) -> np.ndarray:
    Z = as_dense(Z, check_finite=False)
    if Z.shape[1] != classifier.dim:
        raise DimensionMismatch("predict_feature_dim_mismatch")
    return np.argmax(Z @ classifier.W, axis=1)


def evaluate_accuracy(classifier: Classifier, dataset: "FeatureDataset", rff: Optional["RFFMap"] = None) -> float:
    """
    Fraction of samples in `dataset` whose predicted class equals the label.

    :raises EmptyDataset: for a dataset without samples
    """
    if dataset.n == 0:
        raise EmptyDataset()
    features = dataset.features
    if rff is not None:
        from src.fed3r.random_features import apply_rff

        features = apply_rff(rff, features)
    return float(np.mean(predict_batch(classifier, features) == dataset.labels))


# region: serialization
def stats_to_bytes(stats: RRStatistics) -> bytes:
    header = _STATS_HEADER.pack(_STATS_MAGIC, _STATS_VERSION, stats.dim, stats.classes, stats.count)
    upper = stats.A[np.triu_indices(stats.dim)]
    return b"".join([
        header,
        upper.astype("<f8", copy=False).tobytes(),
        stats.b.astype("<f8", copy=False).tobytes(order="C"),
    ])


def stats_from_bytes(payload: bytes) -> RRStatistics:
    reader = ByteReader(payload)
    magic, version, dim, classes, count = _STATS_HEADER.unpack(reader.take(_STATS_HEADER.size))
    if magic != _STATS_MAGIC:
        raise BadMagic()
    if version != _STATS_VERSION:
        raise VersionUnsupported(f"stats_version_{version}")

    n_upper = dim * (dim + 1) // 2
    upper = np.frombuffer(reader.take(8 * n_upper), dtype="<f8").astype(np.float64)
    b = np.frombuffer(reader.take(8 * dim * classes), dtype="<f8").astype(np.float64).reshape(dim, classes)
    reader.finish()

    A = np.zeros((dim, dim), dtype=np.float64)
    rows, cols = np.triu_indices(dim)
    A[rows, cols] = upper
    A[cols, rows] = upper
    return RRStatistics(A=A, b=np.ascontiguousarray(b), count=int(count))


def write_stats(path: PathLike, stats: RRStatistics) -> None:
    atomic_write_bytes(path, stats_to_bytes(stats))


def read_stats(path: PathLike) -> RRStatistics:
    return stats_from_bytes(read_bytes(path))


def read_stats_header(path: PathLike) -> dict:
    reader = ByteReader(read_bytes(path))
    magic, version, dim, classes, count = _STATS_HEADER.unpack(reader.take(_STATS_HEADER.size))
    if magic != _STATS_MAGIC:
        raise BadMagic()
    if version != _STATS_VERSION:
        raise VersionUnsupported(f"stats_version_{version}")
    return {"magic": magic.decode("ascii"), "version": version, "dim": dim, "classes": classes, "count": count}
# endregion: serialization
