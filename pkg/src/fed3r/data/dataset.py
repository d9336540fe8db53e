"""
Feature datasets: synthetic generation, stratified splitting and the binary
feature file.

Feature file layout (little endian)::

    magic "F3RD" | version u32 = 1 | n u64 | d u32 | C u32
    n*d float32 features, row major | n uint32 labels

Features are stored in 32 bits and promoted to 64 bits on read.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from src.fed3r.data.files import ByteReader, PathLike, atomic_write_bytes, read_bytes
from src.fed3r.exception.core import (
    BadMagic, DimensionMismatch, InvalidParams, LabelOutOfRange, VersionUnsupported
)
from src.fed3r.linalg import DenseMatrix, as_dense

_FEATURES_MAGIC = b"F3RD"
_FEATURES_VERSION = 1
_FEATURES_HEADER = struct.Struct("<4sIQII")


@dataclass(frozen=True)
class FeatureDataset:
    features: DenseMatrix
    labels: np.ndarray
    num_classes: int

    def __post_init__(self) -> None:
        if self.features.ndim != 2:
            raise DimensionMismatch("features_not_2d")
        if self.labels.ndim != 1 or self.labels.shape[0] != self.features.shape[0]:
            raise DimensionMismatch("labels_rows_mismatch")
        if self.num_classes < 1:
            raise InvalidParams("num_classes_must_be_positive")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise LabelOutOfRange()
        if not np.all(np.isfinite(self.features)):
            raise InvalidParams("non_finite_features")

    @classmethod
    def from_arrays(cls, features, labels, num_classes: int) -> "FeatureDataset":
        return cls(
            features=as_dense(features),
            labels=np.ascontiguousarray(labels, dtype=np.int64).reshape(-1),
            num_classes=int(num_classes),
        )

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def subset(self, indices: np.ndarray | list[int]) -> "FeatureDataset":
        indices = np.asarray(indices, dtype=np.int64)
        return FeatureDataset(
            features=np.ascontiguousarray(self.features[indices]),
            labels=self.labels[indices],
            num_classes=self.num_classes,
        )

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)


def gen_gaussian_mixture(
    num_classes: int,
    d: int,
    per_class_n: int,
    separation: float,
    anisotropy: float = 1.0,
    seed: int = 0,
) -> FeatureDataset:
    """
    Balanced Gaussian mixture standing in for frozen backbone embeddings.

    Class means are random unit directions scaled to length `separation`. All
    classes share a diagonal covariance whose variances are spaced geometrically
    from 1 down to 1/`anisotropy` (condition number = `anisotropy`), assigned to
    the axes in a seeded random order.

    :raises InvalidParams: for C < 2, d < 2, negative sizes or anisotropy < 1
    """
    if num_classes < 2 or d < 2:
        raise InvalidParams("mixture_needs_two_classes_and_two_dims")
    if per_class_n < 0 or separation < 0:
        raise InvalidParams("mixture_sizes_must_be_non_negative")
    if not anisotropy >= 1:
        raise InvalidParams("anisotropy_must_be_at_least_one")

    rng = np.random.default_rng(seed)
    directions = rng.standard_normal((num_classes, d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    means = separation * directions

    variances = np.geomspace(1.0, 1.0 / anisotropy, num=d)
    stds = np.sqrt(rng.permutation(variances))

    labels = np.repeat(np.arange(num_classes, dtype=np.int64), per_class_n)
    noise = rng.standard_normal((labels.size, d)) * stds
    features = means[labels] + noise
    return FeatureDataset(features=np.ascontiguousarray(features), labels=labels, num_classes=num_classes)


def train_test_split(dataset: FeatureDataset, test_fraction: float, seed: int) -> tuple[FeatureDataset, FeatureDataset]:
    """Stratified split; every class keeps round(test_fraction * n_c) samples for testing."""
    if not 0 < test_fraction < 1:
        raise InvalidParams("test_fraction_must_be_in_open_unit_interval")

    rng = np.random.default_rng(seed)
    test_idx: list[np.ndarray] = []
    train_idx: list[np.ndarray] = []
    for c in range(dataset.num_classes):
        members = rng.permutation(np.flatnonzero(dataset.labels == c))
        n_test = int(round(test_fraction * members.size))
        test_idx.append(members[:n_test])
        train_idx.append(members[n_test:])

    train = np.sort(np.concatenate(train_idx)) if train_idx else np.empty(0, dtype=np.int64)
    test = np.sort(np.concatenate(test_idx)) if test_idx else np.empty(0, dtype=np.int64)
    return dataset.subset(train), dataset.subset(test)


# region: feature file
def features_to_bytes(dataset: FeatureDataset) -> bytes:
    header = _FEATURES_HEADER.pack(_FEATURES_MAGIC, _FEATURES_VERSION, dataset.n, dataset.d, dataset.num_classes)
    return b"".join([
        header,
        dataset.features.astype("<f4").tobytes(order="C"),
        dataset.labels.astype("<u4").tobytes(),
    ])


def features_from_bytes(payload: bytes) -> FeatureDataset:
    reader = ByteReader(payload)
    magic, version, n, d, num_classes = _FEATURES_HEADER.unpack(reader.take(_FEATURES_HEADER.size))
    if magic != _FEATURES_MAGIC:
        raise BadMagic()
    if version != _FEATURES_VERSION:
        raise VersionUnsupported(f"features_version_{version}")

    raw_features = np.frombuffer(reader.take(4 * n * d), dtype="<f4")
    raw_labels = np.frombuffer(reader.take(4 * n), dtype="<u4")
    reader.finish()
    return FeatureDataset(
        features=np.ascontiguousarray(raw_features.astype(np.float64).reshape(n, d)),
        labels=raw_labels.astype(np.int64),
        num_classes=int(num_classes),
    )


def write_features(path: PathLike, dataset: FeatureDataset) -> None:
    atomic_write_bytes(path, features_to_bytes(dataset))


def read_features(path: PathLike) -> FeatureDataset:
    return features_from_bytes(read_bytes(path))


def read_features_header(path: PathLike) -> dict:
    """Header fields of a feature file, without decoding the payload."""
    reader = ByteReader(read_bytes(path))
    magic, version, n, d, num_classes = _FEATURES_HEADER.unpack(reader.take(_FEATURES_HEADER.size))
    if magic != _FEATURES_MAGIC:
        raise BadMagic()
    if version != _FEATURES_VERSION:
        raise VersionUnsupported(f"features_version_{version}")
    return {"magic": magic.decode("ascii"), "version": version, "n": n, "d": d, "classes": num_classes}
# endregion: feature file
