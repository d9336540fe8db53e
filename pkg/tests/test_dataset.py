import struct

import numpy as np
import pytest

from src.fed3r.data.dataset import (
    FeatureDataset, features_from_bytes, features_to_bytes, gen_gaussian_mixture, read_features,
    read_features_header, train_test_split, write_features
)
from src.fed3r.exception.core import (
    BadMagic, CorruptFile, InvalidParams, IoFailure, LabelOutOfRange, TruncatedFile, VersionUnsupported
)
from src.fed3r.ridge import centralized_rr, evaluate_accuracy


def test_mixture_is_balanced_and_deterministic():
    first = gen_gaussian_mixture(5, 6, 40, 2.0, seed=3)
    second = gen_gaussian_mixture(5, 6, 40, 2.0, seed=3)

    assert first.n == 200 and first.d == 6 and first.num_classes == 5
    np.testing.assert_array_equal(first.class_counts(), [40] * 5)
    np.testing.assert_array_equal(first.features, second.features)


def test_mixture_anisotropy_spreads_variances():
    dataset = gen_gaussian_mixture(2, 10, 4000, 0.0, anisotropy=100.0, seed=1)
    variances = np.sort(dataset.features.var(axis=0))

    assert variances[-1] / variances[0] == pytest.approx(100.0, rel=0.15)


def test_mixture_rejects_bad_parameters():
    with pytest.raises(InvalidParams):
        gen_gaussian_mixture(1, 4, 10, 1.0)
    with pytest.raises(InvalidParams):
        gen_gaussian_mixture(3, 4, 10, 1.0, anisotropy=0.5)


def test_split_is_stratified_and_disjoint():
    dataset = gen_gaussian_mixture(4, 3, 50, 1.0, seed=2)
    train, test = train_test_split(dataset, 0.2, seed=8)

    np.testing.assert_array_equal(test.class_counts(), [10] * 4)
    np.testing.assert_array_equal(train.class_counts(), [40] * 4)
    rows = {tuple(row) for row in np.vstack([train.features, test.features])}
    assert len(rows) == dataset.n


def test_dataset_rejects_labels_out_of_range():
    with pytest.raises(LabelOutOfRange):
        FeatureDataset.from_arrays(np.zeros((2, 2)), [0, 3], 3)


def test_feature_file_stores_float32(tmp_path):
    dataset = gen_gaussian_mixture(3, 4, 5, 1.0, seed=0)
    path = tmp_path / "features.f3rd"

    write_features(path, dataset)
    restored = read_features(path)

    np.testing.assert_array_equal(restored.features, dataset.features.astype(np.float32).astype(np.float64))
    np.testing.assert_array_equal(restored.labels, dataset.labels)
    assert read_features_header(path) == {"magic": "F3RD", "version": 1, "n": 15, "d": 4, "classes": 3}


def test_feature_file_errors(tmp_path):
    payload = features_to_bytes(gen_gaussian_mixture(2, 2, 3, 1.0))

    with pytest.raises(BadMagic):
        features_from_bytes(b"F3RX" + payload[4:])
    with pytest.raises(TruncatedFile):
        features_from_bytes(payload[:30])
    with pytest.raises(IoFailure):
        read_features(tmp_path / "missing.f3rd")


def test_empty_feature_file_round_trips():
    empty = gen_gaussian_mixture(3, 4, 0, 1.0)
    restored = features_from_bytes(features_to_bytes(empty))

    assert restored.n == 0 and restored.d == 4 and restored.num_classes == 3


def test_feature_file_rejects_other_versions_and_trailing_bytes(tmp_path):
    payload = features_to_bytes(gen_gaussian_mixture(2, 2, 3, 1.0))
    bumped = payload[:4] + struct.pack("<I", 2) + payload[8:]
    path = tmp_path / "bumped.f3rd"
    path.write_bytes(bumped)

    with pytest.raises(VersionUnsupported):
        features_from_bytes(bumped)
    with pytest.raises(VersionUnsupported):
        read_features_header(path)
    with pytest.raises(CorruptFile):
        features_from_bytes(payload + b"\x00")


def test_overlapping_classes_give_chance_accuracy():
    train, test = train_test_split(gen_gaussian_mixture(4, 8, 1000, 0.0, seed=9), 0.5, seed=9)
    accuracy = evaluate_accuracy(centralized_rr(train.features, train.labels, 4), test)

    assert abs(accuracy - 0.25) <= 5 / np.sqrt(test.n)


def test_well_separated_mixture_is_linearly_classifiable():
    dataset = gen_gaussian_mixture(10, 16, 200, 10.0, anisotropy=1.0, seed=3)
    classifier = centralized_rr(dataset.features, dataset.labels, 10)

    assert evaluate_accuracy(classifier, dataset) >= 0.99
