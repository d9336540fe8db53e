import numpy as np
import pytest

from src.fed3r.data.dataset import FeatureDataset
from src.fed3r.exception.core import (
    BadMagic, CorruptFile, DimensionMismatch, EmptyDataset, InvalidParams, TruncatedFile, VersionUnsupported
)
from src.fed3r.ridge import (
    Classifier, RRStatistics, centralized_rr, compute_local_stats, evaluate_accuracy, fold_stats, merge_stats,
    normalize_columns, predict, predict_batch, read_stats, read_stats_header, solve_classifier, stats_from_bytes,
    stats_to_bytes, write_stats
)
from tests.helpers import rel_err


def _random_stats(rng, n=20, q=4, C=3) -> tuple[np.ndarray, np.ndarray, RRStatistics]:
    Z = rng.standard_normal((n, q))
    labels = rng.integers(0, C, size=n)
    return Z, labels, compute_local_stats(Z, labels, C)


def test_local_stats_match_per_sample_accumulation(rng):
    Z, labels, stats = _random_stats(rng)
    A = sum(np.outer(z, z) for z in Z)
    b = sum(np.outer(z, np.eye(3)[y]) for z, y in zip(Z, labels))

    np.testing.assert_allclose(stats.A, A, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(stats.b, b, rtol=1e-12, atol=1e-12)
    assert stats.count == 20


def test_local_stats_of_empty_shard_are_zero():
    stats = compute_local_stats(np.zeros((0, 3)), [], 2)
    assert stats.count == 0
    np.testing.assert_array_equal(stats.A, np.zeros((3, 3)))
    np.testing.assert_array_equal(stats.b, np.zeros((3, 2)))


def test_merging_shards_equals_full_dataset_stats(rng):
    Z = rng.standard_normal((100, 5))
    labels = rng.integers(0, 4, size=100)
    cuts = np.sort(rng.choice(np.arange(1, 100), size=6, replace=False))
    shards = np.split(rng.permutation(100), cuts)

    merged = fold_stats((compute_local_stats(Z[idx], labels[idx], 4) for idx in shards), 5, 4)
    full = compute_local_stats(Z, labels, 4)

    assert rel_err(merged.A, full.A) <= 1e-12
    assert rel_err(merged.b, full.b) <= 1e-12
    assert merged.count == 100


def test_merge_is_commutative_with_zero_identity(rng):
    _, _, s1 = _random_stats(rng)
    _, _, s2 = _random_stats(rng)

    np.testing.assert_array_equal(merge_stats(s1, s2).A, merge_stats(s2, s1).A)
    np.testing.assert_array_equal(merge_stats(s1, RRStatistics.zero(4, 3)).b, s1.b)


def test_merge_rejects_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        merge_stats(RRStatistics.zero(3, 2), RRStatistics.zero(4, 2))


def test_solve_with_no_data_gives_zero_classifier():
    classifier = solve_classifier(RRStatistics.zero(3, 2), lam=0.5)
    np.testing.assert_array_equal(classifier.W, np.zeros((3, 2)))
    assert not classifier.normalized


def test_solve_rejects_non_positive_lambda():
    with pytest.raises(InvalidParams):
        solve_classifier(RRStatistics.zero(2, 2), lam=0.0)


def test_solve_matches_normal_equations(rng):
    _, _, stats = _random_stats(rng, n=40)
    W = solve_classifier(stats, lam=0.1).W
    np.testing.assert_allclose((stats.A + 0.1 * np.eye(4)) @ W, stats.b, rtol=1e-10, atol=1e-10)


def test_normalize_columns_gives_unit_norms_and_reports_zero_columns():
    W = np.array([[3.0, 0.0, 1.0], [4.0, 0.0, 0.0]])
    normalized = normalize_columns(Classifier(W=W))

    np.testing.assert_allclose(np.linalg.norm(normalized.W[:, [0, 2]], axis=0), [1.0, 1.0])
    np.testing.assert_array_equal(normalized.W[:, 1], [0.0, 0.0])
    assert normalized.zero_columns == (1,)
    assert normalized.normalized


def test_centralized_rr_separates_distant_blobs(rng):
    labels = np.repeat([0, 1], 200)
    features = rng.standard_normal((400, 2)) + np.where(labels[:, None] == 0, [-3.0, 0.0], [3.0, 0.0])
    dataset = FeatureDataset.from_arrays(features, labels, 2)

    classifier = centralized_rr(dataset.features, dataset.labels, 2)

    assert evaluate_accuracy(classifier, dataset) >= 0.99


def test_predict_breaks_ties_towards_lowest_class():
    classifier = Classifier(W=np.array([[1.0, 1.0, 0.0]]))
    assert predict(classifier, [2.0]) == 0
    np.testing.assert_array_equal(predict_batch(classifier, [[2.0], [-1.0]]), [0, 2])


def test_predict_rejects_wrong_dimension():
    with pytest.raises(DimensionMismatch):
        predict(Classifier(W=np.eye(2)), [1.0, 2.0, 3.0])


def test_evaluate_accuracy_rejects_empty_dataset():
    empty = FeatureDataset.from_arrays(np.zeros((0, 2)), [], 2)
    with pytest.raises(EmptyDataset):
        evaluate_accuracy(Classifier(W=np.eye(2)), empty)


def test_stats_file_preserves_values(tmp_path, rng):
    _, _, stats = _random_stats(rng)
    path = tmp_path / "stats.f3rs"

    write_stats(path, stats)
    restored = read_stats(path)

    np.testing.assert_array_equal(restored.A, stats.A)
    np.testing.assert_array_equal(restored.b, stats.b)
    assert restored.count == stats.count
    assert read_stats_header(path) == {"magic": "F3RS", "version": 1, "dim": 4, "classes": 3, "count": 20}


def test_stats_file_errors(rng):
    _, _, stats = _random_stats(rng)
    payload = stats_to_bytes(stats)

    with pytest.raises(BadMagic):
        stats_from_bytes(b"XXXX" + payload[4:])
    with pytest.raises(VersionUnsupported):
        stats_from_bytes(payload[:4] + (2).to_bytes(4, "little") + payload[8:])
    with pytest.raises(TruncatedFile):
        stats_from_bytes(payload[:-1])


def test_merge_is_associative(rng):
    s1, s2, s3 = (_random_stats(rng)[2] for _ in range(3))

    left = merge_stats(merge_stats(s1, s2), s3)
    right = merge_stats(s1, merge_stats(s2, s3))

    assert rel_err(left.A, right.A) <= 1e-12
    assert rel_err(left.b, right.b) <= 1e-12
    assert left.count == right.count == 60


def test_solve_identity_statistics():
    stats = compute_local_stats(np.eye(3), [0, 1, 2], 3)
    W = solve_classifier(stats, lam=0.01).W
    np.testing.assert_allclose(W, np.eye(3) / 1.01, rtol=1e-12)


def test_large_lambda_bounds_the_classifier(rng):
    _, _, stats = _random_stats(rng, n=50)
    W = solve_classifier(stats, lam=1e6).W
    assert np.linalg.norm(W) <= np.linalg.norm(stats.b) / 1e6


def test_solve_residual_is_small(rng):
    _, _, stats = _random_stats(rng, n=30, q=8)
    W = solve_classifier(stats, lam=0.01).W
    residual = np.linalg.norm((stats.A + 0.01 * np.eye(8)) @ W - stats.b)
    assert residual <= 1e-8 * np.linalg.norm(stats.b)


def test_normalize_columns_examples_and_idempotence(rng):
    np.testing.assert_allclose(normalize_columns(Classifier(W=np.array([[3.0], [4.0]]))).W, [[0.6], [0.8]])
    np.testing.assert_allclose(normalize_columns(Classifier(W=np.diag([3.0, 4.0]))).W, np.eye(2))

    once = normalize_columns(Classifier(W=rng.standard_normal((5, 4))))
    twice = normalize_columns(once)
    assert rel_err(twice.W, once.W) <= 1e-12


def test_normalization_keeps_predictions_when_column_norms_are_equal(rng):
    W = rng.standard_normal((6, 3))
    W = 2.5 * W / np.linalg.norm(W, axis=0)
    Z = rng.standard_normal((50, 6))

    np.testing.assert_array_equal(
        predict_batch(normalize_columns(Classifier(W=W)), Z), predict_batch(Classifier(W=W), Z)
    )


def test_predict_is_invariant_to_positive_rescaling_of_the_input(rng):
    classifier = Classifier(W=rng.standard_normal((4, 5)))
    for _ in range(20):
        z = rng.standard_normal(4)
        assert predict(classifier, z) == predict(classifier, 7.5 * z) == predict(classifier, 1e-3 * z)
    assert predict(Classifier(W=np.eye(3)), [1.0, 0.0, 0.0]) == 0
    assert predict(normalize_columns(Classifier(W=np.eye(3))), np.zeros(3)) == 0


def test_random_classifier_scores_chance_accuracy(rng):
    n, C = 4000, 4
    dataset = FeatureDataset.from_arrays(rng.standard_normal((n, 6)), np.arange(n) % C, C)
    accuracy = evaluate_accuracy(Classifier(W=rng.standard_normal((6, C))), dataset)
    assert abs(accuracy - 1 / C) <= 5 / np.sqrt(n)


def test_evaluate_accuracy_extremes():
    dataset = FeatureDataset.from_arrays(np.eye(2)[[0, 1, 0, 1]], [0, 1, 0, 1], 2)
    assert evaluate_accuracy(Classifier(W=np.eye(2)), dataset) == 1.0

    flipped = FeatureDataset.from_arrays(dataset.features, [1, 0, 1, 0], 2)
    assert evaluate_accuracy(Classifier(W=np.eye(2)), flipped) == 0.0


def test_stats_header_and_payload_are_strict(tmp_path, rng):
    _, _, stats = _random_stats(rng)
    payload = stats_to_bytes(stats)

    with pytest.raises(CorruptFile):
        stats_from_bytes(payload + b"\x00")

    bumped = tmp_path / "bumped.f3rs"
    bumped.write_bytes(payload[:4] + (2).to_bytes(4, "little") + payload[8:])
    with pytest.raises(VersionUnsupported):
        read_stats_header(bumped)
