import csv
import io
import json
import math

import numpy as np
import pytest
import yaml

from src.fed3r.cli import COVERAGE_COLUMNS, main
from src.fed3r.config import parse_run_config
from src.fed3r.coverage import coupon_rounds
from src.fed3r.data.dataset import read_features
from src.fed3r.data.partition import SCHEME_SINGLE_CLASS, read_manifest
from src.fed3r.ridge import read_stats
from src.fed3r.runner import (
    METRICS_COLUMNS, classifier_from_npz, load_data, metrics_rows, rows_to_csv, run_experiment
)

RUN_CONFIG = {
    "algorithm": "fed3r",
    "seed": 5,
    "data": {"synthetic": {"classes": 4, "d": 8, "per_class_n": 40, "test_fraction": 0.25}},
    "federation": {"K": 10, "kappa": 3},
}


def _write_config(tmp_path, document) -> str:
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(document), encoding="utf-8")
    return str(path)


def _read_csv(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


def test_gen_writes_readable_files(tmp_path):
    out = tmp_path / "data"
    code = main(["gen", "--out-dir", str(out), "--classes", "3", "--d", "4", "--per-class", "20", "-K", "6"])

    dataset = read_features(out / "features.f3rd")
    manifest = read_manifest(out / "manifest.json")
    assert code == 0
    assert dataset.n == 3 * 20 and dataset.d == 4
    assert manifest.K == 6
    manifest.validate(dataset.n)


def test_gen_with_zero_alpha_gives_single_class_clients(tmp_path):
    out = tmp_path / "data"
    main(["gen", "--out-dir", str(out), "--classes", "3", "--per-class", "10", "--alpha", "0", "--test-fraction", "0.2"])

    manifest = read_manifest(out / "manifest.json")
    assert manifest.scheme == SCHEME_SINGLE_CLASS
    assert (out / "test.f3rd").exists()


def test_run_writes_metrics_meta_and_checkpoints(tmp_path):
    out = tmp_path / "run"
    assert main(["run", _write_config(tmp_path, RUN_CONFIG), "--output", str(out)]) == 0

    metrics = (out / "metrics.csv").read_text(encoding="utf-8")
    rows = _read_csv(metrics)
    meta = json.loads((out / "run_meta.json").read_text(encoding="utf-8"))

    assert metrics.splitlines()[0] == ",".join(METRICS_COLUMNS)
    assert "\r" not in metrics
    assert len(rows) == math.ceil(10 / 3)
    assert rows[-1]["distinct_clients_cum"] == "10"
    assert meta["config"]["federation"]["lambda"] == 0.01
    assert meta["flags"]["merge_order"] == "ascending_client_id"
    assert read_stats(out / "stats.f3rs").count == 120
    assert classifier_from_npz(out / "classifier.npz").normalized


def test_run_is_bitwise_reproducible(tmp_path):
    config = _write_config(tmp_path, RUN_CONFIG)
    main(["run", config, "--output", str(tmp_path / "a")])
    main(["run", config, "--output", str(tmp_path / "b"), "--threads", "3"])

    assert (tmp_path / "a" / "metrics.csv").read_bytes() == (tmp_path / "b" / "metrics.csv").read_bytes()


def test_missing_feature_file_exits_2_without_outputs(tmp_path):
    document = {**RUN_CONFIG, "data": {"features_path": str(tmp_path / "missing.f3rd")}}
    out = tmp_path / "run"

    assert main(["run", _write_config(tmp_path, document), "--output", str(out)]) == 2
    assert not out.exists()


def test_invalid_config_exits_1(tmp_path, capsys):
    document = {**RUN_CONFIG, "federation": {"K": 10, "kappa": 30}}

    assert main(["run", _write_config(tmp_path, document), "--output", str(tmp_path / "run")]) == 1
    assert "error:" in capsys.readouterr().err


def test_run_from_generated_files(tmp_path):
    data = tmp_path / "data"
    main(["gen", "--out-dir", str(data), "--classes", "3", "--per-class", "30", "-K", "8"])
    document = {
        "algorithm": "fedncm",
        "data": {"features_path": str(data / "features.f3rd"), "manifest_path": str(data / "manifest.json")},
        "federation": {"K": 8, "kappa": 4},
    }

    assert main(["run", _write_config(tmp_path, document), "--output", str(tmp_path / "run")]) == 0
    assert len(_read_csv((tmp_path / "run" / "metrics.csv").read_text(encoding="utf-8"))) == 2
    assert not (tmp_path / "run" / "stats.f3rs").exists()


def test_malformed_manifest_exits_2(tmp_path, capsys):
    data = tmp_path / "data"
    main(["gen", "--out-dir", str(data), "--classes", "3", "--per-class", "30", "-K", "8"])
    manifest = json.loads((data / "manifest.json").read_text(encoding="utf-8"))
    (data / "manifest.json").write_text(json.dumps({**manifest, "alpha": "abc"}), encoding="utf-8")
    document = {
        "algorithm": "fed3r",
        "data": {"features_path": str(data / "features.f3rd"), "manifest_path": str(data / "manifest.json")},
        "federation": {"K": 8, "kappa": 4},
    }

    assert main(["run", _write_config(tmp_path, document), "--output", str(tmp_path / "run")]) == 2
    assert "manifest_bad_alpha" in capsys.readouterr().err


def test_coupon_matches_the_library(tmp_path):
    out = tmp_path / "coverage.csv"
    assert main(["coupon", "--K", "20", "--kappa", "5", "--trials", "50", "--seed", "4", "--output", str(out)]) == 0

    rows = _read_csv(out.read_text(encoding="utf-8"))
    expected = coupon_rounds(20, 5, trials=50, seed=4)
    assert list(rows[0]) == list(COVERAGE_COLUMNS)
    assert [float(row["mean_rounds"]) for row in rows] == list(expected.mean_rounds)


def test_coupon_with_everyone_sampled(capsys):
    assert main(["coupon", "--K", "5", "--kappa", "5", "--trials", "10"]) == 0
    rows = _read_csv(capsys.readouterr().out)
    assert {row["mean_rounds"] for row in rows} == {"1.0"}
    assert {row["std_rounds"] for row in rows} == {"0.0"}


def test_coupon_rejects_kappa_above_K():
    assert main(["coupon", "--K", "5", "--kappa", "6"]) == 1


def test_inspect_prints_headers(tmp_path, capsys):
    data = tmp_path / "data"
    main(["gen", "--out-dir", str(data), "--classes", "2", "--per-class", "5", "-K", "3"])
    capsys.readouterr()

    assert main(["inspect", str(data / "features.f3rd")]) == 0
    assert json.loads(capsys.readouterr().out)["n"] == 10
    assert main(["inspect", str(data / "manifest.json")]) == 0
    assert json.loads(capsys.readouterr().out)["K"] == 3


def test_cost_table_for_landmarks(capsys):
    assert main(["cost", "--preset", "landmarks", "--algorithms", "fed3r,fedavg_lp"]) == 0
    rows = {row["algorithm"]: row for row in _read_csv(capsys.readouterr().out)}
    assert rows["fed3r"]["up_bytes_per_client"] == "16936960"
    assert rows["fedavg_lp"]["down_bytes_per_client"] == str(2_595_840 * 4)


@pytest.mark.parametrize(
    "overrides, algorithm",
    [
        (["algorithm=fed3r_rf", "federation.rff.D=32", "federation.rff.sigma=3"], "fed3r_rf"),
        (["algorithm=fedavgm_lp", "lp.server_momentum=0.9", "lp.rounds=3"], "fedavgm_lp"),
        (["algorithm=fed3r_ftlp", "lp.rounds=2"], "fed3r+fedavg_lp"),
    ],
)
def test_run_experiment_dispatches_algorithms(overrides, algorithm):
    cfg = parse_run_config(RUN_CONFIG, overrides)
    outcome = run_experiment(cfg, load_data(cfg.data, cfg.federation.K, cfg.seed))

    assert outcome.trace.algorithm == algorithm
    assert outcome.trace.final_accuracy is not None
    assert len(metrics_rows(outcome.trace)) == outcome.trace.rounds


def test_rows_to_csv_formats_values():
    text = rows_to_csv([{"a": 1, "b": None, "c": 0.1}], ("a", "b", "c"))
    assert text == "a,b,c\n1,,0.1\n"


def test_load_data_is_seeded():
    cfg = parse_run_config(RUN_CONFIG)
    first = load_data(cfg.data, cfg.federation.K, cfg.seed)
    second = load_data(cfg.data, cfg.federation.K, cfg.seed)

    np.testing.assert_array_equal(first.train.features, second.train.features)
    assert [c.tolist() for c in first.manifest.clients] == [c.tolist() for c in second.manifest.clients]
    assert first.test.n == 40
