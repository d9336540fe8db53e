"""
Experiment orchestration shared by the CLI and the HTTP service: load or generate
data, run the configured algorithm and turn the result into metrics rows, run
metadata and checkpoints.

Output directory of a run::

    metrics.csv      one row per round
    run_meta.json    resolved config, behaviour flags, library versions
    stats.f3rs       merged ridge statistics (closed-form ridge runs only)
    classifier.npz   W, temperature, normalized flag, zero columns
"""

from __future__ import annotations

import csv
import io
import json
import logging
import platform
from dataclasses import dataclass
from importlib import metadata
from pathlib import Path
from typing import Any, Optional

import numpy as np

from src.base.worker_pool import WorkerPool
from src.fed3r.baselines import LPInit, run_fedncm, run_lp
from src.fed3r.config import Algorithm, DatasetSource, PartitionSettings, RunConfig
from src.fed3r.cost import CostParams, one_time_values
from src.fed3r.data.dataset import FeatureDataset, gen_gaussian_mixture, read_features, train_test_split, write_features
from src.fed3r.data.files import atomic_write_bytes, atomic_write_text
from src.fed3r.data.partition import (
    SCHEME_SINGLE_CLASS, PartitionManifest, partition_dirichlet, partition_single_class, read_manifest,
    write_manifest
)
from src.fed3r.exception.core import DimensionMismatch
from src.fed3r.federation import Fed3RSimulation, TrainingTrace
from src.fed3r.random_features import RFFMap
from src.fed3r.ridge import Classifier, RRStatistics, write_stats
from src.fed3r.seeding import derive_seed

logger = logging.getLogger(__name__)

METRICS_COLUMNS = (
    "round",
    "new_clients",
    "distinct_clients_cum",
    "accuracy",
    "comm_down_bytes_cum",
    "comm_up_bytes_cum",
    "avg_client_flops_cum",
)

METRICS_FILE = "metrics.csv"
META_FILE = "run_meta.json"
STATS_FILE = "stats.f3rs"
CLASSIFIER_FILE = "classifier.npz"


@dataclass(frozen=True)
class LoadedData:
    train: FeatureDataset
    test: Optional[FeatureDataset]
    manifest: PartitionManifest


@dataclass(frozen=True)
class RunOutcome:
    classifier: Classifier
    trace: TrainingTrace
    cost: CostParams
    stats: Optional[RRStatistics] = None
    rff: Optional[RFFMap] = None


# region: data
def build_partition(dataset: FeatureDataset, settings: PartitionSettings, K: int, seed: int) -> PartitionManifest:
    """Dirichlet partition into K clients, or single-class clients when alpha is 0 or the scheme says so."""
    if settings.resolved_scheme == SCHEME_SINGLE_CLASS:
        return partition_single_class(dataset, seed, settings.clients_per_class)
    return partition_dirichlet(dataset, K, settings.alpha, seed)


def load_data(source: DatasetSource, K: int, seed: int) -> LoadedData:
    if source.synthetic is not None:
        synthetic = source.synthetic
        dataset = gen_gaussian_mixture(
            synthetic.classes, synthetic.d, synthetic.per_class_n, synthetic.separation,
            synthetic.anisotropy, seed=derive_seed(seed, "data"),
        )
        test = None
        if synthetic.test_fraction > 0:
            dataset, test = train_test_split(dataset, synthetic.test_fraction, derive_seed(seed, "split"))
    else:
        dataset = read_features(source.features_path)
        test = read_features(source.test_features_path) if source.test_features_path is not None else None
        if test is not None and (test.d != dataset.d or test.num_classes != dataset.num_classes):
            raise DimensionMismatch("test_features_shape_mismatch")

    if source.manifest_path is not None:
        manifest = read_manifest(source.manifest_path)
    else:
        manifest = build_partition(dataset, source.partition, K, derive_seed(seed, "partition"))

    logger.info("data_loaded n=%d d=%d classes=%d clients=%d", dataset.n, dataset.d, dataset.num_classes, manifest.K)
    return LoadedData(train=dataset, test=test, manifest=manifest)


def generate_files(
    out_dir: Path,
    *,
    classes: int,
    d: int,
    per_class_n: int,
    separation: float,
    anisotropy: float,
    K: int,
    alpha: float,
    clients_per_class: int,
    test_fraction: float,
    seed: int,
) -> dict[str, Path]:
    """Write a synthetic feature file, its manifest and optionally a held-out feature file."""
    dataset = gen_gaussian_mixture(classes, d, per_class_n, separation, anisotropy, seed=derive_seed(seed, "data"))
    test = None
    if test_fraction > 0:
        dataset, test = train_test_split(dataset, test_fraction, derive_seed(seed, "split"))

    settings = PartitionSettings(alpha=alpha, clients_per_class=clients_per_class)
    manifest = build_partition(dataset, settings, K, derive_seed(seed, "partition"))

    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"features": out_dir / "features.f3rd", "manifest": out_dir / "manifest.json"}
    write_features(paths["features"], dataset)
    write_manifest(paths["manifest"], manifest)
    if test is not None:
        paths["test_features"] = out_dir / "test.f3rd"
        write_features(paths["test_features"], test)

    logger.info("dataset_generated n=%d clients=%d scheme=%s", dataset.n, manifest.K, manifest.scheme)
    return paths
# endregion: data


def run_experiment(cfg: RunConfig, data: LoadedData, pool: Optional[WorkerPool] = None) -> RunOutcome:
    fed = cfg.federation
    cost = CostParams(
        d=data.train.d, C=data.train.num_classes, K=data.manifest.K, kappa=fed.kappa, **cfg.cost.constants()
    )
    common: dict[str, Any] = {"eval_dataset": data.test, "cost": cost, "pool": pool}
    logger.info("experiment_started algorithm=%s K=%d kappa=%d seed=%d", cfg.algorithm.value, fed.K, fed.kappa, cfg.seed)

    if cfg.algorithm in (Algorithm.FED3R, Algorithm.FED3R_RF, Algorithm.FED3R_FTLP):
        simulation = Fed3RSimulation(data.train, data.manifest, fed, **common)
        classifier, trace = simulation.run()
        if cfg.algorithm == Algorithm.FED3R_FTLP:
            classifier, trace = run_lp(
                data.train, data.manifest, cfg.lp.model_copy(update={"init": LPInit.FED3R}), fed,
                init_classifier=classifier, rff=simulation.rff, prior=trace, eval_ds=data.test, cost=cost, pool=pool,
            )
        return RunOutcome(classifier, trace, simulation.cost, simulation.server.stats, simulation.rff)

    if cfg.algorithm == Algorithm.FEDNCM:
        classifier, trace = run_fedncm(data.train, data.manifest, fed, eval_ds=data.test, cost=cost, pool=pool)
        return RunOutcome(classifier, trace, cost)

    classifier, trace = run_lp(data.train, data.manifest, cfg.lp, fed, eval_ds=data.test, cost=cost, pool=pool)
    return RunOutcome(classifier, trace, cost)


# region: outputs
def metrics_rows(trace: TrainingTrace) -> list[dict[str, Any]]:
    return [
        {
            "round": record.round,
            "new_clients": len(record.new_ids),
            "distinct_clients_cum": record.distinct_clients_cum,
            "accuracy": record.accuracy,
            "comm_down_bytes_cum": record.ledger.down_bytes_cum,
            "comm_up_bytes_cum": record.ledger.up_bytes_cum,
            "avg_client_flops_cum": record.ledger.avg_client_flops_cum,
        }
        for record in trace.records
    ]


def _csv_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows: list[dict[str, Any]], columns: tuple[str, ...] | list[str]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_csv_value(row[column]) for column in columns])
    return buffer.getvalue()


def _version(distribution: str) -> str:
    try:
        return metadata.version(distribution)
    except metadata.PackageNotFoundError:
        return "unknown"


def run_meta(cfg: RunConfig, outcome: RunOutcome) -> dict[str, Any]:
    return {
        "config": cfg.model_dump(mode="json", by_alias=True),
        "algorithm": outcome.trace.algorithm,
        "rounds": outcome.trace.rounds,
        "final_accuracy": outcome.trace.final_accuracy,
        "flags": outcome.trace.meta,
        "cost_params": outcome.cost.model_dump(mode="json", exclude={"n_k"}),
        "one_time_costs_values": one_time_values(outcome.trace.algorithm.split("+")[0], outcome.cost),
        "classifier": {
            "normalized": outcome.classifier.normalized,
            "temperature": outcome.classifier.temperature,
            "zero_columns": list(outcome.classifier.zero_columns),
        },
        "versions": {
            "python": platform.python_version(),
            "fed3r-sim": _version("fed3r-sim"),
            "numpy": np.__version__,
            "scipy": _version("scipy"),
            "pydantic": _version("pydantic"),
        },
    }


def classifier_to_bytes(classifier: Classifier) -> bytes:
    buffer = io.BytesIO()
    np.savez(
        buffer,
        W=classifier.W,
        temperature=np.float64(classifier.temperature),
        normalized=np.bool_(classifier.normalized),
        zero_columns=np.array(classifier.zero_columns, dtype=np.int64),
    )
    return buffer.getvalue()


def classifier_from_npz(path: Path) -> Classifier:
    with np.load(path) as archive:
        return Classifier(
            W=np.ascontiguousarray(archive["W"]),
            temperature=float(archive["temperature"]),
            normalized=bool(archive["normalized"]),
            zero_columns=tuple(int(c) for c in archive["zero_columns"]),
        )


def write_run_outputs(cfg: RunConfig, outcome: RunOutcome) -> dict[str, Path]:
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    paths = {
        "metrics": out_dir / METRICS_FILE,
        "meta": out_dir / META_FILE,
        "classifier": out_dir / CLASSIFIER_FILE,
    }
    atomic_write_text(paths["metrics"], rows_to_csv(metrics_rows(outcome.trace), METRICS_COLUMNS))
    atomic_write_text(paths["meta"], json.dumps(run_meta(cfg, outcome), indent=2, sort_keys=True) + "\n")
    atomic_write_bytes(paths["classifier"], classifier_to_bytes(outcome.classifier))
    if outcome.stats is not None:
        paths["stats"] = out_dir / STATS_FILE
        write_stats(paths["stats"], outcome.stats)

    logger.info("run_outputs_written dir=%s rounds=%d", out_dir, outcome.trace.rounds)
    return paths
# endregion: outputs
