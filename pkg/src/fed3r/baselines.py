"""
Comparison methods over the same frozen feature space.

* FedNCM: closed-form nearest-class-mean classifier from per-class sums and counts.
* FedAvg-LP / FedAvgM-LP: softmax linear probing trained with local SGD and
  (momentum) server averaging.
* Fed3R+FTlp: linear probing started from the ridge classifier, with its softmax
  temperature calibrated first.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import log_softmax, softmax

from src.base.worker_pool import WorkerPool, run_serially_or_pooled
from src.fed3r.cost import CostAlgorithm, CostLedger, CostParams, LedgerSnapshot
from src.fed3r.data.dataset import FeatureDataset
from src.fed3r.data.partition import PartitionManifest
from src.fed3r.exception.core import DimensionMismatch, EmptyGrid, InvalidParams
from src.fed3r.federation import (
    AggregationServer, ClientPool, Fed3RSimulation, FederationConfig, RoundRecord, SamplingMode,
    TrainingTrace, check_manifest, resolve_cost_params, sample_clients
)
from src.fed3r.linalg import DenseMatrix, as_dense, cross, one_hot
from src.fed3r.random_features import RFFMap, apply_rff
from src.fed3r.ridge import Classifier, evaluate_accuracy, normalize_columns
from src.fed3r.seeding import rng_for

logger = logging.getLogger(__name__)

DEFAULT_TEMPERATURE_GRID = (0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0)


# region: FedNCM
@dataclass(frozen=True)
class ClassMeanStatistics:
    sums: DenseMatrix
    counts: np.ndarray

    @classmethod
    def zero(cls, dim: int, classes: int) -> "ClassMeanStatistics":
        return cls(sums=np.zeros((dim, classes)), counts=np.zeros(classes, dtype=np.int64))


def class_mean_stats(features: DenseMatrix, labels: np.ndarray, num_classes: int) -> ClassMeanStatistics:
    targets = one_hot(labels, num_classes)
    return ClassMeanStatistics(sums=cross(features, targets), counts=targets.sum(axis=0).astype(np.int64))


def merge_class_mean_stats(s1: ClassMeanStatistics, s2: ClassMeanStatistics) -> ClassMeanStatistics:
    if s1.sums.shape != s2.sums.shape:
        raise DimensionMismatch("class_mean_stats_shape_mismatch")
    return ClassMeanStatistics(sums=s1.sums + s2.sums, counts=s1.counts + s2.counts)


def class_mean_classifier(stats: ClassMeanStatistics) -> Classifier:
    """Unit-normalized class means; classes without samples keep a zero column."""
    absent = np.flatnonzero(stats.counts == 0)
    if absent.size:
        logger.warning("fedncm_absent_classes classes=%s", absent.tolist())
    means = stats.sums / np.where(stats.counts > 0, stats.counts, 1)
    return normalize_columns(Classifier(W=np.ascontiguousarray(means)))


class FedNCMServer(AggregationServer[ClassMeanStatistics]):
    def __init__(self, dim: int, classes: int):
        super().__init__(ClassMeanStatistics.zero(dim, classes))

    def merge(self, total: ClassMeanStatistics, stats: ClassMeanStatistics) -> ClassMeanStatistics:
        return merge_class_mean_stats(total, stats)

    def solve(self) -> Classifier:
        return class_mean_classifier(self.stats)


class FedNCMSimulation(Fed3RSimulation):
    """Round loop of `Fed3RSimulation` with clients uploading per-class sums and counts."""

    def __init__(self, dataset: FeatureDataset, manifest: PartitionManifest, cfg: FederationConfig, **kwargs: Any):
        super().__init__(dataset, manifest, cfg.model_copy(update={"rff": None}), **kwargs)
        self.algorithm = CostAlgorithm.FEDNCM

    def _make_server(self) -> FedNCMServer:
        return FedNCMServer(self.dataset.d, self.dataset.num_classes)

    def _client_stats(self, client_id: int) -> ClassMeanStatistics:
        shard = self.dataset.subset(self.manifest.clients[client_id])
        return class_mean_stats(shard.features, shard.labels, shard.num_classes)


def fedncm_fit(ds: FeatureDataset, manifest: PartitionManifest, *, pool: Optional[WorkerPool] = None) -> Classifier:
    """
    Nearest-class-mean classifier from all clients at once. Each client contributes
    its per-class sums and counts, the server divides and normalizes.
    """
    manifest.validate(ds.n)

    def client_stats(indices: np.ndarray) -> ClassMeanStatistics:
        shard = ds.subset(indices)
        return class_mean_stats(shard.features, shard.labels, ds.num_classes)

    total = ClassMeanStatistics.zero(ds.d, ds.num_classes)
    for stats in run_serially_or_pooled(pool, client_stats, manifest.clients):
        total = merge_class_mean_stats(total, stats)
    return class_mean_classifier(total)


def run_fedncm(
    ds: FeatureDataset,
    manifest: PartitionManifest,
    cfg: FederationConfig,
    *,
    eval_ds: Optional[FeatureDataset] = None,
    cost: Optional[CostParams] = None,
    pool: Optional[WorkerPool] = None,
) -> tuple[Classifier, TrainingTrace]:
    return FedNCMSimulation(ds, manifest, cfg, eval_dataset=eval_ds, cost=cost, pool=pool).run()
# endregion: FedNCM


# region: linear probing
class LPInit(str, Enum):
    RANDOM = "random"
    FED3R = "fed3r"


class LPConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    lr: float = Field(default=0.1, ge=0, description="Client learning rate")
    weight_decay: float = Field(default=4e-5, ge=0)
    batch_size: int = Field(default=50, ge=1)
    local_epochs: int = Field(default=5, ge=1, description="E")
    server_lr: float = Field(default=1.0, ge=0)
    server_momentum: float = Field(default=0.0, ge=0, lt=1)
    rounds: int = Field(default=100, ge=1)
    temperature: float = Field(default=1.0, gt=0, description="Softmax temperature")
    init: LPInit = LPInit.RANDOM
    init_scale: float = Field(default=0.01, ge=0, description="Std of the random initial classifier")
    calibrate_temperature: bool = Field(default=True, description="Calibrate the temperature of a fed3r init")
    temperature_grid: tuple[float, ...] = DEFAULT_TEMPERATURE_GRID

    @property
    def algorithm(self) -> CostAlgorithm:
        return CostAlgorithm.FEDAVGM_LP if self.server_momentum > 0 else CostAlgorithm.FEDAVG_LP


def softmax_forward(W: DenseMatrix, tau: float, z: DenseMatrix) -> np.ndarray:
    """``softmax(W.T z / tau)`` for one sample (vector) or a batch (rows)."""
    if not tau > 0:
        raise InvalidParams("temperature_must_be_positive")
    return softmax(np.asarray(z, dtype=np.float64) @ W / tau, axis=-1)


def ce_loss_and_grad(W: DenseMatrix, tau: float, Z: DenseMatrix, labels: np.ndarray) -> tuple[float, DenseMatrix]:
    """
    Mean cross-entropy of ``softmax(Z W / tau)`` and its gradient with respect to W,
    ``Z.T (P - Y) / (tau n)``. Weight decay is left to the caller.
    """
    Z = as_dense(Z, check_finite=False)
    n = Z.shape[0]
    if n == 0:
        raise InvalidParams("empty_batch")
    if not tau > 0:
        raise InvalidParams("temperature_must_be_positive")

    targets = one_hot(labels, W.shape[1])
    log_probs = log_softmax(Z @ W / tau, axis=1)
    loss = -float(np.sum(log_probs * targets)) / n
    grad = Z.T @ (np.exp(log_probs) - targets) / (tau * n)
    return loss, grad


def local_sgd_lp(W_in: DenseMatrix, shard: FeatureDataset, lp_cfg: LPConfig, rng: np.random.Generator) -> DenseMatrix:
    """
    `lp_cfg.local_epochs` epochs of mini-batch SGD on cross-entropy plus weight decay.
    Every epoch reshuffles the shard; the last partial batch is kept.
    """
    if shard.n == 0:
        raise InvalidParams("empty_shard")

    W = np.array(W_in, dtype=np.float64, copy=True)
    for _ in range(lp_cfg.local_epochs):
        order = rng.permutation(shard.n)
        for start in range(0, shard.n, lp_cfg.batch_size):
            batch = order[start:start + lp_cfg.batch_size]
            _, grad = ce_loss_and_grad(W, lp_cfg.temperature, shard.features[batch], shard.labels[batch])
            W -= lp_cfg.lr * (grad + lp_cfg.weight_decay * W)
    return W


def server_aggregate(
    models: Sequence[tuple[DenseMatrix, int]],
    base_W: DenseMatrix,
    server_lr: float,
    server_momentum: float = 0.0,
    momentum_state: Optional[DenseMatrix] = None,
) -> tuple[DenseMatrix, DenseMatrix]:
    """
    Server update in pseudo-gradient form::

        delta = base_W - sum_k (n_k / n) W_k
        momentum = server_momentum * momentum + delta
        W_new = base_W - server_lr * momentum

    Zero momentum with unit server learning rate is plain FedAvg averaging.
    """
    total = sum(n_k for _, n_k in models)
    if total <= 0:
        raise InvalidParams("aggregate_needs_samples")

    average = np.zeros_like(base_W, dtype=np.float64)
    for W_k, n_k in models:
        average += (n_k / total) * W_k

    delta = base_W - average
    momentum = delta if momentum_state is None else server_momentum * momentum_state + delta
    return base_W - server_lr * momentum, momentum


def calibrate_temperature(W: DenseMatrix, ds: FeatureDataset, grid: Sequence[float]) -> float:
    """
    Temperature of `grid` with the lowest mean cross-entropy of ``softmax(Z W / tau)``
    on `ds`; ties go to the smaller temperature.

    :raises EmptyGrid: if `grid` is empty
    """
    if not len(grid):
        raise EmptyGrid()

    best_tau, best_loss = None, np.inf
    for tau in sorted(float(t) for t in grid):
        loss, _ = ce_loss_and_grad(W, tau, ds.features, ds.labels)
        if loss < best_loss:
            best_tau, best_loss = tau, loss
    if best_tau is None:
        # every loss was NaN
        best_tau = min(float(t) for t in grid)
    logger.info("temperature_calibrated tau=%g loss=%.6f", best_tau, best_loss)
    return best_tau


def _lift(ds: FeatureDataset, rff: Optional[RFFMap]) -> FeatureDataset:
    if rff is None:
        return ds
    return FeatureDataset(features=apply_rff(rff, ds.features), labels=ds.labels, num_classes=ds.num_classes)


def run_lp(
    ds: FeatureDataset,
    manifest: PartitionManifest,
    lp_cfg: LPConfig,
    fed_cfg: FederationConfig,
    *,
    init_classifier: Optional[Classifier] = None,
    rff: Optional[RFFMap] = None,
    prior: Optional[TrainingTrace] = None,
    eval_ds: Optional[FeatureDataset] = None,
    cost: Optional[CostParams] = None,
    pool: Optional[WorkerPool] = None,
) -> tuple[Classifier, TrainingTrace]:
    """
    FedAvg(M) linear probing. Every round samples `fed_cfg.kappa` distinct clients
    from all K, each trains locally from the current classifier with its own RNG
    (``lp/<round>/<client>``), and the server aggregates in ascending client-id order.

    With `prior` (the trace of a finished Fed3R run) the rounds, the cost ledger
    and the client coverage continue from where that run stopped.

    :param init_classifier: required when ``lp_cfg.init`` is ``fed3r``
    :param rff: random-feature map the initial classifier lives in, if any
    """
    check_manifest(ds, manifest, fed_cfg.K)
    if lp_cfg.init == LPInit.FED3R and init_classifier is None:
        raise InvalidParams("fed3r_init_requires_classifier")

    train = _lift(ds, rff)
    evaluation = _lift(eval_ds, rff) if eval_ds is not None else train
    shards = [train.subset(indices) for indices in manifest.clients]

    if lp_cfg.init == LPInit.FED3R:
        W = np.array(init_classifier.W, dtype=np.float64, copy=True)
        if W.shape != (train.d, train.num_classes):
            raise DimensionMismatch("init_classifier_shape_mismatch")
        if lp_cfg.calibrate_temperature:
            lp_cfg = lp_cfg.model_copy(update={"temperature": calibrate_temperature(W, train, lp_cfg.temperature_grid)})
    else:
        W = rng_for(fed_cfg.seed, "lp_init").normal(0.0, lp_cfg.init_scale, size=(train.d, train.num_classes))

    params = resolve_cost_params(cost, train, manifest, fed_cfg.kappa)
    params = params.model_copy(update={"E": lp_cfg.local_epochs})
    start = prior.records[-1].ledger if prior is not None and prior.records else LedgerSnapshot()
    ledger = CostLedger(lp_cfg.algorithm, params, params.n_k, start=start)

    trace = TrainingTrace(
        algorithm=lp_cfg.algorithm.value if prior is None else f"{prior.algorithm}+{lp_cfg.algorithm.value}",
        K=fed_cfg.K,
        records=list(prior.records) if prior is not None else [],
        meta={
            **(prior.meta if prior is not None else {}),
            "lp_init": lp_cfg.init.value,
            "lp_temperature": lp_cfg.temperature,
            "lp_sampling_mode": SamplingMode.WITH_REPLACEMENT.value,
            "weight_decay_on_fed3r_init": lp_cfg.init == LPInit.FED3R and lp_cfg.weight_decay > 0,
            "fed3r_init_normalized": lp_cfg.init == LPInit.FED3R and init_classifier is not None and init_classifier.normalized,
            "lp_first_round": (prior.rounds if prior is not None else 0) + 1,
        },
    )
    seen = set(prior.all_sampled_ids()) if prior is not None else set()
    offset = prior.rounds if prior is not None else 0

    rng = rng_for(fed_cfg.seed, "lp")
    clients = ClientPool.fresh(fed_cfg.K)
    momentum = None
    classifier = Classifier(W=W, temperature=lp_cfg.temperature)

    for t in range(1, lp_cfg.rounds + 1):
        sampled = sample_clients(clients, fed_cfg.kappa, SamplingMode.WITH_REPLACEMENT, rng)
        ordered = sorted(sampled)
        base_W = W

        def train_client(client_id: int) -> DenseMatrix:
            return local_sgd_lp(base_W, shards[client_id], lp_cfg, rng_for(fed_cfg.seed, f"lp/{t}/{client_id}"))

        local_models = run_serially_or_pooled(pool, train_client, ordered)
        W, momentum = server_aggregate(
            [(W_k, shards[k].n) for k, W_k in zip(ordered, local_models)],
            base_W, lp_cfg.server_lr, lp_cfg.server_momentum, momentum,
        )

        new_ids = tuple(k for k in ordered if k not in seen)
        seen.update(sampled)
        snapshot = ledger.charge_round(sampled)

        accuracy = None
        classifier = Classifier(W=W, temperature=lp_cfg.temperature)
        if t == lp_cfg.rounds or t % fed_cfg.eval_every == 0:
            accuracy = evaluate_accuracy(classifier, evaluation)

        trace.append(RoundRecord(
            round=offset + t,
            sampled_ids=tuple(sampled),
            new_ids=new_ids,
            distinct_clients_cum=len(seen),
            accuracy=accuracy,
            ledger=snapshot,
        ))
        logger.debug("lp_round_completed round=%d sampled=%d distinct=%d", offset + t, len(sampled), len(seen))

    logger.info(
        "lp_finished algorithm=%s rounds=%d accuracy=%.4f", lp_cfg.algorithm.value, lp_cfg.rounds, trace.final_accuracy
    )
    return classifier, trace


def run_fed3r_ftlp(
    ds: FeatureDataset,
    manifest: PartitionManifest,
    lp_cfg: LPConfig,
    fed_cfg: FederationConfig,
    *,
    eval_ds: Optional[FeatureDataset] = None,
    cost: Optional[CostParams] = None,
    pool: Optional[WorkerPool] = None,
) -> tuple[Classifier, TrainingTrace]:
    """Fed3R until every client was seen, then classifier-only fine-tuning from its solution."""
    simulation = Fed3RSimulation(ds, manifest, fed_cfg, eval_dataset=eval_ds, cost=cost, pool=pool)
    fed3r_classifier, fed3r_trace = simulation.run()
    return run_lp(
        ds, manifest, lp_cfg.model_copy(update={"init": LPInit.FED3R}), fed_cfg,
        init_classifier=fed3r_classifier,
        rff=simulation.rff,
        prior=fed3r_trace,
        eval_ds=eval_ds,
        cost=cost,
        pool=pool,
    )
# endregion: linear probing
