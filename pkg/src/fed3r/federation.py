"""
Round-based federation driver for the closed-form classifier.

Each round the server samples clients, every sampled client computes its ridge
statistics once (after the random-feature map when one is configured) and the
server merges them. Merges inside a round happen in ascending client-id order,
so the fold is deterministic whatever order the workers finish in.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Generic, Optional, TypeVar

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.base.worker_pool import WorkerPool, run_serially_or_pooled
from src.fed3r.cost import CostAlgorithm, CostLedger, CostParams, LedgerSnapshot
from src.fed3r.data.dataset import FeatureDataset
from src.fed3r.data.partition import PartitionManifest
from src.fed3r.exception.core import InvalidParams, PoolExhausted
from src.fed3r.random_features import ESTIMATOR, RFFMap, apply_rff, sample_rff
from src.fed3r.ridge import (
    DEFAULT_LAMBDA, Classifier, RRStatistics, compute_local_stats, evaluate_accuracy,
    merge_stats, normalize_columns, solve_classifier
)
from src.fed3r.seeding import derive_seed, rng_for

logger = logging.getLogger(__name__)


class SamplingMode(str, Enum):
    WITHOUT_REPLACEMENT = "without_replacement"
    WITH_REPLACEMENT = "with_replacement"


class RFFConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    D: int = Field(ge=1, description="Random feature dimensionality")
    sigma: float = Field(default=1000.0, gt=0, description="RBF bandwidth")
    seed: Optional[int] = Field(default=None, description="Map seed; derived from the run seed when unset")


class FederationConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    K: int = Field(ge=1, description="Total clients")
    kappa: int = Field(default=10, ge=1, description="Clients sampled per round")
    sampling_mode: SamplingMode = SamplingMode.WITHOUT_REPLACEMENT
    rounds_max: Optional[int] = Field(default=None, ge=1)
    lam: float = Field(default=DEFAULT_LAMBDA, gt=0, alias="lambda")
    rff: Optional[RFFConfig] = None
    seed: int = 0
    eval_every: int = Field(default=1, ge=1, description="Solve and evaluate every this many rounds")

    @model_validator(mode="after")
    def _check_kappa(self) -> "FederationConfig":
        if self.kappa > self.K:
            raise ValueError("kappa must not exceed K")
        return self

    @property
    def rounds_to_cover(self) -> int:
        return math.ceil(self.K / self.kappa)


# region: client sampling
@dataclass
class ClientPool:
    """Clients not yet sampled in without-replacement mode."""

    K: int
    remaining: np.ndarray

    @classmethod
    def fresh(cls, K: int) -> "ClientPool":
        return cls(K=K, remaining=np.arange(K, dtype=np.int64))

    @property
    def exhausted(self) -> bool:
        return self.remaining.size == 0


def sample_clients(pool: ClientPool, kappa: int, mode: SamplingMode | str, rng: np.random.Generator) -> list[int]:
    """
    Draw the clients of one round.

    Without replacement, up to `kappa` ids are drawn uniformly among the clients
    never sampled before and removed from `pool`. With replacement, `kappa`
    distinct ids are drawn uniformly among all K; earlier rounds do not matter.

    :raises PoolExhausted: without replacement, once every client has been sampled
    """
    mode = SamplingMode(mode)
    if not 1 <= kappa <= pool.K:
        raise InvalidParams("kappa_out_of_range")

    if mode == SamplingMode.WITH_REPLACEMENT:
        return [int(k) for k in rng.choice(pool.K, size=kappa, replace=False)]

    if pool.exhausted:
        raise PoolExhausted()
    chosen = rng.choice(pool.remaining, size=min(kappa, pool.remaining.size), replace=False)
    pool.remaining = np.setdiff1d(pool.remaining, chosen, assume_unique=True)
    return [int(k) for k in chosen]
# endregion: client sampling


# region: trace
@dataclass(frozen=True)
class RoundRecord:
    round: int
    sampled_ids: tuple[int, ...]
    new_ids: tuple[int, ...]
    distinct_clients_cum: int
    accuracy: Optional[float]
    ledger: LedgerSnapshot


@dataclass
class TrainingTrace:
    algorithm: str
    K: int
    records: list[RoundRecord] = field(default_factory=list)
    meta: dict[str, Any] = field(default_factory=dict)

    def append(self, record: RoundRecord) -> None:
        if self.records:
            last = self.records[-1]
            assert record.round > last.round, "trace_round_not_increasing"
            assert record.distinct_clients_cum >= last.distinct_clients_cum, "trace_coverage_decreasing"
        assert record.distinct_clients_cum <= self.K, "trace_coverage_above_K"
        self.records.append(record)

    @property
    def rounds(self) -> int:
        return len(self.records)

    @property
    def final_accuracy(self) -> Optional[float]:
        for record in reversed(self.records):
            if record.accuracy is not None:
                return record.accuracy
        return None

    def accuracies(self) -> list[Optional[float]]:
        return [record.accuracy for record in self.records]

    def all_sampled_ids(self) -> list[int]:
        return [k for record in self.records for k in record.sampled_ids]
# endregion: trace


def resolve_cost_params(
    cost: Optional[CostParams],
    dataset: FeatureDataset,
    manifest: PartitionManifest,
    kappa: int,
    D: Optional[int] = None,
) -> CostParams:
    """Fill the data-derived fields of `cost` (d, C, K, kappa, n_k, D) from the run."""
    derived = {
        "d": dataset.d,
        "C": dataset.num_classes,
        "K": manifest.K,
        "kappa": kappa,
        "n_k": tuple(int(size) for size in manifest.client_sizes()),
    }
    if D is not None:
        derived["D"] = D
    if cost is None:
        return CostParams(**derived)
    return CostParams(**{**cost.model_dump(), **derived})


def check_manifest(dataset: FeatureDataset, manifest: PartitionManifest, K: int) -> None:
    if manifest.K != K:
        raise InvalidParams(f"manifest_has_{manifest.K}_clients_config_expects_{K}")
    manifest.validate(dataset.n)


ClientUpload = TypeVar("ClientUpload")


class AggregationServer(ABC, Generic[ClientUpload]):
    """
    Accumulates client uploads. A client id is absorbed at most once; repeated
    uploads are ignored so the merged total always equals the sum over the
    distinct clients seen.
    """

    def __init__(self, initial: ClientUpload):
        self.stats: ClientUpload = initial
        self.seen: set[int] = set()

    def absorb(self, client_id: int, stats: ClientUpload) -> bool:
        if client_id in self.seen:
            return False
        self.stats = self.merge(self.stats, stats)
        self.seen.add(client_id)
        return True

    @abstractmethod
    def merge(self, total: ClientUpload, stats: ClientUpload) -> ClientUpload:
        ...

    @abstractmethod
    def solve(self) -> Classifier:
        ...


class Fed3RServer(AggregationServer[RRStatistics]):
    def __init__(self, dim: int, classes: int, lam: float = DEFAULT_LAMBDA):
        super().__init__(RRStatistics.zero(dim, classes))
        self.lam = lam

    def merge(self, total: RRStatistics, stats: RRStatistics) -> RRStatistics:
        return merge_stats(total, stats)

    def solve(self) -> Classifier:
        return normalize_columns(solve_classifier(self.stats, self.lam))


class Fed3RSimulation:
    """
    One federated run of the ridge classifier (optionally in random-feature space).

    `server` and `rff` stay available after `run()` for checkpointing.
    """

    def __init__(
        self,
        dataset: FeatureDataset,
        manifest: PartitionManifest,
        cfg: FederationConfig,
        *,
        eval_dataset: Optional[FeatureDataset] = None,
        cost: Optional[CostParams] = None,
        pool: Optional[WorkerPool] = None,
    ):
        check_manifest(dataset, manifest, cfg.K)
        self.dataset = dataset
        self.manifest = manifest
        self.cfg = cfg
        self.eval_dataset = eval_dataset if eval_dataset is not None else dataset
        self.pool = pool

        self.rff: Optional[RFFMap] = None
        if cfg.rff is not None:
            rff_seed = cfg.rff.seed if cfg.rff.seed is not None else derive_seed(cfg.seed, "rff")
            self.rff = sample_rff(dataset.d, cfg.rff.D, cfg.rff.sigma, rff_seed)

        self.server: AggregationServer[Any] = self._make_server()
        self.algorithm = CostAlgorithm.FED3R_RF if self.rff is not None else CostAlgorithm.FED3R
        self.cost = resolve_cost_params(cost, dataset, manifest, cfg.kappa, self.rff.output_dim if self.rff else None)

    def _make_server(self) -> AggregationServer[Any]:
        dim = self.rff.output_dim if self.rff is not None else self.dataset.d
        return Fed3RServer(dim, self.dataset.num_classes, self.cfg.lam)

    def _client_stats(self, client_id: int) -> Any:
        shard = self.dataset.subset(self.manifest.clients[client_id])
        features = apply_rff(self.rff, shard.features) if self.rff is not None else shard.features
        return compute_local_stats(features, shard.labels, shard.num_classes)

    def _meta(self) -> dict[str, Any]:
        meta: dict[str, Any] = {
            "sampling_mode": self.cfg.sampling_mode.value,
            "normalized_at_every_eval": True,
            "duplicate_uploads_absorbed_once": True,
            "merge_order": "ascending_client_id",
        }
        if self.rff is not None:
            meta.update({
                "rff_estimator": ESTIMATOR,
                "rff_seed": self.rff.seed,
                "rff_projection_flops_counted": self.cost.include_rff_projection,
                "rff_map_shipped": self.cost.ship_rff_map,
            })
        return meta

    def run(self) -> tuple[Classifier, TrainingTrace]:
        cfg = self.cfg
        rng = rng_for(cfg.seed, "sampling")
        clients = ClientPool.fresh(cfg.K)
        ledger = CostLedger(self.algorithm, self.cost, self.cost.n_k)
        trace = TrainingTrace(algorithm=self.algorithm.value, K=cfg.K, meta=self._meta())
        classifier: Optional[Classifier] = None

        t = 0
        while True:
            t += 1
            sampled = sample_clients(clients, cfg.kappa, cfg.sampling_mode, rng)
            new_ids = sorted(k for k in set(sampled) if k not in self.server.seen)

            for client_id, stats in zip(new_ids, run_serially_or_pooled(self.pool, self._client_stats, new_ids)):
                self.server.absorb(client_id, stats)
            snapshot = ledger.charge_round(sampled)

            covered = len(self.server.seen) == cfg.K
            out_of_rounds = cfg.rounds_max is not None and t >= cfg.rounds_max
            done = covered or out_of_rounds

            accuracy = None
            if done or t % cfg.eval_every == 0:
                classifier = self.server.solve()
                accuracy = evaluate_accuracy(classifier, self.eval_dataset, self.rff)

            trace.append(RoundRecord(
                round=t,
                sampled_ids=tuple(sampled),
                new_ids=tuple(new_ids),
                distinct_clients_cum=len(self.server.seen),
                accuracy=accuracy,
                ledger=snapshot,
            ))
            logger.debug(
                "round_completed round=%d sampled=%d absorbed=%d distinct=%d",
                t, len(sampled), len(new_ids), len(self.server.seen),
            )
            if done:
                break

        logger.info(
            "closed_form_run_finished algorithm=%s rounds=%d distinct=%d accuracy=%.4f",
            self.algorithm.value, trace.rounds, len(self.server.seen), trace.final_accuracy,
        )
        assert classifier is not None
        return classifier, trace


def run_fed3r(
    ds: FeatureDataset,
    manifest: PartitionManifest,
    cfg: FederationConfig,
    *,
    eval_ds: Optional[FeatureDataset] = None,
    cost: Optional[CostParams] = None,
    pool: Optional[WorkerPool] = None,
) -> tuple[Classifier, TrainingTrace]:
    """
    Federated ridge classifier with the sampling mode of `cfg`. Without
    replacement the run ends after ceil(K / kappa) rounds with every client absorbed.
    """
    return Fed3RSimulation(ds, manifest, cfg, eval_dataset=eval_ds, cost=cost, pool=pool).run()


def run_fed3r_with_replacement(
    ds: FeatureDataset,
    manifest: PartitionManifest,
    cfg: FederationConfig,
    *,
    eval_ds: Optional[FeatureDataset] = None,
    cost: Optional[CostParams] = None,
    pool: Optional[WorkerPool] = None,
) -> tuple[Classifier, TrainingTrace]:
    """
    Same as `run_fed3r`, but every round draws `kappa` distinct clients from all K.
    Clients seen before still pay for their upload; their statistics are not
    absorbed again. Ends at `rounds_max` or once all K clients were seen.
    """
    cfg = cfg.model_copy(update={"sampling_mode": SamplingMode.WITH_REPLACEMENT})
    return run_fed3r(ds, manifest, cfg, eval_ds=eval_ds, cost=cost, pool=pool)
