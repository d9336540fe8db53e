"""
Communication and computation accounting.

Values are counted in model parameters ("values") and converted to bytes with
``bytes_per_value`` (FP32 -> 4). Computation is counted in FLOPs, one FLOP being
one multiply-add. Backbone forward costs are configuration constants expressed
in MFLOPs; the simulator never runs a backbone, it only accounts for one.

Per client and round:

=============  ===============  ===============  ===============================================
algorithm      downstream       upstream         computation T
=============  ===============  ===============  ===============================================
fed3r          0                d^2 + dC         n_k (F_phi + d(d+1)/2 + dC)
fed3r_rf       0                D^2 + DC         n_k (F_phi + D(D+1)/2 + DC [+ dD])
fedncm         0                dC + C           n_k (F_phi + d)
*_lp           dC               dC               E n_k (F_phi + 3 F_head)
*_full         b_fx + dC        b_fx + dC        3 E n_k F_M
=============  ===============  ===============  ===============================================
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import TYPE_CHECKING, Iterable, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.fed3r.exception.core import InvalidParams, UnknownAlgorithm

if TYPE_CHECKING:
    from src.fed3r.federation import TrainingTrace

_MEGA = 1e6


class CostAlgorithm(str, Enum):
    FED3R = "fed3r"
    FED3R_RF = "fed3r_rf"
    FEDNCM = "fedncm"
    FEDAVG_LP = "fedavg_lp"
    FEDAVGM_LP = "fedavgm_lp"
    FEDAVG_FULL = "fedavg_full"
    FEDAVGM_FULL = "fedavgm_full"


_LP_ALGORITHMS = {CostAlgorithm.FEDAVG_LP, CostAlgorithm.FEDAVGM_LP}
_FULL_ALGORITHMS = {CostAlgorithm.FEDAVG_FULL, CostAlgorithm.FEDAVGM_FULL}

# MobileNetV2 forward MFLOPs per image: feature extractor, classifier head, whole model
FORWARD_MFLOPS_PRESETS: dict[str, tuple[float, float, float]] = {
    "landmarks": (332.9, 2.6, 335.5),
    "inaturalist": (332.9, 1.5, 334.4),
    "cifar100": (332.9, 0.1, 333.0),
}

# (K, C, average samples per client)
DATASET_SHAPES: dict[str, tuple[int, int, float]] = {
    "landmarks": (1262, 2028, 119.9),
    "inaturalist_users": (9275, 1203, 13.0),
    "inaturalist_geo_100": (3606, 1203, 33.4),
    "inaturalist_geo_300": (1208, 1203, 99.6),
    "inaturalist_geo_1k": (368, 1203, 326.9),
    "cifar100": (100, 100, 500.0),
}

# MobileNetV2 parameters without the ImageNet classification head
MOBILENETV2_FEATURE_PARAMS = 2_223_872


class CostParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    d: int = Field(ge=1, description="Backbone feature dimensionality")
    C: int = Field(ge=1, description="Number of classes")
    D: Optional[int] = Field(default=None, ge=1, description="Random feature dimensionality")
    E: int = Field(default=5, ge=1, description="Local epochs")
    kappa: int = Field(default=1, ge=1, description="Clients sampled per round")
    K: int = Field(default=1, ge=1, description="Total clients")
    n_k: tuple[int, ...] = Field(default=(), description="Samples per client, indexed by client id")
    F_phi: float = Field(default=332.9, gt=0, description="Feature extractor forward MFLOPs per image")
    F_head: float = Field(default=2.6, gt=0, description="Classifier forward MFLOPs per image")
    F_M: Optional[float] = Field(default=None, gt=0, description="Whole model forward MFLOPs; F_phi + F_head if unset")
    b_fx: int = Field(default=MOBILENETV2_FEATURE_PARAMS, ge=0, description="Feature extractor parameters")
    bytes_per_value: int = Field(default=4, ge=1)
    include_rff_projection: bool = Field(default=True, description="Count the n_k dD projection FLOPs of fed3r_rf")
    include_bootstrap: bool = Field(default=False, description="Report the one-time b_fx K extractor download")
    ship_rff_map: bool = Field(default=False, description="Report shipping the d x D frequencies instead of a seed")

    @model_validator(mode="after")
    def _check_sizes(self) -> "CostParams":
        if self.kappa > self.K:
            raise ValueError("kappa must not exceed K")
        if any(size < 0 for size in self.n_k):
            raise ValueError("client sizes must be non-negative")
        return self

    @property
    def model_forward_mflops(self) -> float:
        return self.F_M if self.F_M is not None else self.F_phi + self.F_head

    @classmethod
    def from_preset(cls, preset: str, **overrides) -> "CostParams":
        """Cost parameters for one of the named datasets (`DATASET_SHAPES`)."""
        if preset not in DATASET_SHAPES:
            raise InvalidParams(f"unknown_cost_preset:{preset}")
        K, C, _ = DATASET_SHAPES[preset]
        forward = FORWARD_MFLOPS_PRESETS["cifar100" if preset == "cifar100" else preset.split("_")[0]]
        values = {"d": 1280, "C": C, "K": K, "F_phi": forward[0], "F_head": forward[1], "F_M": forward[2]}
        values.update(overrides)
        return cls(**values)


def _require_D(p: CostParams) -> int:
    if p.D is None:
        raise InvalidParams("fed3r_rf_requires_D")
    return p.D


def _as_algorithm(alg: str | CostAlgorithm) -> CostAlgorithm:
    try:
        return CostAlgorithm(alg)
    except ValueError as error:
        raise UnknownAlgorithm(f"unknown_algorithm:{alg}") from error


def comm_per_client(alg: str | CostAlgorithm, p: CostParams) -> tuple[int, int]:
    """(downstream, upstream) values exchanged by one sampled client in one round."""
    alg = _as_algorithm(alg)
    classifier = p.d * p.C

    if alg == CostAlgorithm.FED3R:
        return 0, p.d * p.d + classifier
    if alg == CostAlgorithm.FED3R_RF:
        D = _require_D(p)
        return 0, D * D + D * p.C
    if alg == CostAlgorithm.FEDNCM:
        return 0, classifier + p.C
    if alg in _LP_ALGORITHMS:
        return classifier, classifier
    if alg in _FULL_ALGORITHMS:
        model = p.b_fx + classifier
        return model, model

    raise UnknownAlgorithm(f"unknown_algorithm:{alg}")


def comm_bytes_per_client(alg: str | CostAlgorithm, p: CostParams) -> tuple[int, int]:
    down, up = comm_per_client(alg, p)
    return down * p.bytes_per_value, up * p.bytes_per_value


def one_time_values(alg: str | CostAlgorithm, p: CostParams) -> dict[str, int]:
    """
    One-time downstream extras reported outside the per-round ledger: extractor
    distribution for closed-form methods and, when not reconstructed from a seed,
    the random-feature frequencies.
    """
    alg = _as_algorithm(alg)
    extras = {"bootstrap": 0, "rff_map": 0}
    if p.include_bootstrap and alg in {CostAlgorithm.FED3R, CostAlgorithm.FED3R_RF, CostAlgorithm.FEDNCM}:
        extras["bootstrap"] = p.b_fx * p.K
    if p.ship_rff_map and alg == CostAlgorithm.FED3R_RF:
        extras["rff_map"] = p.d * _require_D(p) * p.K
    return extras


def compute_per_round_per_client(alg: str | CostAlgorithm, p: CostParams, n_k: float) -> float:
    """FLOPs spent by one client holding `n_k` samples when sampled in one round."""
    alg = _as_algorithm(alg)
    if n_k < 0:
        raise InvalidParams("client_size_must_be_non_negative")
    F_phi = p.F_phi * _MEGA

    if alg == CostAlgorithm.FED3R:
        return n_k * (F_phi + 0.5 * p.d * (p.d + 1) + p.d * p.C)
    if alg == CostAlgorithm.FED3R_RF:
        D = _require_D(p)
        projection = p.d * D if p.include_rff_projection else 0
        return n_k * (F_phi + 0.5 * D * (D + 1) + D * p.C + projection)
    if alg == CostAlgorithm.FEDNCM:
        return n_k * (F_phi + p.d)
    if alg in _LP_ALGORITHMS:
        return p.E * n_k * (F_phi + 3 * p.F_head * _MEGA)
    if alg in _FULL_ALGORITHMS:
        return 3 * p.E * n_k * p.model_forward_mflops * _MEGA

    raise UnknownAlgorithm(f"unknown_algorithm:{alg}")


def expected_cumulative_per_client(T: float, t: int, kappa: int, K: int) -> float:
    """Expected cumulative cost of one client after `t` rounds: ``T t kappa / K``."""
    if t < 0:
        raise InvalidParams("round_count_must_be_non_negative")
    return T * t * kappa / K


@dataclass(frozen=True)
class LedgerSnapshot:
    down_bytes_cum: int = 0
    up_bytes_cum: int = 0
    avg_client_flops_cum: float = 0.0
    down_bytes_round: int = 0
    up_bytes_round: int = 0
    avg_client_flops_round: float = 0.0


@dataclass
class CostLedger:
    """
    Running totals for one algorithm. Every sampled client (duplicates included)
    is charged its per-client communication and computation; average computation
    is the total divided by K.
    """

    algorithm: CostAlgorithm
    params: CostParams
    client_sizes: Sequence[int]
    start: LedgerSnapshot = field(default_factory=LedgerSnapshot)
    history: list[LedgerSnapshot] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.algorithm = _as_algorithm(self.algorithm)
        self._down_bytes, self._up_bytes = comm_bytes_per_client(self.algorithm, self.params)
        self._current = replace(self.start, down_bytes_round=0, up_bytes_round=0, avg_client_flops_round=0.0)

    @property
    def current(self) -> LedgerSnapshot:
        return self._current

    def charge_round(self, sampled_ids: Iterable[int]) -> LedgerSnapshot:
        sampled = list(sampled_ids)
        down = self._down_bytes * len(sampled)
        up = self._up_bytes * len(sampled)
        flops = sum(compute_per_round_per_client(self.algorithm, self.params, int(self.client_sizes[k])) for k in sampled)
        avg = flops / self.params.K

        self._current = LedgerSnapshot(
            down_bytes_cum=self._current.down_bytes_cum + down,
            up_bytes_cum=self._current.up_bytes_cum + up,
            avg_client_flops_cum=self._current.avg_client_flops_cum + avg,
            down_bytes_round=down,
            up_bytes_round=up,
            avg_client_flops_round=avg,
        )
        self.history.append(self._current)
        return self._current


def replay_ledger(
    trace: "TrainingTrace",
    algorithm: str | CostAlgorithm,
    params: CostParams,
    client_sizes: Sequence[int],
    start: Optional[LedgerSnapshot] = None,
) -> CostLedger:
    """Rebuild a ledger from the sampled ids recorded in `trace`."""
    ledger = CostLedger(algorithm, params, client_sizes, start=start or LedgerSnapshot())
    for record in trace.records:
        ledger.charge_round(record.sampled_ids)
    return ledger


def cost_table(
    p: CostParams, n_k: float, algorithms: Optional[Iterable[str | CostAlgorithm]] = None
) -> list[dict]:
    """Per-algorithm summary rows for a client holding `n_k` samples (may be a fractional average)."""
    rows = []
    for alg in algorithms or list(CostAlgorithm):
        alg = _as_algorithm(alg)
        if alg == CostAlgorithm.FED3R_RF and p.D is None:
            continue
        down, up = comm_bytes_per_client(alg, p)
        T = compute_per_round_per_client(alg, p, n_k)
        rows.append({
            "algorithm": alg.value,
            "down_bytes_per_client": down,
            "up_bytes_per_client": up,
            "flops_per_round_per_client": T,
            "flops_expected_cum_full_pass": expected_cumulative_per_client(T, -(-p.K // p.kappa), p.kappa, p.K),
            **{f"one_time_{name}_bytes": values * p.bytes_per_value for name, values in one_time_values(alg, p).items()},
        })
    return rows
