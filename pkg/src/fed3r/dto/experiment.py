from typing import Any, Optional

from pydantic import Field

from src.base.dto.main import RequestBase, ResponseBase


class ExperimentRequest(RequestBase):
    config: dict[str, Any] = Field(
        title="Run configuration",
        description="Same document as the YAML run config; `data.synthetic` is required",
        default={
            "algorithm": "fed3r",
            "data": {"synthetic": {"classes": 5, "d": 16, "per_class_n": 100}, "partition": {"alpha": 0.1}},
            "federation": {"K": 20, "kappa": 5},
        },
    )
    overrides: list[str] = Field(title="Overrides", description="dotted.key=value strings", default=[])


class RoundMetrics(ResponseBase):
    round: int
    new_clients: int
    distinct_clients_cum: int
    accuracy: Optional[float]
    comm_down_bytes_cum: int
    comm_up_bytes_cum: int
    avg_client_flops_cum: float


class ExperimentResponse(ResponseBase):
    algorithm: str
    rounds: int
    final_accuracy: Optional[float]
    temperature: float
    zero_columns: list[int]
    flags: dict[str, Any]
    metrics: list[RoundMetrics]
