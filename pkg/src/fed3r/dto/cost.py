from typing import Optional

from pydantic import Field

from src.base.dto.main import RequestBase, ResponseBase
from src.fed3r.cost import CostAlgorithm, FORWARD_MFLOPS_PRESETS, MOBILENETV2_FEATURE_PARAMS


class CostRequest(RequestBase):
    d: int = Field(title="Feature dimension", default=1280, ge=1)
    classes: int = Field(title="Number of classes", default=2028, ge=1)
    clients: int = Field(title="Total clients K", default=1262, ge=1)
    kappa: int = Field(title="Clients per round", default=10, ge=1)
    n_k: float = Field(title="Samples per client", description="May be a fractional average", default=119.9, ge=0)
    rff_dim: Optional[int] = Field(title="Random feature dimension D", default=None, ge=1)
    local_epochs: int = Field(title="Local epochs E", default=5, ge=1)
    forward_preset: str = Field(
        title="Forward FLOPs preset",
        description=f"One of {', '.join(sorted(FORWARD_MFLOPS_PRESETS))}",
        default="landmarks",
    )
    extractor_params: int = Field(title="Feature extractor parameters", default=MOBILENETV2_FEATURE_PARAMS, ge=0)
    bytes_per_value: int = Field(default=4, ge=1)
    include_bootstrap: bool = False
    ship_rff_map: bool = False
    algorithms: Optional[list[CostAlgorithm]] = Field(title="Algorithms", description="All when unset", default=None)


class CostRow(ResponseBase):
    algorithm: str
    down_bytes_per_client: int
    up_bytes_per_client: int
    flops_per_round_per_client: float
    flops_expected_cum_full_pass: float
    one_time_bootstrap_bytes: int
    one_time_rff_map_bytes: int


class CostResponse(ResponseBase):
    rows: list[CostRow]
