import math

from pydantic import Field, model_validator

from src.base.dto.main import RequestBase, ResponseBase
from src.fed3r.coverage import DEFAULT_FRACTIONS

MAX_TRIALS = 100_000
MAX_CLIENTS = 1_000_000
# expected rounds to full coverage are about (K / kappa) (ln K + 1)
MAX_EXPECTED_ROUNDS = 200_000
MAX_SIMULATED_ROUNDS = 50_000_000


class CoverageRequest(RequestBase):
    clients: int = Field(title="Total clients K", default=100, ge=1, le=MAX_CLIENTS)
    kappa: int = Field(title="Clients per round", default=10, ge=1)
    fractions: list[float] = Field(title="Coverage fractions", default=list(DEFAULT_FRACTIONS), min_length=1)
    trials: int = Field(title="Monte Carlo trials", default=1000, ge=1, le=MAX_TRIALS)
    seed: int = 0

    @model_validator(mode="after")
    def _bounded_work(self) -> "CoverageRequest":
        expected_rounds = math.ceil(self.clients / self.kappa) * (math.log(self.clients) + 1)
        if expected_rounds > MAX_EXPECTED_ROUNDS:
            raise ValueError(f"about {expected_rounds:.0f} rounds expected, above {MAX_EXPECTED_ROUNDS}; raise kappa")
        if self.trials * expected_rounds > MAX_SIMULATED_ROUNDS:
            raise ValueError(f"trials x expected rounds exceeds {MAX_SIMULATED_ROUNDS}; lower trials or raise kappa")
        return self


class CoverageRow(ResponseBase):
    fraction: float
    mean_rounds: float
    std_rounds: float


class CoverageResponse(ResponseBase):
    clients: int
    kappa: int
    trials: int
    rows: list[CoverageRow]
