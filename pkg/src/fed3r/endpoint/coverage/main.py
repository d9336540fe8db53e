from fastapi import APIRouter

from src.base.exception.api.handler import compose_exceptions
from src.fed3r.coverage import coupon_rounds
from src.fed3r.doc import Tags
from src.fed3r.dto.coverage import CoverageRequest, CoverageResponse, CoverageRow
from src.fed3r.exception.api.experiment_exception import ExperimentBadRequestException, to_api_exception
from src.fed3r.exception.core import Fed3RException

router = APIRouter(tags=[Tags.COVERAGE], prefix="/v1/coverage")


@router.post(
    path="",
    summary="Rounds to coverage",
    description="Monte Carlo estimate of the rounds needed to sample each fraction of the clients at least once",
    status_code=200,
    responses=compose_exceptions(ExperimentBadRequestException),
)
def rounds_to_coverage(request: CoverageRequest) -> CoverageResponse:
    try:
        result = coupon_rounds(request.clients, request.kappa, request.fractions, request.trials, request.seed)
    except Fed3RException as error:
        raise to_api_exception(error) from error

    return CoverageResponse(
        clients=result.K,
        kappa=result.kappa,
        trials=result.trials,
        rows=[
            CoverageRow(fraction=fraction, mean_rounds=mean, std_rounds=std)
            for fraction, mean, std in zip(result.fractions, result.mean_rounds, result.std_rounds)
        ],
    )
