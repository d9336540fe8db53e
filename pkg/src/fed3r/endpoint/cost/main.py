from fastapi import APIRouter
from pydantic import ValidationError

from src.base.exception.api.handler import compose_exceptions
from src.fed3r.cost import FORWARD_MFLOPS_PRESETS, CostParams, cost_table
from src.fed3r.doc import Tags
from src.fed3r.dto.cost import CostRequest, CostResponse, CostRow
from src.fed3r.exception.api.experiment_exception import ExperimentBadRequestException, to_api_exception
from src.fed3r.exception.core import Fed3RException

router = APIRouter(tags=[Tags.COST], prefix="/v1/cost")


@router.post(
    path="/per_client",
    summary="Per-client cost",
    description="Bytes exchanged and FLOPs spent by one sampled client in one round, per algorithm",
    status_code=200,
    responses=compose_exceptions(ExperimentBadRequestException),
)
def per_client_cost(request: CostRequest) -> CostResponse:
    if request.forward_preset not in FORWARD_MFLOPS_PRESETS:
        raise ExperimentBadRequestException(detail=f"unknown_forward_preset:{request.forward_preset}")
    F_phi, F_head, F_M = FORWARD_MFLOPS_PRESETS[request.forward_preset]

    try:
        params = CostParams(
            d=request.d,
            C=request.classes,
            K=request.clients,
            kappa=request.kappa,
            D=request.rff_dim,
            E=request.local_epochs,
            F_phi=F_phi,
            F_head=F_head,
            F_M=F_M,
            b_fx=request.extractor_params,
            bytes_per_value=request.bytes_per_value,
            include_bootstrap=request.include_bootstrap,
            ship_rff_map=request.ship_rff_map,
        )
        rows = cost_table(params, request.n_k, request.algorithms)
    except ValidationError as error:
        raise ExperimentBadRequestException(detail=error.errors()[0]["msg"]) from error
    except Fed3RException as error:
        raise to_api_exception(error) from error

    return CostResponse(rows=[CostRow(**row) for row in rows])
