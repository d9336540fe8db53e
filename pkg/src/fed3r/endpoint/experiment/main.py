import logging

from fastapi import APIRouter

from src.base.config import ConfigError
from src.base.dependency_injection import Injects
from src.base.exception.api.handler import compose_exceptions
from src.base.worker_pool import WorkerPool
from src.fed3r.config import parse_run_config
from src.fed3r.doc import Tags
from src.fed3r.dto.experiment import ExperimentRequest, ExperimentResponse, RoundMetrics
from src.fed3r.exception.api.experiment_exception import (
    ExperimentBadRequestException, ExperimentDataException, ExperimentNumericalException, to_api_exception
)
from src.fed3r.exception.core import Fed3RException
from src.fed3r.runner import load_data, metrics_rows, run_experiment

logger = logging.getLogger(__name__)

router = APIRouter(tags=[Tags.EXPERIMENT], prefix="/v1/experiment")


@router.post(
    path="",
    summary="Run experiment",
    description="Runs one federated experiment on synthetic features and returns its per-round metrics. "
                "Nothing is written to disk.",
    status_code=200,
    responses=compose_exceptions(ExperimentBadRequestException, ExperimentDataException, ExperimentNumericalException),
)
def run(
    request: ExperimentRequest,
    worker_pool: WorkerPool = Injects("worker_pool"),
) -> ExperimentResponse:
    try:
        cfg = parse_run_config(request.config, request.overrides)
        if cfg.data.synthetic is None or cfg.data.manifest_path or cfg.data.test_features_path:
            raise ExperimentBadRequestException(detail="experiment_requires_synthetic_data")
        data = load_data(cfg.data, cfg.federation.K, cfg.seed)
        outcome = run_experiment(cfg, data, worker_pool)
    except (ConfigError, Fed3RException) as error:
        logger.info("experiment_rejected detail=%s", getattr(error, "detail", error))
        raise to_api_exception(error) from error

    return ExperimentResponse(
        algorithm=outcome.trace.algorithm,
        rounds=outcome.trace.rounds,
        final_accuracy=outcome.trace.final_accuracy,
        temperature=outcome.classifier.temperature,
        zero_columns=list(outcome.classifier.zero_columns),
        flags=outcome.trace.meta,
        metrics=[RoundMetrics(**row) for row in metrics_rows(outcome.trace)],
    )
