from http import HTTPStatus
from typing import Any

from src.base.config import ConfigError
from src.base.exception.api.base import HTTPException
from src.fed3r.exception.core import DataIoException, Fed3RException, InvalidInputException


class Fed3RApiException(HTTPException):
    status = HTTPStatus.INTERNAL_SERVER_ERROR


# base exception to group and catch all bad request related exceptions of the simulator endpoints
class ExperimentBadRequestException(Fed3RApiException):
    status = HTTPStatus.BAD_REQUEST

    def __init__(self, detail: Any = "experiment_bad_request"):
        super().__init__(detail=detail)


class ExperimentDataException(Fed3RApiException):
    status = HTTPStatus.UNPROCESSABLE_ENTITY

    def __init__(self, detail: Any = "experiment_data_unreadable"):
        super().__init__(detail=detail)


class ExperimentNumericalException(Fed3RApiException):
    status = HTTPStatus.INTERNAL_SERVER_ERROR

    def __init__(self, detail: Any = "experiment_numerical_failure"):
        super().__init__(detail=detail)


def to_api_exception(error: Exception) -> Fed3RApiException:
    """Maps simulator and configuration errors onto the HTTP exceptions above."""
    if isinstance(error, ConfigError):
        return ExperimentBadRequestException(detail=str(error))
    if isinstance(error, InvalidInputException):
        return ExperimentBadRequestException(detail=error.detail)
    if isinstance(error, DataIoException):
        return ExperimentDataException(detail=error.detail)
    if isinstance(error, Fed3RException):
        return ExperimentNumericalException(detail=error.detail)
    return Fed3RApiException(detail="unexpected_failure")
