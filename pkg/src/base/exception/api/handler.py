from typing import Any, Type, Union

from starlette.requests import Request
from starlette.responses import Response

from src.base.exception.api.base import HTTPException


async def rest_exception_handler(_: Request, exc: HTTPException) -> Response:
    return exc.get_body()


def compose_exceptions(*exceptions: Type[HTTPException]) -> dict[Union[int, str], dict[str, Any]]:
    """
    Builds the `responses` argument of a route from the exceptions it may raise:

    >>> @router.post("/v1/coverage", responses=compose_exceptions(ExperimentBadRequestException))

    Exceptions sharing a status code are documented by the last one given.

    :param exceptions: HTTPException subclasses raised by the route
    :return: mapping of status code to payload model, as FastAPI expects it
    """
    responses: dict = {}
    for exception in exceptions:
        responses.update(exception.get_description())
    return responses
