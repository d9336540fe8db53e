import logging
from http import HTTPStatus

from fastapi import Request
from fastapi.responses import JSONResponse
from starlette.middleware.base import BaseHTTPMiddleware

logger = logging.getLogger(__name__)


class GlobalExceptionMiddleware(BaseHTTPMiddleware):
    """Last line of defence: anything an endpoint did not map to an HTTPException."""

    async def dispatch(self, request: Request, call_next):
        try:
            return await call_next(request)

        except ValueError:
            logger.exception("unhandled_value_error path=%s", request.url.path)
            return JSONResponse(
                status_code=HTTPStatus.BAD_REQUEST.value,
                content={"errors": [HTTPStatus.BAD_REQUEST.phrase]},
            )

        except Exception:
            logger.exception("unhandled_exception path=%s", request.url.path)
            return JSONResponse(
                status_code=HTTPStatus.INTERNAL_SERVER_ERROR.value,
                content={"errors": [HTTPStatus.INTERNAL_SERVER_ERROR.phrase]},
            )
