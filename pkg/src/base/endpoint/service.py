from fastapi import APIRouter, Request
from starlette.responses import JSONResponse, RedirectResponse

router = APIRouter(include_in_schema=False)


@router.get("/")
async def get_docs() -> RedirectResponse:
    return RedirectResponse(url="/docs")


@router.get("/health")
async def get_health(request: Request) -> JSONResponse:
    return JSONResponse({"status": "ok", "version": request.app.version})
