from fastapi import APIRouter

from src.fed3r.endpoint.cost.main import router as router_cost
from src.fed3r.endpoint.coverage.main import router as router_coverage
from src.fed3r.endpoint.experiment.main import router as router_experiment

main_router = APIRouter(prefix="/api")
main_router.include_router(router_cost)
main_router.include_router(router_coverage)
main_router.include_router(router_experiment)
