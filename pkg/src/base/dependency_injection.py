from typing import Any

from fastapi import Request, params
from typing_extensions import Annotated, Doc


def Injects(  # noqa: N802
    dependency: Annotated[
        str,
        Doc("The name of an attribute of the lifespan State, e.g. `worker_pool` or `config`."),
    ],
    *,
    use_cache: Annotated[
        bool,
        Doc("Reuse the resolved value for the rest of the request (FastAPI `Depends` semantics)."),
    ] = True,
) -> Any:
    """
    Injects an object created by the service initializer into an endpoint:

    >>> def run(request: ExperimentRequest, pool: WorkerPool = Injects("worker_pool")): ...
    """

    def _inject_from_state(request: Request) -> Any:
        return getattr(request.state, dependency)

    return params.Depends(dependency=_inject_from_state, use_cache=use_cache)
