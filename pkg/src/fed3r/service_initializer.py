from src.base.initializer import Initializer, State
from src.base.worker_pool import WorkerPool


class ServiceState(State):
    worker_pool: WorkerPool


class Fed3RServiceInitializer(Initializer):
    """Exposes the shared worker pool to the experiment endpoint."""

    async def __aenter__(self) -> ServiceState:
        state = await super().__aenter__()
        return ServiceState(**state, worker_pool=self.worker_pool)
