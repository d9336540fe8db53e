import threading

import pytest

from src.base.config import Config, ConfigInvalidValueError
from src.base.logger import configure_logging
from src.base.worker_pool import WorkerPool, run_serially_or_pooled
from src.fed3r.seeding import derive_seed, rng_for


def test_map_keeps_submission_order():
    with WorkerPool(threads=4) as pool:
        assert pool.map(lambda x: x * x, range(50)) == [x * x for x in range(50)]


def test_single_thread_runs_in_the_caller():
    names = WorkerPool(threads=1).map(lambda _: threading.current_thread().name, range(3))
    assert set(names) == {threading.current_thread().name}


def test_thread_count_comes_from_the_environment():
    assert WorkerPool.from_config(Config({"FED3R_THREADS": "3"})).threads == 3
    assert WorkerPool.from_config(Config({"FED3R_THREADS": "3"}), threads=2).threads == 2
    with pytest.raises(ConfigInvalidValueError):
        WorkerPool.from_config(Config({"FED3R_THREADS": "0"}))


def test_without_pool_work_runs_serially():
    assert run_serially_or_pooled(None, str, [1, 2]) == ["1", "2"]


def test_log_level_is_validated():
    assert configure_logging(Config({"LOG_LEVEL": "debug"})) == "DEBUG"
    with pytest.raises(ConfigInvalidValueError):
        configure_logging(Config({"LOG_LEVEL": "loud"}))


def test_sub_seeds_differ_by_role_and_are_stable():
    assert derive_seed(7, "sampling") == derive_seed(7, "sampling")
    assert derive_seed(7, "sampling") != derive_seed(7, "rff")
    assert derive_seed(7, "data") != derive_seed(8, "data")
    assert rng_for(1, "coupon").integers(1 << 30) == rng_for(1, "coupon").integers(1 << 30)
