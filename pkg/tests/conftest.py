import numpy as np
import pytest

from src.fed3r.data.dataset import FeatureDataset, gen_gaussian_mixture
from src.fed3r.data.partition import partition_dirichlet
from src.fed3r.federation import FederationConfig


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def mixture() -> FeatureDataset:
    return gen_gaussian_mixture(num_classes=10, d=64, per_class_n=500, separation=3.0, seed=11)


@pytest.fixture(scope="session")
def small_mixture() -> FeatureDataset:
    return gen_gaussian_mixture(num_classes=4, d=8, per_class_n=60, separation=3.0, seed=5)


@pytest.fixture
def small_partition(small_mixture):
    return partition_dirichlet(small_mixture, K=12, alpha=0.5, seed=3)


@pytest.fixture
def small_federation() -> FederationConfig:
    return FederationConfig(K=12, kappa=5, seed=9)
