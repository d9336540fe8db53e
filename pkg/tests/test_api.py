import pytest
from fastapi.testclient import TestClient

from src.main import app


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as test_client:
        yield test_client


def test_health_and_docs_redirect(client):
    health = client.get("/health")
    assert health.status_code == 200
    assert health.json()["status"] == "ok"

    docs = client.get("/", follow_redirects=False)
    assert docs.status_code in (302, 307)
    assert docs.headers["location"] == "/docs"


def test_openapi_lists_service_tags(client):
    tags = {tag["name"] for tag in client.get("/openapi.json").json()["tags"]}
    assert tags == {"Cost", "Coverage", "Experiment"}


def test_cost_defaults_to_landmarks(client):
    response = client.post("/api/v1/cost/per_client", json={"algorithms": ["fed3r", "fedavg_lp"]})

    assert response.status_code == 200
    rows = {row["algorithm"]: row for row in response.json()["rows"]}
    assert rows["fed3r"]["upBytesPerClient"] == 16_936_960
    assert rows["fedavg_lp"]["downBytesPerClient"] == 2_595_840 * 4


def test_cost_includes_random_features_when_dimension_given(client):
    response = client.post("/api/v1/cost/per_client", json={"d": 4, "classes": 3, "clients": 5, "kappa": 2, "rffDim": 10})
    rows = {row["algorithm"]: row for row in response.json()["rows"]}
    assert rows["fed3r_rf"]["upBytesPerClient"] == 130 * 4


@pytest.mark.parametrize(
    "body, detail",
    [
        ({"clients": 5, "kappa": 6}, None),
        ({"forwardPreset": "imagenet"}, "unknown_forward_preset:imagenet"),
    ],
)
def test_cost_bad_requests(client, body, detail):
    response = client.post("/api/v1/cost/per_client", json=body)
    assert response.status_code == 400
    if detail is not None:
        assert response.json()["detail"] == detail


def test_unknown_request_fields_are_rejected(client):
    assert client.post("/api/v1/coverage", json={"population": 3}).status_code == 422


def test_coverage_table(client):
    response = client.post("/api/v1/coverage", json={"clients": 100, "kappa": 10, "trials": 200, "seed": 1})
    body = response.json()

    assert response.status_code == 200
    assert [row["fraction"] for row in body["rows"]] == [0.25, 0.5, 0.75, 1.0]
    means = [row["meanRounds"] for row in body["rows"]]
    assert means == sorted(means)


def test_coverage_rejects_kappa_above_clients(client):
    response = client.post("/api/v1/coverage", json={"clients": 4, "kappa": 5})
    assert response.status_code == 400
    assert response.json()["detail"] == "kappa_must_be_in_1_K"


@pytest.mark.parametrize(
    "body",
    [
        {"clients": 10_000_000, "kappa": 1},
        {"clients": 1_000_000, "kappa": 1, "trials": 1},
        {"clients": 9275, "kappa": 10, "trials": 100_000},
    ],
)
def test_coverage_rejects_unbounded_simulations(client, body):
    assert client.post("/api/v1/coverage", json=body).status_code == 422


def test_experiment_with_default_config(client):
    response = client.post("/api/v1/experiment", json={})
    body = response.json()

    assert response.status_code == 200
    assert body["algorithm"] == "fed3r"
    assert body["rounds"] == 4 == len(body["metrics"])
    assert body["metrics"][-1]["distinctClientsCum"] == 20
    assert 0 <= body["finalAccuracy"] <= 1


def test_experiment_overrides(client):
    response = client.post("/api/v1/experiment", json={"overrides": ["algorithm=fedncm", "federation.kappa=10"]})
    assert response.status_code == 200
    assert response.json()["rounds"] == 2


@pytest.mark.parametrize(
    "body, detail",
    [
        ({"config": {"data": {"features_path": "features.f3rd"}, "federation": {"K": 4, "kappa": 2}}},
         "experiment_requires_synthetic_data"),
        ({"overrides": ["federation.kappa=100"]}, None),
    ],
)
def test_experiment_bad_requests(client, body, detail):
    response = client.post("/api/v1/experiment", json=body)
    assert response.status_code == 400
    if detail is not None:
        assert response.json()["detail"] == detail
