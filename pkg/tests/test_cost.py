import numpy as np
import pytest
from pydantic import ValidationError

from src.fed3r.cost import (
    CostAlgorithm, CostLedger, CostParams, LedgerSnapshot, comm_bytes_per_client, comm_per_client,
    compute_per_round_per_client, cost_table, expected_cumulative_per_client, one_time_values, replay_ledger
)
from src.fed3r.exception.core import InvalidParams, UnknownAlgorithm
from src.fed3r.federation import run_fed3r_with_replacement


@pytest.fixture
def landmarks() -> CostParams:
    return CostParams.from_preset("landmarks", kappa=10)


def test_ridge_upload_on_landmarks(landmarks):
    assert comm_per_client("fed3r", landmarks) == (0, 4_234_240)
    assert comm_bytes_per_client("fed3r", landmarks) == (0, 16_936_960)


def test_linear_probing_exchanges_the_classifier(landmarks):
    assert comm_per_client(CostAlgorithm.FEDAVG_LP, landmarks) == (2_595_840, 2_595_840)
    assert comm_per_client(CostAlgorithm.FEDAVGM_LP, landmarks) == (2_595_840, 2_595_840)


def test_full_fine_tuning_flops(landmarks):
    assert landmarks.model_forward_mflops == 335.5
    assert compute_per_round_per_client("fedavg_full", landmarks, 120) == pytest.approx(6.039e11, rel=1e-12)


def test_other_algorithm_formulas():
    p = CostParams(d=4, C=3, D=10, K=5, kappa=2, F_phi=1.0, F_head=0.5, E=2)

    assert comm_per_client("fedncm", p) == (0, 15)
    assert comm_per_client("fed3r_rf", p) == (0, 130)
    assert compute_per_round_per_client("fed3r", p, 2) == 2 * (1e6 + 10 + 12)
    assert compute_per_round_per_client("fed3r_rf", p, 2) == 2 * (1e6 + 55 + 30 + 40)
    assert compute_per_round_per_client("fedncm", p, 2) == 2 * (1e6 + 4)
    assert compute_per_round_per_client("fedavg_lp", p, 2) == 2 * 2 * (1e6 + 1.5e6)

    without_projection = p.model_copy(update={"include_rff_projection": False})
    assert compute_per_round_per_client("fed3r_rf", without_projection, 2) == 2 * (1e6 + 55 + 30)


def test_random_features_need_their_dimension():
    with pytest.raises(InvalidParams):
        comm_per_client("fed3r_rf", CostParams(d=4, C=3))


def test_unknown_algorithm():
    with pytest.raises(UnknownAlgorithm):
        comm_per_client("scaffold", CostParams(d=4, C=3))


def test_kappa_cannot_exceed_K():
    with pytest.raises(ValidationError):
        CostParams(d=4, C=3, K=2, kappa=3)


def test_one_time_costs_are_opt_in():
    p = CostParams(d=4, C=3, D=10, K=5, kappa=2, b_fx=100)
    assert one_time_values("fed3r_rf", p) == {"bootstrap": 0, "rff_map": 0}

    shipped = p.model_copy(update={"include_bootstrap": True, "ship_rff_map": True})
    assert one_time_values("fed3r_rf", shipped) == {"bootstrap": 500, "rff_map": 200}
    assert one_time_values("fedavg_lp", shipped) == {"bootstrap": 0, "rff_map": 0}


def test_expected_cumulative_cost_identity():
    rng = np.random.default_rng(0)
    for _ in range(10):
        K = int(rng.integers(1, 500))
        kappa = int(rng.integers(1, K + 1))
        t = int(rng.integers(0, 50))
        n_k = int(rng.integers(1, 300))
        p = CostParams(d=int(rng.integers(1, 64)), C=int(rng.integers(1, 20)), K=K, kappa=kappa, n_k=(n_k,) * K)
        T = compute_per_round_per_client("fed3r", p, n_k)

        ledger = CostLedger(CostAlgorithm.FED3R, p, p.n_k)
        for _ in range(t):
            ledger.charge_round(rng.choice(K, size=kappa, replace=False))

        expected = expected_cumulative_per_client(T, t, kappa, K)
        assert expected == T * t * kappa / K
        assert ledger.current.avg_client_flops_cum == pytest.approx(expected, rel=1e-12)


def test_ledger_charges_duplicates_and_resumes_from_a_snapshot():
    p = CostParams(d=2, C=2, K=3, kappa=2, n_k=(1, 2, 3))
    start = LedgerSnapshot(down_bytes_cum=7, up_bytes_cum=11, avg_client_flops_cum=1.0)
    ledger = CostLedger("fed3r", p, p.n_k, start=start)

    ledger.charge_round([0, 1])
    snapshot = ledger.charge_round([0, 1])

    assert snapshot.up_bytes_round == 2 * 8 * 4
    assert snapshot.up_bytes_cum == 11 + 2 * snapshot.up_bytes_round
    assert snapshot.down_bytes_cum == 7
    assert len(ledger.history) == 2


def test_replayed_ledger_matches_the_recorded_one(small_mixture, small_partition, small_federation):
    _, trace = run_fed3r_with_replacement(small_mixture, small_partition, small_federation)
    p = CostParams(
        d=small_mixture.d, C=small_mixture.num_classes, K=12, kappa=5,
        n_k=tuple(int(size) for size in small_partition.client_sizes()),
    )

    replayed = replay_ledger(trace, "fed3r", p, p.n_k)

    assert replayed.history == [record.ledger for record in trace.records]


def test_cost_table_rows(landmarks):
    rows = cost_table(landmarks, 119.9)
    by_algorithm = {row["algorithm"]: row for row in rows}

    assert "fed3r_rf" not in by_algorithm
    assert by_algorithm["fed3r"]["up_bytes_per_client"] == 16_936_960
    assert by_algorithm["fedavg_lp"]["flops_expected_cum_full_pass"] == pytest.approx(
        by_algorithm["fedavg_lp"]["flops_per_round_per_client"] * 127 * 10 / 1262
    )
    assert {row["one_time_bootstrap_bytes"] for row in rows} == {0}
