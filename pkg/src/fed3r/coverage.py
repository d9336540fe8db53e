"""
Monte Carlo batch coupon collector: how many rounds of `kappa` distinct draws out
of K clients it takes until a given fraction of the clients has been seen.

Only the number of clients covered so far matters, so every trial is simulated as
a Markov chain on that count: with `c` clients covered, a round of `kappa` distinct
draws brings ``Hypergeometric(K - c, c, kappa)`` new ones. All trials advance
together, one vectorized draw per round.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from src.fed3r.exception.core import InvalidParams
from src.fed3r.seeding import rng_for

DEFAULT_FRACTIONS = (0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True)
class CoverageResult:
    K: int
    kappa: int
    fractions: tuple[float, ...]
    mean_rounds: tuple[float, ...]
    std_rounds: tuple[float, ...]
    trials: int
    seed: int

    def rows(self) -> list[dict]:
        return [
            {"K": self.K, "kappa": self.kappa, "fraction": f, "mean_rounds": m, "std_rounds": s, "trials": self.trials}
            for f, m, s in zip(self.fractions, self.mean_rounds, self.std_rounds)
        ]


def coverage_target(K: int, fraction: float) -> int:
    """Clients that make up `fraction` of K, rounded up after dropping float noise (0.07 * 100 is 7 clients)."""
    return math.ceil(round(fraction * K, 9))


def rounds_to_coverage(
    K: int,
    kappa: int,
    fractions: Sequence[float],
    trials: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Per trial and fraction, the first round whose cumulative coverage reaches ``ceil(f K)``; shape (trials, F)."""
    targets = np.array([coverage_target(K, f) for f in fractions], dtype=np.int64)
    covered = np.zeros(trials, dtype=np.int64)
    reached = np.zeros((trials, targets.size), dtype=np.int64)

    t = 0
    while np.any(reached == 0):
        t += 1
        active = covered < K
        new = rng.hypergeometric(K - covered[active], covered[active], kappa)
        covered[active] += new

        hit = (covered[:, None] >= targets[None, :]) & (reached == 0)
        reached[hit] = t
    return reached


def coupon_rounds(
    K: int,
    kappa: int,
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
    trials: int = 1000,
    seed: int = 0,
) -> CoverageResult:
    """
    Mean and standard deviation over `trials` of the rounds needed to cover each
    fraction of the K clients.

    :raises InvalidParams: if kappa is outside [1, K], trials < 1 or a fraction is outside (0, 1]
    """
    if K < 1 or not 1 <= kappa <= K:
        raise InvalidParams("kappa_must_be_in_1_K")
    if trials < 1:
        raise InvalidParams("trials_must_be_positive")
    fractions = tuple(sorted(float(f) for f in fractions))
    if not fractions or any(not 0 < f <= 1 for f in fractions):
        raise InvalidParams("coverage_fraction_must_be_in_0_1")

    reached = rounds_to_coverage(K, kappa, fractions, trials, rng_for(seed, "coupon"))
    return CoverageResult(
        K=K,
        kappa=kappa,
        fractions=fractions,
        mean_rounds=tuple(float(v) for v in reached.mean(axis=0)),
        std_rounds=tuple(float(v) for v in reached.std(axis=0)),
        trials=trials,
        seed=seed,
    )
