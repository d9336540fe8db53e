import numpy as np


def rel_err(actual, expected) -> float:
    """Relative Frobenius error of `actual` against `expected`."""
    return float(np.linalg.norm(np.asarray(actual) - expected) / max(np.linalg.norm(expected), 1e-300))
