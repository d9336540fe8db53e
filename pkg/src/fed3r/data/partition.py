"""
Client partitions of a dataset and the partition manifest file.

A manifest is human-readable JSON::

    {
      "scheme": "dirichlet",
      "alpha": 0.1,
      "seed": 7,
      "n": 5000,
      "clients": {
        "0": [3, 17, ...],
        "1": [...]
      }
    }

Client ids are the contiguous integers 0..K-1. Index lists are sorted, disjoint,
non-empty and together cover 0..n-1.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from src.fed3r.data.dataset import FeatureDataset
from src.fed3r.data.files import PathLike, atomic_write_text, read_bytes
from src.fed3r.exception.core import EmptyClass, InvalidManifest, InvalidParams, TooManyClients

logger = logging.getLogger(__name__)

SCHEME_DIRICHLET = "dirichlet"
SCHEME_SINGLE_CLASS = "single_class"


@dataclass(frozen=True)
class PartitionManifest:
    clients: tuple[np.ndarray, ...]
    scheme: str
    alpha: Optional[float]
    seed: Optional[int]

    @property
    def K(self) -> int:
        return len(self.clients)

    @property
    def n(self) -> int:
        return int(sum(indices.size for indices in self.clients))

    def client_sizes(self) -> np.ndarray:
        return np.array([indices.size for indices in self.clients], dtype=np.int64)

    def validate(self, n: Optional[int] = None) -> None:
        """
        Check the disjoint-cover invariants.

        :param n: expected dataset size; defaults to the total number of indices
        :raises InvalidManifest: on empty clients, overlaps or gaps
        """
        expected = self.n if n is None else n
        if self.K == 0:
            raise InvalidManifest("manifest_without_clients")
        if any(indices.size == 0 for indices in self.clients):
            raise InvalidManifest("manifest_empty_client")

        merged = np.concatenate(self.clients)
        if merged.size != expected:
            raise InvalidManifest("manifest_index_count_mismatch")
        if merged.min() < 0 or merged.max() >= expected:
            raise InvalidManifest("manifest_index_out_of_range")
        if np.unique(merged).size != merged.size:
            raise InvalidManifest("manifest_overlapping_indices")


def _make_manifest(assignment: list[np.ndarray], scheme: str, alpha: Optional[float], seed: Optional[int]) -> PartitionManifest:
    manifest = PartitionManifest(
        clients=tuple(np.sort(np.asarray(indices, dtype=np.int64)) for indices in assignment),
        scheme=scheme,
        alpha=alpha,
        seed=seed,
    )
    manifest.validate()
    return manifest


def _largest_remainder(total: int, weights: np.ndarray) -> np.ndarray:
    """Integer counts summing to `total`, proportional to `weights`."""
    ideal = total * weights
    counts = np.floor(ideal).astype(np.int64)
    shortfall = total - int(counts.sum())
    if shortfall > 0:
        order = np.argsort(-(ideal - counts), kind="stable")
        counts[order[:shortfall]] += 1
    return counts


def partition_dirichlet(dataset: FeatureDataset, K: int, alpha: float, seed: int) -> PartitionManifest:
    """
    Label-skewed partition: client k draws class proportions ``p_k ~ Dir(alpha 1_C)``
    and every class is divided among clients in proportion to ``p_k[c]``.
    Client sizes are left unequal. Empty clients are repaired by moving one sample
    from the currently largest client.

    :raises TooManyClients: if K exceeds the number of samples
    :raises InvalidParams: if alpha is not positive or K < 1
    """
    if K < 1:
        raise InvalidParams("client_count_must_be_positive")
    if K > dataset.n:
        raise TooManyClients()
    if not alpha > 0:
        raise InvalidParams("dirichlet_alpha_must_be_positive")

    rng = np.random.default_rng(seed)
    proportions = rng.dirichlet(np.full(dataset.num_classes, float(alpha)), size=K)

    assignment: list[list[int]] = [[] for _ in range(K)]
    for c in range(dataset.num_classes):
        members = rng.permutation(np.flatnonzero(dataset.labels == c))
        if members.size == 0:
            continue
        weights = proportions[:, c]
        total = weights.sum()
        weights = weights / total if np.isfinite(total) and total > 0 else np.full(K, 1.0 / K)

        counts = _largest_remainder(members.size, weights)
        for k, chunk in enumerate(np.split(members, np.cumsum(counts)[:-1])):
            assignment[k].extend(chunk.tolist())

    repaired = 0
    for k in range(K):
        if not assignment[k]:
            donor = max(range(K), key=lambda j: (len(assignment[j]), -j))
            assignment[k].append(assignment[donor].pop())
            repaired += 1
    if repaired:
        logger.debug("dirichlet_empty_clients_repaired count=%d", repaired)

    return _make_manifest([np.array(a) for a in assignment], SCHEME_DIRICHLET, float(alpha), seed)


def partition_single_class(dataset: FeatureDataset, seed: int, clients_per_class: int = 1) -> PartitionManifest:
    """
    Most heterogeneous split: every client holds samples of exactly one class.
    Each class is shuffled and cut into `clients_per_class` near-equal shards
    (fewer if the class is smaller than that).

    :raises EmptyClass: if some class has no samples
    """
    if clients_per_class < 1:
        raise InvalidParams("clients_per_class_must_be_positive")
    counts = dataset.class_counts()
    if np.any(counts == 0):
        raise EmptyClass(f"empty_class_{int(np.flatnonzero(counts == 0)[0])}")

    rng = np.random.default_rng(seed)
    assignment: list[np.ndarray] = []
    for c in range(dataset.num_classes):
        members = rng.permutation(np.flatnonzero(dataset.labels == c))
        shards = min(clients_per_class, members.size)
        assignment.extend(np.array_split(members, shards))

    return _make_manifest(assignment, SCHEME_SINGLE_CLASS, None, seed)


# region: manifest file
def manifest_to_text(manifest: PartitionManifest) -> str:
    lines = [
        "{",
        f'  "scheme": {json.dumps(manifest.scheme)},',
        f'  "alpha": {json.dumps(manifest.alpha)},',
        f'  "seed": {json.dumps(manifest.seed)},',
        f'  "n": {manifest.n},',
        '  "clients": {',
    ]
    for k, indices in enumerate(manifest.clients):
        separator = "," if k < manifest.K - 1 else ""
        lines.append(f'    "{k}": {json.dumps(indices.tolist())}{separator}')
    lines.extend(["  }", "}", ""])
    return "\n".join(lines)


def manifest_from_text(text: str) -> PartitionManifest:
    try:
        document: Any = json.loads(text)
    except json.JSONDecodeError as error:
        raise InvalidManifest("manifest_not_json") from error

    if not isinstance(document, dict):
        raise InvalidManifest("manifest_not_object")
    for key in ("scheme", "clients"):
        if key not in document:
            raise InvalidManifest(f"manifest_missing_{key}")

    clients = document["clients"]
    if not isinstance(clients, dict) or not clients:
        raise InvalidManifest("manifest_clients_not_mapping")

    assignment: list[np.ndarray] = []
    for k in range(len(clients)):
        indices = clients.get(str(k))
        if indices is None:
            raise InvalidManifest(f"manifest_missing_client_{k}")
        if not isinstance(indices, list) or not all(isinstance(i, int) and not isinstance(i, bool) for i in indices):
            raise InvalidManifest(f"manifest_bad_indices_client_{k}")
        assignment.append(np.array(sorted(indices), dtype=np.int64))

    scheme = document["scheme"]
    if not isinstance(scheme, str):
        raise InvalidManifest("manifest_bad_scheme")
    alpha = document.get("alpha")
    if alpha is not None and (not isinstance(alpha, (int, float)) or isinstance(alpha, bool) or not math.isfinite(alpha)):
        raise InvalidManifest("manifest_bad_alpha")
    seed = document.get("seed")
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool)):
        raise InvalidManifest("manifest_bad_seed")

    manifest = PartitionManifest(
        clients=tuple(assignment),
        scheme=scheme,
        alpha=None if alpha is None else float(alpha),
        seed=seed,
    )
    n = document.get("n")
    if n is not None and (not isinstance(n, int) or isinstance(n, bool)):
        raise InvalidManifest("manifest_bad_n")
    manifest.validate(n)
    return manifest


def write_manifest(path: PathLike, manifest: PartitionManifest) -> None:
    atomic_write_text(path, manifest_to_text(manifest))


def read_manifest(path: PathLike) -> PartitionManifest:
    try:
        text = read_bytes(path).decode("utf-8")
    except UnicodeDecodeError as error:
        raise InvalidManifest("manifest_not_utf8") from error
    return manifest_from_text(text)
# endregion: manifest file
