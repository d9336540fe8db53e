"""
Sub-seed derivation. One global seed determines a whole run; each consumer asks
for its own stream by role name:

    derive_seed(seed, role) = seed XOR first 8 bytes (little endian) of BLAKE2b(role)

Roles used by the package: ``data``, ``split``, ``partition``, ``sampling``,
``rff``, ``lp``, ``lp_init``, ``lp/<round>/<client>``, ``coupon``.
"""

import hashlib

import numpy as np

_MASK_64 = 0xFFFFFFFFFFFFFFFF


def derive_seed(seed: int, role: str) -> int:
    digest = hashlib.blake2b(role.encode("utf-8"), digest_size=8).digest()
    return (int(seed) & _MASK_64) ^ int.from_bytes(digest, "little")


def rng_for(seed: int, role: str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, role))
