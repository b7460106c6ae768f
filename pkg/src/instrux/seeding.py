"""Seed derivation for reproducible, label-scoped randomness.

Every randomized operation receives its own seed derived from the global
seed plus a stable textual label, so adding a new operation never shifts
the randomness of existing ones.
"""

import hashlib
import random

DEFAULT_SEED = 926


def derive_seed(master: int, label: str) -> int:
    """Derive a stable 64-bit sub-seed from ``master`` and a text label."""
    digest = hashlib.sha256(f"{master}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def rng_for(master: int, label: str) -> random.Random:
    """A ``random.Random`` seeded by :func:`derive_seed`."""
    return random.Random(derive_seed(master, label))
