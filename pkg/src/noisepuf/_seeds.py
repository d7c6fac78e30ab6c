"""Deterministic seed derivation.

Every random draw in the package is keyed by a master seed plus a tag path,
so that any stage of a run can be replayed in isolation.
"""
from __future__ import annotations

import hashlib

_MASK64 = (1 << 64) - 1


def derive_seed(*parts: object) -> int:
    """Hash ``parts`` into a 64-bit seed; stable across platforms and runs."""
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        h.update(repr(p).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little") & _MASK64
