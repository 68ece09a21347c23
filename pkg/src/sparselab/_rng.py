"""Per-sample random streams.

Every stream is keyed by ``(master_seed, sample_index, purpose)`` and backed by
the counter-based Philox generator, so a sample can be regenerated in any
process, in any order.
"""

from __future__ import annotations

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def purpose_key(purpose: str) -> int:
    return zlib.crc32(purpose.encode("utf-8"))


def stream(master_seed: int, sample_index: int, purpose: str = "sample") -> np.random.Generator:
    if sample_index < 0:
        raise ValueError(f"sample_index must be >= 0, got {sample_index}")
    ss = np.random.SeedSequence(
        entropy=int(master_seed) & _MASK64,
        spawn_key=(int(sample_index), purpose_key(purpose)),
    )
    return np.random.Generator(np.random.Philox(ss))
