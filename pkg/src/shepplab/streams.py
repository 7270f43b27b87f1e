"""Counter-based random streams.

A stream is identified by ``(master_seed, stream_id)``, both unsigned 64-bit
integers. The mapping to bits is fixed: the stream is numpy's Philox-4x64
generator with 128-bit key ``[master_seed, stream_id]`` and counter starting at
zero. Replication ``k`` of every experiment uses ``stream_id = k``, so a result
depends only on the seed and the replication index, never on how replications
are spread over workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

_U64 = 2**64


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= int(v) < _U64:
                raise ConfigurationError(f"{name} must be an integer in [0, 2**64), got {v!r}")
            object.__setattr__(self, name, int(v))

    def generator(self) -> np.random.Generator:
        key = np.array([self.master_seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, stream_id: int) -> "RngStream":
        return RngStream(self.master_seed, stream_id)


def stream_generator(master_seed: int, stream_id: int) -> np.random.Generator:
    return RngStream(master_seed, stream_id).generator()


def derive_seed(master_seed: int, tag: str) -> int:
    """Independent 64-bit seed for a named sub-experiment.

    Uses numpy's SeedSequence on ``(master_seed, crc32(tag))``.
    """
    import zlib

    ss = np.random.SeedSequence([int(master_seed), zlib.crc32(tag.encode())])
    return int(ss.generate_state(1, np.uint64)[0])
