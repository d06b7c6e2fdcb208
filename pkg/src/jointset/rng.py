"""Named, splittable random streams.

Every random draw in the package comes from ``stream(seed, name, ...)``: a PCG64
generator seeded by ``SeedSequence(seed, spawn_key=crc32(names))``. Streams
with different names are statistically independent and reproducible across
platforms for a given numpy version of PCG64 (the algorithm is pinned).
"""

import zlib

import numpy as np


def _key(parts) -> tuple:
    return tuple(
        p if isinstance(p, int) else zlib.crc32(str(p).encode("utf-8")) for p in parts
    )


def stream(seed: int, *names) -> np.random.Generator:
    seq = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=_key(names))
    return np.random.Generator(np.random.PCG64(seq))
