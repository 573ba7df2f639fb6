"""Reproducible Gaussian streams.

A :class:`NoiseSource` names a stream by ``(master_seed, stream_id)``. The
stream is defined exactly, so it can be regenerated by any implementation:

1. Philox4x64-10 keyed with ``(master_seed, stream_id)``, counter starting
   at zero, emitting 64-bit words in numpy's ``random_raw`` order.
2. Each word ``w`` becomes ``v = 2 * (w >> 11) * 2**-53 - 1`` in ``[-1, 1)``.
3. Consecutive words form pairs ``(v1, v2)``; Marsaglia's polar method
   keeps pairs with ``0 < s = v1**2 + v2**2 < 1`` and emits
   ``v1 * f`` then ``v2 * f`` with ``f = sqrt(-2 ln(s) / s)``.

The stream is prefix-consistent: asking for fewer values returns a prefix
of the longer sequence.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InputError

_U64 = 1 << 64
_CHUNK_PAIRS = 1 << 14


@dataclass(frozen=True)
class NoiseSource:
    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or not (0 <= int(v) < _U64):
                raise InputError(f"{name} must be an integer in [0, 2**64), got {v!r}")

    def bit_generator(self) -> np.random.Philox:
        key = np.array([self.master_seed, self.stream_id], dtype=np.uint64)
        return np.random.Philox(key=key)

    def normals(self, count: int) -> np.ndarray:
        return standard_normals(self, count)


def standard_normals(noise: NoiseSource, count: int) -> np.ndarray:
    count = int(count)
    if count < 0:
        raise InputError("count must be non-negative")
    out = np.empty(count)
    if count == 0:
        return out
    bg = noise.bit_generator()
    filled = 0
    while filled < count:
        raw = bg.random_raw(2 * _CHUNK_PAIRS)
        v = (raw >> np.uint64(11)).astype(float) * (2.0 ** -53) * 2.0 - 1.0
        v1, v2 = v[0::2], v[1::2]
        s = v1 * v1 + v2 * v2
        ok = (s > 0.0) & (s < 1.0)
        v1, v2, s = v1[ok], v2[ok], s[ok]
        f = np.sqrt(-2.0 * np.log(s) / s)
        z = np.empty(2 * s.size)
        z[0::2] = v1 * f
        z[1::2] = v2 * f
        take = min(z.size, count - filled)
        out[filled:filled + take] = z[:take]
        filled += take
    return out
