"""
Seeded normal variates with a fully specified bit stream.

Philox4x64-10 keyed with the seed (counter starting at zero) produces raw
64-bit words. The top 53 bits of each word give u = (w >> 11 + 1) * 2**-53 in
(0, 1], and Box-Muller turns consecutive (u1, u2) pairs into
(sqrt(-2 ln u1) cos 2 pi u2, sqrt(-2 ln u1) sin 2 pi u2), emitted in that order.

Parallel streams use seed_i = base_seed + i.
"""
import numpy as np

from src.domain.exceptions import InvalidArgumentError
from src.domain.interfaces import INormalSource

_MANTISSA_SHIFT = np.uint64(11)
_TWO_POW_M53 = 2.0 ** -53


def derive_seed(base_seed: int, index: int) -> int:
    return int(base_seed) + int(index)


class PhiloxNormalSource(INormalSource):
    def __init__(self, seed: int):
        if isinstance(seed, bool) or int(seed) != seed or seed < 0:
            raise InvalidArgumentError(f"seed must be a non-negative integer, got {seed}")
        self.seed = int(seed)
        self._bits = np.random.Philox(key=self.seed)

    def uniform(self, count: int) -> np.ndarray:
        """`count` doubles in (0, 1]."""
        raw = self._bits.random_raw(count)
        return ((raw >> _MANTISSA_SHIFT).astype(np.float64) + 1.0) * _TWO_POW_M53

    def standard_normal(self, count: int) -> np.ndarray:
        if isinstance(count, bool) or int(count) != count or count < 0:
            raise InvalidArgumentError(f"count must be a non-negative integer, got {count}")
        count = int(count)
        pairs = (count + 1) // 2
        u = self.uniform(2 * pairs).reshape(pairs, 2)
        radius = np.sqrt(-2.0 * np.log(u[:, 0]))
        angle = 2.0 * np.pi * u[:, 1]
        z = np.empty((pairs, 2))
        z[:, 0] = radius * np.cos(angle)
        z[:, 1] = radius * np.sin(angle)
        return z.ravel()[:count]
