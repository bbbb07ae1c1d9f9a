"""CRC-24A (generator 0x1864CFB), zero initial state, no output inversion.

The checksum is linear in the message bits, so for a given message length
the 24 parity bits are ``bits @ G mod 2`` where row ``i`` of ``G`` is
``x**(L-1-i+24) mod g(x)``. ``G`` is built once per length and cached.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

CRC24A_POLY = 0x1864CFB
CRC_LEN = 24


@lru_cache(maxsize=16)
def _generator_matrix(n_bits: int) -> np.ndarray:
    rows = np.empty((n_bits, CRC_LEN), dtype=np.float32)
    shifts = np.arange(CRC_LEN - 1, -1, -1)
    r = 1  # x**0
    for _ in range(CRC_LEN):
        r = _times_x(r)
    # r == x**24 mod g; walk back from the last message bit
    for i in range(n_bits - 1, -1, -1):
        rows[i] = (r >> shifts) & 1
        r = _times_x(r)
    rows.setflags(write=False)
    return rows


def _times_x(r: int) -> int:
    r <<= 1
    if r >> CRC_LEN:
        r ^= CRC24A_POLY
    return r


def crc24a(bits) -> np.ndarray:
    b = np.asarray(bits, dtype=np.uint8).ravel()
    if b.size == 0:
        return np.zeros(CRC_LEN, dtype=np.uint8)
    # float32 sums of 0/1 stay exact below 2**24 bits and go through BLAS
    if b.size >= 1 << 24:
        raise ValueError("message too long for CRC computation")
    counts = b.astype(np.float32) @ _generator_matrix(b.size)
    return (counts.astype(np.int64) & 1).astype(np.uint8)


def attach_crc(bits) -> np.ndarray:
    b = np.asarray(bits, dtype=np.uint8).ravel()
    return np.concatenate([b, crc24a(b)])


def check_crc(bits_with_crc) -> bool:
    b = np.asarray(bits_with_crc, dtype=np.uint8).ravel()
    if b.size < CRC_LEN:
        return False
    return bool(np.array_equal(crc24a(b[:-CRC_LEN]), b[-CRC_LEN:]))
