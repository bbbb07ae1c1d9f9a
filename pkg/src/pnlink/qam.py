"""Gray-mapped square QAM (64 and 256 points).

Bits of one symbol are interleaved as in NR: even-indexed bits drive the
in-phase axis, odd-indexed bits the quadrature axis. Per axis with bits
``c0..c{m-1}`` and ``s_i = 1 - 2*c_i`` the level is::

    s0 * (2**(m-1) - s1 * (2**(m-2) - ... - s_{m-2} * (2 - s_{m-1})))

which yields odd integers in ``[-(2**m - 1), 2**m - 1]`` with adjacent
levels differing in one bit. Points are scaled to unit average energy
(1/sqrt(42) for 64QAM, 1/sqrt(170) for 256QAM).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

_ALIASES = {
    "QAM64": "QAM64",
    "64QAM": "QAM64",
    "QAM256": "QAM256",
    "256QAM": "QAM256",
}
_BITS = {"QAM64": 6, "QAM256": 8}


def normalize_order(order: str) -> str:
    try:
        return _ALIASES[str(order).upper()]
    except KeyError:
        raise ValueError(f"unsupported modulation {order!r}; expected QAM64 or QAM256") from None


def bits_per_symbol(order: str) -> int:
    return _BITS[normalize_order(order)]


def _axis_levels(axis_bits: np.ndarray) -> np.ndarray:
    """Unnormalized PAM level for bits ``(..., m)``."""
    s = 1 - 2 * axis_bits.astype(np.int64)
    m = s.shape[-1]
    u = 2 - s[..., m - 1]
    for i in range(m - 2, 0, -1):
        u = 2 ** (m - i) - s[..., i] * u
    return s[..., 0] * u


@lru_cache(maxsize=None)
def _tables(order: str) -> tuple[np.ndarray, float, np.ndarray]:
    """(points indexed by integer word, scale, bits of each ascending axis level)."""
    k = _BITS[order]
    m = k // 2
    words = np.arange(2**k)
    bits = ((words[:, None] >> np.arange(k - 1, -1, -1)) & 1).astype(np.uint8)
    scale = 1.0 / np.sqrt(2.0 * (4**m - 1) / 3.0)
    points = (_axis_levels(bits[:, 0::2]) + 1j * _axis_levels(bits[:, 1::2])) * scale
    axis_words = ((np.arange(2**m)[:, None] >> np.arange(m - 1, -1, -1)) & 1).astype(np.uint8)
    levels = _axis_levels(axis_words)
    by_level = np.empty_like(axis_words)
    by_level[(levels + 2**m - 1) // 2] = axis_words
    points.setflags(write=False)
    by_level.setflags(write=False)
    return points, scale, by_level


def constellation(order: str) -> np.ndarray:
    """All points, indexed by the integer value of the MSB-first bit word."""
    return _tables(normalize_order(order))[0].copy()


def qam_modulate(bits, order: str) -> np.ndarray:
    order = normalize_order(order)
    k = _BITS[order]
    b = np.asarray(bits, dtype=np.uint8).ravel()
    if b.size % k:
        raise ValueError(f"ragged block: {b.size} bits is not a multiple of {k}")
    if np.any(b > 1):
        raise ValueError("bits must be 0 or 1")
    words = b.reshape(-1, k)
    scale = _tables(order)[1]
    return (_axis_levels(words[:, 0::2]) + 1j * _axis_levels(words[:, 1::2])) * scale


def qam_demodulate(symbols, order: str) -> np.ndarray:
    """Hard decisions; a tie between two levels goes to the lower (more negative) one."""
    order = normalize_order(order)
    k = _BITS[order]
    m = k // 2
    _, scale, by_level = _tables(order)
    y = np.asarray(symbols, dtype=complex).ravel() / scale
    top = 2**m - 1

    def axis_index(v: np.ndarray) -> np.ndarray:
        t = (v + top) / 2.0
        return np.clip(np.ceil(t - 0.5), 0, top).astype(np.int64)

    out = np.empty((y.size, k), dtype=np.uint8)
    out[:, 0::2] = by_level[axis_index(y.real)]
    out[:, 1::2] = by_level[axis_index(y.imag)]
    return out.ravel()
