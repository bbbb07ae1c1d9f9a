"""CP-OFDM modulation and demodulation.

Transforms are unitary (``norm="ortho"``): the energy of one symbol's REs
equals the energy of its ``nfft``-sample body. Subcarriers are centred on DC
(see ``CarrierConfig.fft_bins``) and unused bins are zero.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .grid import CarrierConfig, ResourceGrid, Role


@lru_cache(maxsize=64)
def _symbol_layout(cfg: CarrierConfig, first_slot: int, n_slots: int) -> tuple[np.ndarray, np.ndarray]:
    """(cp length, body start offset) of every symbol across ``n_slots`` slots."""
    cps = np.concatenate([cfg.slot_cp_lengths(first_slot + s) for s in range(n_slots)]).astype(np.int64)
    sym_len = cps + cfg.nfft
    starts = np.concatenate([[0], np.cumsum(sym_len)[:-1]])
    body = starts + cps
    cps.setflags(write=False)
    body.setflags(write=False)
    return cps, body


def _n_slots(grid_symbols: int, cfg: CarrierConfig) -> int:
    if grid_symbols % cfg.symbols_per_slot:
        raise ValueError(f"grid has {grid_symbols} symbols, not a whole number of slots")
    return grid_symbols // cfg.symbols_per_slot


def waveform_length(cfg: CarrierConfig, n_slots: int, first_slot: int = 0) -> int:
    return int(cfg.slot_starts(n_slots, first_slot)[-1])


def ofdm_modulate(grid: ResourceGrid, cfg: CarrierConfig, first_slot: int = 0) -> np.ndarray:
    """Waveform of shape ``(n_ports, n_samples)`` for a grid spanning whole slots."""
    if grid.n_subcarriers > cfg.nfft:
        raise ValueError(f"grid has {grid.n_subcarriers} subcarriers, wider than nfft={cfg.nfft}")
    if grid.n_subcarriers != cfg.n_subcarriers:
        raise ValueError("grid width does not match the carrier configuration")
    n_slots = _n_slots(grid.n_symbols, cfg)
    cps, _ = _symbol_layout(cfg, first_slot, n_slots)
    spec = np.zeros((grid.n_ports, grid.n_symbols, cfg.nfft), dtype=complex)
    spec[:, :, cfg.fft_bins()] = np.transpose(grid.cells, (2, 1, 0))
    body = np.fft.ifft(spec, axis=-1, norm="ortho")
    pieces = [np.concatenate([body[:, l, cfg.nfft - cp :], body[:, l]], axis=-1) for l, cp in enumerate(cps)]
    return np.concatenate(pieces, axis=-1)


def ofdm_demodulate(
    samples: np.ndarray,
    cfg: CarrierConfig,
    timing_offset: int = 0,
    n_slots: int = 1,
    first_slot: int = 0,
    window_advance: int = 0,
    roles: np.ndarray | None = None,
) -> ResourceGrid:
    """Grid recovered from ``samples`` (``(n_rx, n)`` or ``(n,)``) starting at ``timing_offset``.

    ``window_advance`` starts each FFT window that many samples early, inside
    the CP, and removes the resulting linear phase ramp; it buys tolerance to
    channel energy arriving before the estimated timing point.
    """
    x = np.asarray(samples, dtype=complex)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[-1] == 0:
        raise ValueError("no samples to demodulate")
    if timing_offset < 0:
        raise ValueError("timing offset must be non-negative")
    cps, body = _symbol_layout(cfg, first_slot, n_slots)
    if not 0 <= window_advance <= int(cps.min()):
        raise ValueError("window advance must lie within the shortest cyclic prefix")
    need = timing_offset + waveform_length(cfg, n_slots, first_slot)
    if x.shape[-1] < need:
        raise ValueError(f"insufficient samples: need {need}, got {x.shape[-1]}")
    idx = (timing_offset + body - window_advance)[:, None] + np.arange(cfg.nfft)
    spec = np.fft.fft(x[:, idx], axis=-1, norm="ortho")
    bins = cfg.fft_bins()
    cells = spec[:, :, bins]
    if window_advance:
        signed = np.where(bins >= cfg.nfft // 2, bins - cfg.nfft, bins)
        cells = cells * np.exp(2j * np.pi * signed * window_advance / cfg.nfft)
    cells = np.transpose(cells, (2, 1, 0))
    if roles is None:
        roles = np.full(cells.shape[:2], Role.EMPTY, dtype=np.int8)
    return ResourceGrid(cells, np.asarray(roles)[:, :, :1] if np.ndim(roles) == 3 else roles)
