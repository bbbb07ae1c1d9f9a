"""DM-RS and PT-RS positions and pilot values.

Positions come from the configuration alone. Values are QPSK,
``((1 - 2*b0) + 1j*(1 - 2*b1)) / sqrt(2)``, with the bits drawn from a
generator keyed on ``(seed_label, kind, slot_index)``; each slot therefore has
its own reproducible sequence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import SUBCARRIERS_PER_RB, CarrierConfig, PdschConfig
from .seeding import SeedLabel, rng_for, sub_label


@dataclass(eq=False)
class PilotSet:
    kind: str  # "DMRS" or "PTRS"
    subcarriers: np.ndarray
    symbols: np.ndarray
    values: np.ndarray
    seed_label: SeedLabel

    def __post_init__(self) -> None:
        self.subcarriers = np.asarray(self.subcarriers, dtype=np.int64)
        self.symbols = np.asarray(self.symbols, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=complex)
        if not (self.subcarriers.shape == self.symbols.shape == self.values.shape):
            raise ValueError("pilot index and value arrays differ in length")

    def __len__(self) -> int:
        return self.values.size

    @property
    def entries(self) -> list[tuple[int, int, complex]]:
        return list(zip(self.subcarriers.tolist(), self.symbols.tolist(), self.values.tolist()))

    def positions(self) -> set[tuple[int, int]]:
        return set(zip(self.subcarriers.tolist(), self.symbols.tolist()))

    def symbol_indices(self) -> np.ndarray:
        return np.unique(self.symbols)


def qpsk_sequence(rng: np.random.Generator, n: int) -> np.ndarray:
    b = rng.integers(0, 2, size=(n, 2))
    return ((1 - 2 * b[:, 0]) + 1j * (1 - 2 * b[:, 1])) / np.sqrt(2.0)


def gen_dmrs(
    cfg: CarrierConfig, slot_index: int, seed_label: SeedLabel, pdsch: PdschConfig | None = None
) -> PilotSet:
    """Type-1, single-symbol, single-port DM-RS: even subcarriers of the allocation."""
    if slot_index < 0:
        raise ValueError("slot index must be non-negative")
    pdsch = pdsch or PdschConfig()
    sc = pdsch.subcarriers(cfg)
    sc = sc[sc % 2 == 0]
    sym = np.full(sc.size, pdsch.dmrs_symbol(cfg))
    rng = rng_for(sub_label(seed_label, "DMRS", slot_index))
    return PilotSet("DMRS", sc, sym, qpsk_sequence(rng, sc.size), seed_label)


def ptrs_symbols(cfg: CarrierConfig, pdsch: PdschConfig) -> np.ndarray:
    """Every ``time_density``-th symbol, counting restarted after the DM-RS symbol."""
    dmrs = pdsch.dmrs_symbol(cfg)
    out = []
    ref = 0
    for l in range(cfg.symbols_per_slot):
        if l == dmrs:
            ref = l + 1
            continue
        if (l - ref) % pdsch.ptrs_time_density == 0:
            out.append(l)
    return np.asarray(out, dtype=np.int64)


def ptrs_subcarriers(cfg: CarrierConfig, pdsch: PdschConfig) -> np.ndarray:
    """Subcarrier ``re_offset`` of every ``freq_density``-th allocated RB."""
    rb = pdsch.prbs(cfg)
    rb = rb[(rb - rb[0]) % pdsch.ptrs_freq_density == 0]
    return rb * SUBCARRIERS_PER_RB + pdsch.ptrs_re_offset


def gen_ptrs(
    cfg: CarrierConfig, slot_index: int, seed_label: SeedLabel, pdsch: PdschConfig | None = None
) -> PilotSet:
    if slot_index < 0:
        raise ValueError("slot index must be non-negative")
    pdsch = pdsch or PdschConfig()
    sc = ptrs_subcarriers(cfg, pdsch)
    syms = ptrs_symbols(cfg, pdsch)
    rng = rng_for(sub_label(seed_label, "PTRS", slot_index))
    per_sc = qpsk_sequence(rng, sc.size)
    sc_grid, sym_grid = np.meshgrid(sc, syms, indexing="ij")
    values = np.repeat(per_sc[:, None], syms.size, axis=1)
    return PilotSet("PTRS", sc_grid.ravel(), sym_grid.ravel(), values.ravel(), seed_label)
