"""Carrier numerology, PDSCH allocation and slot resource grids."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from . import qam
from .crc import CRC_LEN, attach_crc, check_crc

SUBCARRIERS_PER_RB = 12


@dataclass(frozen=True)
class CarrierConfig:
    """CP-OFDM numerology (normal cyclic prefix only).

    CP lengths follow the NR rule scaled to ``nfft``: 144*nfft/2048 samples,
    plus 16*2**mu*nfft/2048 on the first symbol of every half subframe.
    """

    nfft: int = 1024
    scs_hz: float = 60e3
    n_size_grid: int = 66
    symbols_per_slot: int = 14

    def __post_init__(self) -> None:
        if self.symbols_per_slot != 14:
            raise ValueError("only normal cyclic prefix (14 symbols per slot) is supported")
        if self.n_size_grid < 1:
            raise ValueError("carrier needs at least one resource block")
        if self.n_subcarriers > self.nfft:
            raise ValueError(f"{self.n_subcarriers} subcarriers do not fit in a {self.nfft}-point FFT")
        mu = np.log2(self.scs_hz / 15e3)
        if mu != int(mu) or mu < 0:
            raise ValueError(f"subcarrier spacing {self.scs_hz} Hz is not 15 kHz * 2**mu")
        if (144 * self.nfft) % 2048 or (16 * self.nfft * 2 ** int(mu)) % 2048:
            raise ValueError(f"nfft={self.nfft} gives fractional cyclic prefix lengths")

    @property
    def mu(self) -> int:
        return int(np.log2(self.scs_hz / 15e3))

    @property
    def sample_rate_hz(self) -> float:
        return self.nfft * self.scs_hz

    @property
    def n_subcarriers(self) -> int:
        return SUBCARRIERS_PER_RB * self.n_size_grid

    @property
    def slots_per_frame(self) -> int:
        return 10 * 2**self.mu

    @property
    def short_cp(self) -> int:
        return 144 * self.nfft // 2048

    @property
    def long_cp(self) -> int:
        return self.short_cp + 16 * self.nfft * 2**self.mu // 2048

    def slot_cp_lengths(self, slot_index: int) -> tuple[int, ...]:
        per_half = 7 * 2**self.mu
        first = slot_index * self.symbols_per_slot
        return tuple(
            self.long_cp if (first + i) % per_half == 0 else self.short_cp
            for i in range(self.symbols_per_slot)
        )

    @property
    def cp_lengths(self) -> tuple[int, ...]:
        """CP lengths of slot 0 (other slots may lack the long CP)."""
        return self.slot_cp_lengths(0)

    def slot_length(self, slot_index: int) -> int:
        return self.symbols_per_slot * self.nfft + sum(self.slot_cp_lengths(slot_index))

    def slot_starts(self, n_slots: int, first_slot: int = 0) -> np.ndarray:
        lengths = [self.slot_length(first_slot + s) for s in range(n_slots)]
        return np.concatenate([[0], np.cumsum(lengths)]).astype(np.int64)

    def fft_bins(self) -> np.ndarray:
        """FFT bin of each subcarrier; the grid is centred on DC."""
        k = np.arange(self.n_subcarriers)
        return (k - self.n_subcarriers // 2) % self.nfft


@dataclass(frozen=True)
class PdschConfig:
    """Single-layer PDSCH allocation, mapping type A, full-slot duration."""

    modulation: str = "QAM64"
    n_layers: int = 1
    prb_start: int = 0
    n_prb: int | None = None  # None: the whole carrier
    dmrs_type_a_position: int = 2
    ptrs_time_density: int = 1
    ptrs_freq_density: int = 2
    ptrs_re_offset: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "modulation", qam.normalize_order(self.modulation))
        if self.n_layers != 1:
            raise ValueError("only single-layer PDSCH is supported")
        if self.ptrs_time_density < 1 or self.ptrs_freq_density < 1:
            raise ValueError("PT-RS densities must be positive")

    def prbs(self, cfg: CarrierConfig) -> np.ndarray:
        n = cfg.n_size_grid - self.prb_start if self.n_prb is None else self.n_prb
        if n <= 0:
            raise ValueError("PDSCH allocation has zero resource blocks")
        if self.prb_start < 0 or self.prb_start + n > cfg.n_size_grid:
            raise ValueError("PDSCH allocation exceeds the carrier grid")
        return np.arange(self.prb_start, self.prb_start + n)

    def subcarriers(self, cfg: CarrierConfig) -> np.ndarray:
        rb = self.prbs(cfg)
        return (rb[:, None] * SUBCARRIERS_PER_RB + np.arange(SUBCARRIERS_PER_RB)).ravel()

    def dmrs_symbol(self, cfg: CarrierConfig) -> int:
        if not 0 <= self.dmrs_type_a_position < cfg.symbols_per_slot:
            raise ValueError("DM-RS position outside the slot")
        return self.dmrs_type_a_position


class Role(IntEnum):
    EMPTY = 0
    DATA = 1
    DMRS = 2
    PTRS = 3


@dataclass(eq=False)
class ResourceGrid:
    """Complex REs indexed ``(subcarrier, symbol, port)`` with per-RE roles."""

    cells: np.ndarray
    roles: np.ndarray

    def __post_init__(self) -> None:
        self.cells = np.asarray(self.cells, dtype=complex)
        if self.cells.ndim == 2:
            self.cells = self.cells[:, :, None]
        roles = np.asarray(self.roles, dtype=np.int8)
        if roles.ndim == 2:
            roles = np.repeat(roles[:, :, None], self.cells.shape[2], axis=2)
        if roles.shape != self.cells.shape:
            raise ValueError(f"roles shape {roles.shape} differs from cells shape {self.cells.shape}")
        self.roles = roles

    @property
    def n_subcarriers(self) -> int:
        return self.cells.shape[0]

    @property
    def n_symbols(self) -> int:
        return self.cells.shape[1]

    @property
    def n_ports(self) -> int:
        return self.cells.shape[2]

    def role_counts(self, port: int = 0) -> dict[Role, int]:
        r = self.roles[:, :, port]
        return {role: int(np.count_nonzero(r == role)) for role in Role}

    def data_positions(self, port: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """(subcarrier, symbol) of data REs in mapping order: frequency first, then time."""
        sym, sc = np.nonzero(self.roles[:, :, port].T == Role.DATA)
        return sc, sym

    def to_csv_rows(self, port: int = 0):
        names = {int(r): r.name for r in Role}
        for k in range(self.n_subcarriers):
            for l in range(self.n_symbols):
                v = self.cells[k, l, port]
                yield k, l, names[int(self.roles[k, l, port])], float(v.real), float(v.imag)


@dataclass(eq=False)
class BitBlock:
    """One slot's payload: information bits followed by their CRC-24A."""

    bits: np.ndarray
    crc_ok_reference: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.bits = np.asarray(self.bits, dtype=np.uint8).ravel()
        if self.bits.size <= CRC_LEN:
            raise ValueError("block must be longer than its checksum")
        self.crc_ok_reference = self.bits[-CRC_LEN:].copy()
        if not check_crc(self.bits):
            raise ValueError("block checksum does not match its bits")

    @classmethod
    def random(cls, n_bits: int, rng: np.random.Generator) -> "BitBlock":
        info = rng.integers(0, 2, size=n_bits - CRC_LEN, dtype=np.uint8)
        return cls(attach_crc(info))

    def __len__(self) -> int:
        return self.bits.size


def slot_roles(cfg: CarrierConfig, pdsch: PdschConfig, dmrs, ptrs) -> np.ndarray:
    roles = np.full((cfg.n_subcarriers, cfg.symbols_per_slot), Role.EMPTY, dtype=np.int8)
    roles[pdsch.subcarriers(cfg), :] = Role.DATA
    roles[:, pdsch.dmrs_symbol(cfg)] = Role.EMPTY  # no data anywhere in the DM-RS symbol
    roles[dmrs.subcarriers, dmrs.symbols] = Role.DMRS
    roles[ptrs.subcarriers, ptrs.symbols] = Role.PTRS
    return roles


def n_data_res(cfg: CarrierConfig, pdsch: PdschConfig, dmrs, ptrs) -> int:
    return int(np.count_nonzero(slot_roles(cfg, pdsch, dmrs, ptrs) == Role.DATA))


def build_slot_grid(payload: BitBlock, cfg: CarrierConfig, pdsch: PdschConfig, dmrs, ptrs) -> ResourceGrid:
    """Single-layer slot grid with pilots in place and QAM payload in every data RE."""
    roles = slot_roles(cfg, pdsch, dmrs, ptrs)
    if set(zip(dmrs.subcarriers.tolist(), dmrs.symbols.tolist())) & set(
        zip(ptrs.subcarriers.tolist(), ptrs.symbols.tolist())
    ):
        raise ValueError("DM-RS and PT-RS positions overlap")
    cells = np.zeros(roles.shape, dtype=complex)
    cells[dmrs.subcarriers, dmrs.symbols] = dmrs.values
    cells[ptrs.subcarriers, ptrs.symbols] = ptrs.values
    grid = ResourceGrid(cells, roles)
    sc, sym = grid.data_positions()
    need = sc.size * qam.bits_per_symbol(pdsch.modulation)
    if len(payload) != need:
        raise ValueError(f"payload has {len(payload)} bits, slot needs exactly {need}")
    grid.cells[sc, sym, 0] = qam.qam_modulate(payload.bits, pdsch.modulation)
    return grid


def precode(grid: ResourceGrid, n_tx: int) -> ResourceGrid:
    """Map the single layer onto ``n_tx`` ports with equal weights 1/sqrt(n_tx)."""
    if grid.n_ports != 1:
        raise ValueError("precoding expects a single-layer grid")
    if n_tx < 1:
        raise ValueError("need at least one transmit port")
    w = np.full(n_tx, 1.0 / np.sqrt(n_tx))
    return ResourceGrid(grid.cells[:, :, :1] * w, np.repeat(grid.roles[:, :, :1], n_tx, axis=2))
