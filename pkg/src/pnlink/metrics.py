"""Link-quality metrics."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np


@dataclass
class LinkMetrics:
    evm_pct: float
    evm_db: float
    ber: float
    bler: float
    n_bits: int
    n_blocks: int
    n_symbols: int
    scenario: dict[str, Any] = field(default_factory=dict)

    def as_dict(self) -> dict[str, Any]:
        return asdict(self)


def evm(reference, equalized) -> tuple[float, float]:
    """RMS EVM over all symbols as (percent, dB); dB is -inf for a perfect match."""
    s = np.asarray(reference, dtype=complex).ravel()
    s_hat = np.asarray(equalized, dtype=complex).ravel()
    if s.size != s_hat.size:
        raise ValueError(f"length mismatch: {s.size} reference vs {s_hat.size} equalized symbols")
    if s.size == 0:
        raise ValueError("EVM needs at least one symbol")
    ref_energy = float(np.sum(np.abs(s) ** 2))
    if ref_energy == 0:
        raise ValueError("reference symbols are all zero")
    pct = 100.0 * math.sqrt(float(np.sum(np.abs(s_hat - s) ** 2)) / ref_energy)
    return pct, evm_pct_to_db(pct)


def evm_pct_to_db(pct: float) -> float:
    return 20.0 * math.log10(pct / 100.0) if pct > 0 else -math.inf


def bit_errors(tx_bits, rx_bits) -> int:
    a = np.asarray(tx_bits, dtype=np.uint8).ravel()
    b = np.asarray(rx_bits, dtype=np.uint8).ravel()
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size} bits")
    return int(np.count_nonzero(a != b))


def ber(tx_bits, rx_bits) -> float:
    n = np.asarray(tx_bits).size
    if n == 0:
        raise ValueError("BER needs at least one bit")
    return bit_errors(tx_bits, rx_bits) / n


def bler(block_results: Sequence[bool]) -> float:
    """Fraction of blocks whose CRC failed; ``block_results`` holds one pass flag per block."""
    results = list(block_results)
    if not results:
        raise ValueError("BLER needs at least one block")
    return sum(1 for ok in results if not ok) / len(results)


class MetricsAccumulator:
    """Running sums for EVM/BER/BLER over the slots of one run."""

    def __init__(self) -> None:
        self.err_energy = 0.0
        self.ref_energy = 0.0
        self.bit_errs = 0
        self.n_bits = 0
        self.blocks: list[bool] = []
        self.n_symbols = 0

    def add_slot(self, tx_symbols, rx_symbols, tx_bits, rx_bits, crc_ok: bool) -> None:
        s = np.asarray(tx_symbols)
        self.err_energy += float(np.sum(np.abs(np.asarray(rx_symbols) - s) ** 2))
        self.ref_energy += float(np.sum(np.abs(s) ** 2))
        self.n_symbols += s.size
        self.bit_errs += bit_errors(tx_bits, rx_bits)
        self.n_bits += np.asarray(tx_bits).size
        self.blocks.append(bool(crc_ok))

    def result(self, scenario: dict[str, Any] | None = None) -> LinkMetrics:
        if self.ref_energy == 0 or not self.blocks:
            raise ValueError("no slots accumulated")
        pct = 100.0 * math.sqrt(self.err_energy / self.ref_energy)
        return LinkMetrics(
            evm_pct=pct,
            evm_db=evm_pct_to_db(pct),
            ber=self.bit_errs / self.n_bits,
            bler=bler(self.blocks),
            n_bits=self.n_bits,
            n_blocks=len(self.blocks),
            n_symbols=self.n_symbols,
            scenario=dict(scenario or {}),
        )
