"""PDSCH receiver: timing, DM-RS channel estimate, PT-RS CPE correction, MMSE."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import signal

from . import qam
from .grid import CarrierConfig, PdschConfig, ResourceGrid, Role, slot_roles
from .ofdm import ofdm_demodulate, ofdm_modulate
from .refsig import PilotSet

NOISE_VAR_FLOOR = 1e-12
WITH_CPE = "with_cpe"
WITHOUT_CPE = "without_cpe"


@dataclass(eq=False)
class ChannelEstimate:
    h: np.ndarray  # (subcarrier, symbol, rx, layer)
    noise_var: float

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.h)):
            raise ValueError("channel estimate has non-finite entries")
        if self.noise_var < 0:
            raise ValueError("noise variance must be non-negative")


@dataclass(eq=False)
class CpeEstimate:
    phi: np.ndarray  # one phase per symbol of the slot, radians in (-pi, pi]
    confidence: np.ndarray  # PT-RS REs (times rx antennas) behind each phase; 0 for filled symbols

    def to_csv_rows(self):
        for l, (p, c) in enumerate(zip(self.phi, self.confidence)):
            yield l, float(p), int(c)


@dataclass(frozen=True)
class Genie:
    """Receiver shortcuts; ``None`` means estimate from the signal."""

    timing: int | None = None
    noise_var: float | None = None


def estimate_timing(rx_waveform: np.ndarray, reference: np.ndarray) -> int:
    """Lag maximizing ``sum_rx |sum_n rx[n+lag] conj(ref[n])|^2``; the first lag wins ties."""
    rx = np.asarray(rx_waveform, dtype=complex)
    ref = np.asarray(reference, dtype=complex).ravel()
    if rx.ndim == 1:
        rx = rx[None, :]
    if rx.size == 0 or ref.size == 0:
        raise ValueError("timing estimation needs non-empty inputs")
    if ref.size > rx.shape[-1]:
        raise ValueError("reference is longer than the received waveform")
    metric = np.zeros(rx.shape[-1] - ref.size + 1)
    for row in rx:
        metric += np.abs(signal.correlate(row, ref, mode="valid", method="fft")) ** 2
    return int(np.argmax(metric))


def _interp_linear(x: np.ndarray, xp: np.ndarray, fp: np.ndarray) -> np.ndarray:
    """Piecewise-linear interpolation along axis 0 with linear extrapolation at both ends."""
    if xp.size == 1:
        return np.repeat(fp, x.size, axis=0)
    seg = np.clip(np.searchsorted(xp, x, side="right") - 1, 0, xp.size - 2)
    x0, x1 = xp[seg], xp[seg + 1]
    t = ((x - x0) / (x1 - x0)).reshape((-1,) + (1,) * (fp.ndim - 1))
    return fp[seg] * (1 - t) + fp[seg + 1] * t


def estimate_channel(rx_grid: ResourceGrid, dmrs: PilotSet) -> ChannelEstimate:
    """LS estimates on the DM-RS, linear interpolation over frequency, held over the slot.

    The noise variance comes from the second difference of adjacent pilot
    estimates: for a locally linear channel, ``h_k - (h_{k-1} + h_{k+1})/2``
    is pure noise with variance 1.5 * sigma^2.
    """
    if len(dmrs) == 0:
        raise ValueError("no DM-RS pilots to estimate the channel from")
    n_sc, n_sym, n_rx = rx_grid.cells.shape
    all_sc = np.arange(n_sc)
    per_symbol = []
    residuals = []
    for l in dmrs.symbol_indices():
        sel = dmrs.symbols == l
        order = np.argsort(dmrs.subcarriers[sel])
        sc = dmrs.subcarriers[sel][order]
        p = dmrs.values[sel][order]
        ls = rx_grid.cells[sc, l, :] / p[:, None]  # (n_pilots, n_rx)
        per_symbol.append(_interp_linear(all_sc, sc, ls))
        if sc.size >= 3:
            residuals.append(ls[1:-1] - 0.5 * (ls[:-2] + ls[2:]))
    h_f = np.mean(per_symbol, axis=0)  # (n_sc, n_rx)
    if residuals:
        r = np.concatenate(residuals)
        noise_var = max(float(np.mean(np.abs(r) ** 2)) / 1.5, NOISE_VAR_FLOOR)
    else:
        noise_var = NOISE_VAR_FLOOR
    h = np.broadcast_to(h_f[:, None, :, None], (n_sc, n_sym, n_rx, 1))
    return ChannelEstimate(h, noise_var)


def estimate_cpe(rx_grid: ResourceGrid, ptrs: PilotSet, est: ChannelEstimate) -> CpeEstimate:
    """Per-symbol common phase ``arg(sum y * conj(h * p))`` over PT-RS REs and antennas.

    Symbols without PT-RS reuse the nearest preceding estimate (or the nearest
    following one if none precedes).
    """
    if len(ptrs) == 0:
        raise ValueError("no PT-RS pilots to estimate the common phase from")
    n_sym = rx_grid.n_symbols
    y = rx_grid.cells[ptrs.subcarriers, ptrs.symbols, :]  # (n_pilots, n_rx)
    h = est.h[ptrs.subcarriers, ptrs.symbols, :, 0]
    terms = (y * np.conj(h * ptrs.values[:, None])).sum(axis=1)
    acc = np.zeros(n_sym, dtype=complex)
    np.add.at(acc, ptrs.symbols, terms)
    count = np.bincount(ptrs.symbols, minlength=n_sym) * rx_grid.n_ports
    phi = np.angle(acc)
    phi[phi <= -np.pi] = np.pi
    have = count > 0
    idx = np.where(have, np.arange(n_sym), -1)
    prev = np.maximum.accumulate(idx)
    first = int(np.argmax(have))
    src = np.where(prev >= 0, prev, first)
    return CpeEstimate(phi=phi[src], confidence=np.where(have, count, 0))


def compensate_cpe(rx_grid: ResourceGrid, cpe: CpeEstimate) -> ResourceGrid:
    if cpe.phi.size != rx_grid.n_symbols:
        raise ValueError("CPE estimate does not cover every symbol of the grid")
    rot = np.exp(-1j * np.asarray(cpe.phi))[None, :, None]
    return ResourceGrid(rx_grid.cells * rot, rx_grid.roles)


def equalize_mmse(y: np.ndarray, h: np.ndarray, noise_var: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-RE MMSE: ``s = (H^H H + sigma^2 I)^-1 H^H y``.

    ``y`` is ``(..., n_rx)``, ``h`` is ``(..., n_rx, n_layers)``. Returns the
    equalized symbols ``(..., n_layers)`` and the post-equalization noise
    scaling ``sigma^2 * diag((H^H H + sigma^2 I)^-1)``.
    """
    y = np.asarray(y, dtype=complex)
    h = np.asarray(h, dtype=complex)
    if noise_var < 0:
        raise ValueError("noise variance must be non-negative")
    if not np.all(np.isfinite(h)):
        raise ValueError("channel matrix has non-finite entries")
    n_layers = h.shape[-1]
    if n_layers == 1:
        g = np.sum(np.abs(h[..., 0]) ** 2, axis=-1) + noise_var
        if noise_var == 0 and np.any(g == 0):
            raise ValueError("singular system: zero channel with zero noise variance")
        s = np.sum(np.conj(h[..., 0]) * y, axis=-1) / g
        return s[..., None], (noise_var / g)[..., None]
    hh = np.conj(np.swapaxes(h, -1, -2))
    gram = hh @ h + noise_var * np.eye(n_layers)
    if noise_var == 0 and np.any(np.linalg.matrix_rank(gram) < n_layers):
        raise ValueError("singular system: rank-deficient channel with zero noise variance")
    s = np.linalg.solve(gram, (hh @ y[..., None]))[..., 0]
    inv_diag = np.real(np.diagonal(np.linalg.inv(gram), axis1=-2, axis2=-1))
    return s, noise_var * inv_diag


def dmrs_reference(cfg: CarrierConfig, dmrs: PilotSet, slot_index: int) -> np.ndarray:
    """Time-domain slot waveform carrying only the DM-RS."""
    cells = np.zeros((cfg.n_subcarriers, cfg.symbols_per_slot), dtype=complex)
    cells[dmrs.subcarriers, dmrs.symbols] = dmrs.values
    roles = np.full(cells.shape, Role.EMPTY, dtype=np.int8)
    return ofdm_modulate(ResourceGrid(cells, roles), cfg, first_slot=slot_index)[0]


@dataclass(eq=False)
class RxResult:
    bits: np.ndarray
    data_symbols: np.ndarray
    cpe: CpeEstimate | None
    timing_offset: int
    estimate: ChannelEstimate
    grid: ResourceGrid  # demodulated slot, after CPE correction when enabled


def recover_pdsch(
    rx_waveforms: np.ndarray,
    cfg: CarrierConfig,
    pdsch: PdschConfig,
    dmrs: PilotSet,
    ptrs: PilotSet,
    mode: str = WITH_CPE,
    genie: Genie = Genie(),
    slot_index: int = 0,
    max_timing_lag: int | None = None,
    window_advance: int | None = None,
) -> RxResult:
    """Receive one slot whose nominal start is sample 0 of ``rx_waveforms``."""
    if mode not in (WITH_CPE, WITHOUT_CPE):
        raise ValueError(f"mode must be {WITH_CPE!r} or {WITHOUT_CPE!r}")
    rx = np.asarray(rx_waveforms, dtype=complex)
    if rx.ndim == 1:
        rx = rx[None, :]
    slot_len = cfg.slot_length(slot_index)
    max_lag = cfg.long_cp if max_timing_lag is None else max_timing_lag
    advance = cfg.short_cp // 2 if window_advance is None else window_advance
    if rx.shape[-1] < slot_len + max_lag:
        rx = np.pad(rx, ((0, 0), (0, slot_len + max_lag - rx.shape[-1])))

    if genie.timing is not None:
        offset = int(genie.timing)
    else:
        offset = estimate_timing(rx[:, : slot_len + max_lag], dmrs_reference(cfg, dmrs, slot_index))

    roles = slot_roles(cfg, pdsch, dmrs, ptrs)
    grid = ofdm_demodulate(rx, cfg, offset, 1, slot_index, advance, roles)
    est = estimate_channel(grid, dmrs)
    if genie.noise_var is not None:
        est = replace(est, noise_var=float(genie.noise_var))

    cpe = None
    if mode == WITH_CPE:
        cpe = estimate_cpe(grid, ptrs, est)
        grid = compensate_cpe(grid, cpe)

    sc, sym = grid.data_positions()
    y = grid.cells[sc, sym, :]
    s_hat, _ = equalize_mmse(y, est.h[sc, sym], max(est.noise_var, NOISE_VAR_FLOOR))
    data = s_hat[:, 0]
    return RxResult(qam.qam_demodulate(data, pdsch.modulation), data, cpe, offset, est, grid)
