"""Tapped-delay-line Rayleigh channel and AWGN."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import CarrierConfig
from .seeding import SeedLabel, rng_for

NO_NOISE = "no-noise"


@dataclass(frozen=True)
class TdlProfile:
    name: str
    tap_delays_s: tuple[float, ...]
    tap_powers_db: tuple[float, ...]
    doppler_hz: float = 0.0

    def __post_init__(self) -> None:
        d = tuple(float(v) for v in self.tap_delays_s)
        p = tuple(float(v) for v in self.tap_powers_db)
        object.__setattr__(self, "tap_delays_s", d)
        object.__setattr__(self, "tap_powers_db", p)
        if len(d) != len(p) or not d:
            raise ValueError("tap delays and powers must be non-empty and equal length")
        if any(v < 0 for v in d) or any(b < a for a, b in zip(d, d[1:])):
            raise ValueError("tap delays must be non-negative and non-decreasing")
        if abs(self.linear_powers.sum() - 1.0) > 1e-9:
            raise ValueError("linear tap powers must sum to 1")
        if self.doppler_hz != 0:
            raise ValueError("only static (per-drop) fading is supported")

    @classmethod
    def normalized(cls, name: str, delays_s, powers_db, doppler_hz: float = 0.0) -> "TdlProfile":
        lin = 10.0 ** (np.asarray(powers_db, dtype=float) / 10.0)
        return cls(name, tuple(delays_s), tuple(10.0 * np.log10(lin / lin.sum())), doppler_hz)

    @property
    def linear_powers(self) -> np.ndarray:
        return 10.0 ** (np.asarray(self.tap_powers_db) / 10.0)

    def delays_in_samples(self, sample_rate_hz: float) -> np.ndarray:
        return np.rint(np.asarray(self.tap_delays_s) * sample_rate_hz).astype(np.int64)


PROFILES: dict[str, TdlProfile] = {
    "flat": TdlProfile("flat", (0.0,), (0.0,)),
    "tdl3": TdlProfile.normalized("tdl3", (0.0, 50e-9, 120e-9), (0.0, -3.0, -6.0)),
}


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    taps: np.ndarray  # (n_taps, n_tx, n_rx)
    profile: TdlProfile
    n_tx: int
    n_rx: int
    seed_label: SeedLabel | None = None

    @classmethod
    def identity(cls, n_antennas: int = 1) -> "ChannelRealization":
        taps = np.eye(n_antennas, dtype=complex)[None]
        return cls(taps, PROFILES["flat"], n_antennas, n_antennas)


def tdl_realize(profile: TdlProfile, n_tx: int, n_rx: int, seed_label: SeedLabel) -> ChannelRealization:
    """Independent Rayleigh taps per antenna pair, variance equal to the tap power."""
    if n_tx < 1 or n_rx < 1:
        raise ValueError("need at least one transmit and one receive antenna")
    rng = rng_for(seed_label)
    shape = (len(profile.tap_delays_s), n_tx, n_rx)
    g = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    g *= np.sqrt(profile.linear_powers / 2.0)[:, None, None]
    return ChannelRealization(g, profile, n_tx, n_rx, seed_label)


def apply_channel(tx_waveforms: np.ndarray, realization: ChannelRealization, cfg: CarrierConfig) -> np.ndarray:
    """Convolve ``(n_tx, n)`` waveforms with the taps; output is ``(n_rx, n + max_delay)``."""
    x = np.asarray(tx_waveforms, dtype=complex)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[0] != realization.n_tx:
        raise ValueError(f"{x.shape[0]} transmit ports but the channel has n_tx={realization.n_tx}")
    delays = realization.profile.delays_in_samples(cfg.sample_rate_hz)
    n = x.shape[1]
    out = np.zeros((realization.n_rx, n + int(delays.max())), dtype=complex)
    for d, g in zip(delays, realization.taps):
        out[:, d : d + n] += g.T @ x
    return out


def add_awgn(
    waveforms: np.ndarray,
    snr_db: float | str | None,
    signal_power_ref: float,
    seed_label: SeedLabel,
) -> tuple[np.ndarray, float]:
    """Add circular Gaussian noise of variance ``signal_power_ref / 10**(snr_db/10)``.

    Returns the noisy waveforms and the per-sample noise variance used.
    """
    x = np.asarray(waveforms, dtype=complex)
    if snr_db is None or snr_db == NO_NOISE:
        return x.copy(), 0.0
    if not signal_power_ref > 0:
        raise ValueError("signal power reference must be positive")
    snr = float(snr_db)
    if not np.isfinite(snr):
        raise ValueError("SNR must be finite or the no-noise sentinel")
    noise_var = signal_power_ref / 10.0 ** (snr / 10.0)
    rng = rng_for(seed_label)
    noise = rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape)
    return x + np.sqrt(noise_var / 2.0) * noise, float(noise_var)


def mean_power(x: np.ndarray) -> float:
    return float(np.mean(np.abs(x) ** 2))
