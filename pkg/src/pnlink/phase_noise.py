"""Oscillator phase-noise PSD models and time-domain phase synthesis.

The PSD is a multi-pole/zero rational shape evaluated in the dB domain::

    L(f) = PSD0 + 10 log10( prod_n (1 + (f/fz_n)**az_n) / prod_m (1 + (f/fp_m)**ap_m) )

and treated as a two-sided density of the phase process (rad^2/Hz), so that
``var(phi) = integral over (-fs/2, fs/2) of 10**(L(f)/10) df``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import trapezoid

from .seeding import SeedLabel, rng_for

MIN_SYNTH_SAMPLES = 256


@dataclass(frozen=True)
class PhaseNoiseModel:
    name: str
    carrier_freq_hz: float
    psd0_dbc_hz: float
    zero_freqs_hz: tuple[float, ...]
    zero_exps: tuple[float, ...]
    pole_freqs_hz: tuple[float, ...]
    pole_exps: tuple[float, ...]

    def __post_init__(self) -> None:
        for attr in ("zero_freqs_hz", "zero_exps", "pole_freqs_hz", "pole_exps"):
            object.__setattr__(self, attr, tuple(float(v) for v in getattr(self, attr)))
        if len(self.zero_freqs_hz) != len(self.zero_exps) or not self.zero_freqs_hz:
            raise ValueError("zero frequencies and exponents must be non-empty and equal length")
        if len(self.pole_freqs_hz) != len(self.pole_exps) or not self.pole_freqs_hz:
            raise ValueError("pole frequencies and exponents must be non-empty and equal length")
        values = self.zero_freqs_hz + self.zero_exps + self.pole_freqs_hz + self.pole_exps
        if any(not np.isfinite(v) or v <= 0 for v in values):
            raise ValueError("all pole/zero frequencies and exponents must be positive")
        if not self.carrier_freq_hz > 0:
            raise ValueError("carrier frequency must be positive")

    def at_carrier(self, carrier_freq_hz: float) -> "PhaseNoiseModel":
        """Same oscillator multiplied up to another carrier (+20 log10 of the ratio)."""
        shift = 20.0 * np.log10(carrier_freq_hz / self.carrier_freq_hz)
        return replace(self, carrier_freq_hz=float(carrier_freq_hz), psd0_dbc_hz=self.psd0_dbc_hz + shift)

    def high_offset_limit_dbc_hz(self) -> float:
        """Asymptote of the PSD for f -> inf; only finite when the exponent sums match."""
        if not np.isclose(sum(self.zero_exps), sum(self.pole_exps)):
            raise ValueError("PSD has no finite high-offset limit for unequal exponent sums")
        log_p = sum(a * np.log10(f) for f, a in zip(self.pole_freqs_hz, self.pole_exps))
        log_z = sum(a * np.log10(f) for f, a in zip(self.zero_freqs_hz, self.zero_exps))
        return float(self.psd0_dbc_hz + 10.0 * (log_p - log_z))


PRESETS: dict[str, PhaseNoiseModel] = {
    "A": PhaseNoiseModel(
        name="A",
        carrier_freq_hz=30e9,
        psd0_dbc_hz=-79.4,
        zero_freqs_hz=(1.8e6, 2.2e6, 40e6),
        zero_exps=(2, 2, 2),
        pole_freqs_hz=(0.1e6, 0.2e6, 8e6),
        pole_exps=(2, 2, 2),
    ),
    "B": PhaseNoiseModel(
        name="B",
        carrier_freq_hz=60e9,
        psd0_dbc_hz=-70.0,
        zero_freqs_hz=(0.02e6, 6e6, 10e6),
        zero_exps=(2, 2, 2),
        pole_freqs_hz=(0.005e6, 0.4e6, 0.6e6),
        pole_exps=(2, 2, 2),
    ),
    # Printed values kept verbatim, including PSD0 = +32 dBc/Hz.
    "C": PhaseNoiseModel(
        name="C",
        carrier_freq_hz=29.55e9,
        psd0_dbc_hz=32.0,
        zero_freqs_hz=(0.003e6, 0.55e6, 280e6),
        zero_exps=(2.37, 2.7, 2.53),
        pole_freqs_hz=(1e6, 1.6e6, 30e6),
        pole_exps=(3.3, 3.3, 1),
    ),
}


def get_model(name: str) -> PhaseNoiseModel:
    try:
        return PRESETS[name.upper()]
    except KeyError:
        raise ValueError(f"unknown phase-noise model {name!r}; expected one of {sorted(PRESETS)}") from None


def psd_at(model: PhaseNoiseModel, offset_hz):
    """PSD in dBc/Hz at ``offset_hz`` (scalar or array, must be >= 0)."""
    f = np.asarray(offset_hz, dtype=float)
    if np.any(f < 0) or np.any(np.isnan(f)):
        raise ValueError("frequency offsets must be non-negative")
    # log1p on x = (f/f0)**a keeps f = 0 exactly at PSD0 and avoids overflow far out
    acc = np.zeros_like(f)
    for f0, a in zip(model.zero_freqs_hz, model.zero_exps):
        acc += _log10_1p_pow(f / f0, a)
    for f0, a in zip(model.pole_freqs_hz, model.pole_exps):
        acc -= _log10_1p_pow(f / f0, a)
    out = model.psd0_dbc_hz + 10.0 * acc
    return float(out) if out.ndim == 0 else out


def _log10_1p_pow(ratio: np.ndarray, exponent: float) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        log_x = exponent * np.log10(ratio)
        # log10(1 + 10**y) = y + log10(1 + 10**-y), stable for large y
        return np.where(log_x > 0, log_x + np.log10(1.0 + 10.0 ** -np.abs(log_x)), np.log10(1.0 + 10.0 ** np.minimum(log_x, 0)))


@dataclass(frozen=True, eq=False)
class PhaseTrajectory:
    samples: np.ndarray
    sample_rate_hz: float
    seed_label: SeedLabel

    def __len__(self) -> int:
        return len(self.samples)


def synthesize(
    model: PhaseNoiseModel,
    sample_rate_hz: float,
    n_samples: int,
    seed_label: SeedLabel,
) -> PhaseTrajectory:
    """Draw a real phase sequence whose two-sided PSD is ``psd_at(model, |f|)``.

    Bins 1..n/2-1 get independent circular Gaussian coefficients scaled by
    sqrt(S(f_k) * df); the DC and Nyquist bins are zero and the negative half
    is the conjugate mirror, so the inverse transform is real.
    """
    if n_samples < MIN_SYNTH_SAMPLES or n_samples % 2:
        raise ValueError(
            f"n_samples must be an even count >= {MIN_SYNTH_SAMPLES} for spectral shaping, got {n_samples}"
        )
    if not sample_rate_hz > 0:
        raise ValueError("sample rate must be positive")
    rng = rng_for(seed_label)
    df = sample_rate_hz / n_samples
    k = np.arange(1, n_samples // 2)
    s_lin = 10.0 ** (psd_at(model, k * df) / 10.0)
    coeff = rng.standard_normal(k.size) + 1j * rng.standard_normal(k.size)
    half = np.zeros(n_samples // 2 + 1, dtype=complex)
    half[1:-1] = coeff * np.sqrt(s_lin * df / 2.0)
    phi = np.fft.irfft(half, n=n_samples) * n_samples
    return PhaseTrajectory(samples=phi, sample_rate_hz=float(sample_rate_hz), seed_label=seed_label)


def apply_phase_noise(samples: np.ndarray, traj: PhaseTrajectory, sample_rate_hz: float | None = None) -> np.ndarray:
    """Rotate ``samples`` (last axis is time) by ``exp(j*phi[n])``."""
    x = np.asarray(samples)
    n = x.shape[-1]
    if len(traj) < n:
        raise ValueError(f"phase trajectory shorter than waveform ({len(traj)} < {n})")
    if sample_rate_hz is not None and not np.isclose(sample_rate_hz, traj.sample_rate_hz):
        raise ValueError("phase trajectory and waveform sample rates differ")
    return x * np.exp(1j * traj.samples[:n])


def psd_table(model: PhaseNoiseModel, fmin_hz: float, fmax_hz: float, points: int) -> np.ndarray:
    """Log-spaced ``(offset_hz, psd_dbc_hz)`` rows."""
    if not 0 < fmin_hz < fmax_hz or points < 2:
        raise ValueError("need 0 < fmin < fmax and at least 2 points")
    f = np.logspace(np.log10(fmin_hz), np.log10(fmax_hz), points)
    return np.column_stack([f, psd_at(model, f)])


def phase_variance(model: PhaseNoiseModel, sample_rate_hz: float, n_points: int = 1 << 16) -> float:
    """Phase variance (rad^2) captured within +-fs/2 by a trapezoid on a log grid."""
    f = np.concatenate([[0.0], np.logspace(0, np.log10(sample_rate_hz / 2), n_points)])
    return float(2.0 * trapezoid(10.0 ** (psd_at(model, f) / 10.0), f))
