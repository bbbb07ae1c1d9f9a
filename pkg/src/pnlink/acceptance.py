"""Built-in acceptance suite; ``sim check`` runs it.

Link-level criteria share one memoized run cache so scenarios that appear in
several criteria are simulated once.
"""

from __future__ import annotations

import math
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

import numpy as np

from . import phase_noise as pn
from .campaign import ScenarioConfig, result_row, run_link
from .grid import CarrierConfig, PdschConfig, ResourceGrid, slot_roles
from .metrics import LinkMetrics, evm_pct_to_db
from .receiver import ChannelEstimate, equalize_mmse, estimate_cpe
from .refsig import gen_dmrs, gen_ptrs
from .seeding import derive_seed, rng_for

ORDERING_SEEDS = 20
MODEL_SEEDS = 50
SNR_GRID = (0.0, 5.0, 10.0, 15.0, 20.0)


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.title}: {self.detail}"


class RunCache:
    def __init__(self) -> None:
        self._runs: dict[ScenarioConfig, LinkMetrics] = {}

    def get(self, sc: ScenarioConfig) -> LinkMetrics:
        if sc not in self._runs:
            self._runs[sc] = run_link(sc)
        return self._runs[sc]

    def mean(self, sc: ScenarioConfig, field: str, seeds: int) -> float:
        return math.fsum(getattr(self.get(replace(sc, master_seed=s)), field) for s in range(seeds)) / seeds

    def rows(self) -> list[dict]:
        return [result_row(sc, m) for sc, m in self._runs.items()]


BASE = ScenarioConfig(pn_model="A", modulation="QAM64", n_rx=2, snr_db=20.0, channel_profile="tdl3")


def c1_psd_exactness(cache: RunCache) -> CriterionResult:
    at_zero = {name: float(pn.psd_at(pn.PRESETS[name], 0.0)) for name in "ABC"}
    expected = {"A": -79.4, "B": -70.0, "C": 32.0}
    exact = all(at_zero[k] == expected[k] for k in expected)
    far = float(pn.psd_at(pn.PRESETS["A"], 1e15))
    limit = pn.PRESETS["A"].high_offset_limit_dbc_hz()
    ok = exact and abs(far - (-139.3)) <= 0.1 and abs(limit - (-139.3)) <= 0.1
    return CriterionResult(1, "PSD exactness", ok, f"psd(0)={at_zero}, psd_A(1e15 Hz)={far:.4f}, limit={limit:.4f}")


def c2_spectral_fidelity(cache: RunCache, n_traj: int = 200) -> CriterionResult:
    model = pn.PRESETS["A"]
    fs, n = CarrierConfig().sample_rate_hz, 1 << 16
    acc = np.zeros(n // 2 + 1)
    for t in range(n_traj):
        phi = pn.synthesize(model, fs, n, derive_seed(0, t, "psd_check")).samples
        acc += np.abs(np.fft.rfft(phi)) ** 2 / (fs * n)
    f = np.fft.rfftfreq(n, 1 / fs)
    band = (f >= 10e3) & (f <= 10e6)
    dev = 10 * np.log10(acc[band] / n_traj) - pn.psd_at(model, f[band])
    worst = float(np.max(np.abs(dev)))
    return CriterionResult(2, "Spectral fidelity", worst <= 2.0, f"max |periodogram - psd| = {worst:.3f} dB over {band.sum()} bins")


def c3_transparent_chain(cache: RunCache) -> CriterionResult:
    parts, ok = [], True
    for mod in ("QAM64", "QAM256"):
        sc = ScenarioConfig(pn_model="none", modulation=mod, snr_db="no-noise", channel_profile="flat", n_slots=4)
        m = cache.get(sc)
        ok &= m.ber == 0 and m.bler == 0 and m.evm_pct < 1e-8
        parts.append(f"{mod}: ber={m.ber} bler={m.bler} evm={m.evm_pct:.2e}%")
    return CriterionResult(3, "Transparent chain", bool(ok), "; ".join(parts))


def c4_evm_db_consistency(cache: RunCache) -> CriterionResult:
    for mod in ("QAM64", "QAM256"):
        for cpe in (True, False):
            for seed in range(ORDERING_SEEDS):
                cache.get(replace(BASE, modulation=mod, cpe_compensation=cpe, master_seed=seed))
    rows = cache.rows()
    worst = max(abs(r["evm_db"] - 20 * math.log10(r["evm_pct"] / 100)) for r in rows)
    anchor = evm_pct_to_db(7.4)
    ok = worst <= 1e-9 and abs(anchor - (-22.6)) <= 0.05
    return CriterionResult(4, "EVM %/dB consistency", ok, f"{len(rows)} rows, worst mismatch {worst:.1e} dB; 7.4% -> {anchor:.3f} dB")


def c5_cpe_exactness(cache: RunCache) -> CriterionResult:
    cfg = CarrierConfig()
    pdsch = PdschConfig("QAM64")
    label = derive_seed(0, 0, "cpe_check")
    dmrs, ptrs = gen_dmrs(cfg, 0, label, pdsch), gen_ptrs(cfg, 0, label, pdsch)
    rng = rng_for(label)
    n_sc, n_sym, n_rx = cfg.n_subcarriers, cfg.symbols_per_slot, 2
    h = (rng.standard_normal((n_sc, 1, n_rx)) + 1j * rng.standard_normal((n_sc, 1, n_rx))) / math.sqrt(2)
    x = np.exp(2j * np.pi * rng.random((n_sc, n_sym)))
    x[ptrs.subcarriers, ptrs.symbols] = ptrs.values
    y = h * x[:, :, None] * np.exp(1j * 0.3)
    roles = np.broadcast_to(slot_roles(cfg, pdsch, dmrs, ptrs)[:, :, None], y.shape)
    est = ChannelEstimate(np.broadcast_to(h[:, :, :, None], (n_sc, n_sym, n_rx, 1)), 0.0)
    cpe = estimate_cpe(ResourceGrid(y, roles), ptrs, est)
    err = float(np.max(np.abs(cpe.phi - 0.3)))
    return CriterionResult(5, "CPE estimator exactness", err <= 1e-9, f"max |phi - 0.3| = {err:.2e} rad")


def c6_mmse_properties(cache: RunCache) -> CriterionResult:
    rng = rng_for(derive_seed(0, 0, "mmse_check"))
    n_re, n_rx, n_layers = 1000, 4, 2
    h = rng.standard_normal((n_re, n_rx, n_layers)) + 1j * rng.standard_normal((n_re, n_rx, n_layers))
    y = rng.standard_normal((n_re, n_rx)) + 1j * rng.standard_normal((n_re, n_rx))
    s, _ = equalize_mmse(y, h, 0.0)
    zf = np.stack([np.linalg.lstsq(h[i], y[i], rcond=None)[0] for i in range(n_re)])
    zf_err = float(np.max(np.abs(s - zf)))
    h1 = h[:, :1, :1]
    sigma2 = 0.37
    s1, _ = equalize_mmse(y[:, :1], h1, sigma2)
    closed = np.conj(h1[:, 0, 0]) * y[:, 0] / (np.abs(h1[:, 0, 0]) ** 2 + sigma2)
    sh_err = float(np.max(np.abs(s1[:, 0] - closed)))
    ok = zf_err <= 1e-10 and sh_err <= 1e-12
    return CriterionResult(6, "MMSE properties", ok, f"ZF-limit error {zf_err:.1e}, scalar shrinkage error {sh_err:.1e}")


def c7_evm_ordering(cache: RunCache) -> CriterionResult:
    parts, ok = [], True
    for mod in ("QAM64", "QAM256"):
        sc = replace(BASE, modulation=mod)
        w = cache.mean(replace(sc, cpe_compensation=True), "evm_pct", ORDERING_SEEDS)
        wo = cache.mean(replace(sc, cpe_compensation=False), "evm_pct", ORDERING_SEEDS)
        gain = (wo - w) / wo
        ok &= w < wo
        if mod == "QAM64":
            ok &= gain >= 0.15
        parts.append(f"{mod}: {wo:.3f}% -> {w:.3f}% ({100 * gain:.1f}% better)")
    return CriterionResult(7, "EVM ordering with CPE correction", bool(ok), "; ".join(parts) + " [64QAM needs >= 15%]")


def c8_ber_ordering(cache: RunCache) -> CriterionResult:
    w = cache.mean(replace(BASE, cpe_compensation=True), "ber", ORDERING_SEEDS)
    wo = cache.mean(replace(BASE, cpe_compensation=False), "ber", ORDERING_SEEDS)
    return CriterionResult(8, "BER ordering with CPE correction", w < wo, f"64QAM BER {wo:.3e} -> {w:.3e}")


def c9_model_direction(cache: RunCache) -> CriterionResult:
    sc = replace(BASE, snr_db=10.0)
    b = cache.mean(replace(sc, pn_model="B", fc_ghz=None), "bler", MODEL_SEEDS)
    c = cache.mean(replace(sc, pn_model="C", fc_ghz=None), "bler", MODEL_SEEDS)
    return CriterionResult(9, "Model comparison direction", c <= b, f"BLER C={c:.3f}, B={b:.3f} at 10 dB")


def c10_snr_monotonicity(cache: RunCache) -> CriterionResult:
    evms = [cache.mean(replace(BASE, snr_db=s), "evm_pct", ORDERING_SEEDS) for s in SNR_GRID]
    ok = all(a > b for a, b in zip(evms, evms[1:]))
    return CriterionResult(10, "SNR monotonicity", ok, ", ".join(f"{s:g} dB: {e:.2f}%" for s, e in zip(SNR_GRID, evms)))


def c11_antenna_direction(cache: RunCache) -> CriterionResult:
    sc = replace(BASE, snr_db=10.0)
    two = cache.mean(replace(sc, n_rx=2), "bler", ORDERING_SEEDS)
    four = cache.mean(replace(sc, n_rx=4), "bler", ORDERING_SEEDS)
    ber2 = cache.mean(replace(sc, n_rx=2), "ber", ORDERING_SEEDS)
    ber4 = cache.mean(replace(sc, n_rx=4), "ber", ORDERING_SEEDS)
    return CriterionResult(
        11, "Antenna diversity direction", four < two,
        f"BLER n_rx=4 {four:.3f} vs n_rx=2 {two:.3f} (BER {ber4:.2e} vs {ber2:.2e})",
    )


SWEEP_YAML = """\
scenario:
  pn_model: A
  n_slots: 3
sweep:
  seeds: 2
  axes:
    snr_db: [5.0, 15.0]
    cpe_compensation: [true, false]
"""


def c12_determinism(cache: RunCache) -> CriterionResult:
    from .cli import main

    with tempfile.TemporaryDirectory() as tmp:
        cfg = Path(tmp, "sweep.yaml")
        cfg.write_text(SWEEP_YAML)
        outs = []
        for i, jobs in enumerate((1, 2)):
            out = Path(tmp, f"run{i}.csv")
            code = main(["sweep", "--config", str(cfg), "--out", str(out), "--jobs", str(jobs)])
            if code != 0:
                return CriterionResult(12, "Determinism", False, f"sweep exited with {code}")
            outs.append(out.read_bytes())
    same = outs[0] == outs[1]
    return CriterionResult(12, "Determinism", same, f"{len(outs[0])}-byte tables {'identical' if same else 'differ'} (jobs 1 vs 2)")


CRITERIA: dict[int, Callable[[RunCache], CriterionResult]] = {
    1: c1_psd_exactness,
    2: c2_spectral_fidelity,
    3: c3_transparent_chain,
    4: c4_evm_db_consistency,
    5: c5_cpe_exactness,
    6: c6_mmse_properties,
    7: c7_evm_ordering,
    8: c8_ber_ordering,
    9: c9_model_direction,
    10: c10_snr_monotonicity,
    11: c11_antenna_direction,
    12: c12_determinism,
}


def run_criteria(numbers=None, cache: RunCache | None = None, echo=print) -> list[CriterionResult]:
    cache = cache or RunCache()
    results = []
    for n in numbers or sorted(CRITERIA):
        res = CRITERIA[n](cache)
        if echo is not None:
            echo(res.line())
        results.append(res)
    return results
