"""End-to-end link runs and parameter sweeps.

Seeding: every random stream of a run is ``derive_seed(master_seed, trial,
purpose)`` with the slot index as ``trial`` for per-slot draws (payload,
fading) and 0 for per-run draws (phase noise, AWGN, pilots). Nothing depends
on ``cpe_compensation``, SNR, modulation or antenna count, so runs that differ
only in those fields see the same impairment realizations (paired comparison).
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any

import numpy as np

from . import qam
from .channel import NO_NOISE, PROFILES, ChannelRealization, TdlProfile, add_awgn, apply_channel, mean_power, tdl_realize
from .crc import check_crc
from .grid import BitBlock, CarrierConfig, PdschConfig, build_slot_grid, n_data_res, precode
from .metrics import LinkMetrics, MetricsAccumulator
from .ofdm import ofdm_modulate
from .phase_noise import PRESETS, apply_phase_noise, get_model, synthesize
from .receiver import WITH_CPE, WITHOUT_CPE, Genie, recover_pdsch
from .refsig import gen_dmrs, gen_ptrs
from .seeding import derive_seed, rng_for

MAX_SWEEP_POINTS = 100_000
GENIE_FLAGS = frozenset({"timing", "noise_var"})
NO_CHANNEL = "none"


class ScenarioError(RuntimeError):
    """A stage failed while running a scenario; the message names the scenario."""


@dataclass(frozen=True)
class ScenarioConfig:
    pn_model: str = "A"
    fc_ghz: float | None = None  # None: the model's native carrier
    modulation: str = "QAM64"
    n_tx: int = 1
    n_rx: int = 2
    snr_db: float | str = 20.0
    cpe_compensation: bool = True
    channel_profile: str = "tdl3"
    n_frames: int = 2
    master_seed: int = 0
    genie_flags: frozenset = frozenset()
    n_slots: int | None = None  # overrides n_frames when set (short runs)

    def __post_init__(self) -> None:
        pn = str(self.pn_model)
        pn = pn.upper() if pn.lower() != "none" else "none"
        if pn != "none" and pn not in PRESETS:
            raise ValueError(f"unknown pn_model {self.pn_model!r}")
        object.__setattr__(self, "pn_model", pn)
        object.__setattr__(self, "modulation", qam.normalize_order(self.modulation))
        if self.fc_ghz is None:
            object.__setattr__(self, "fc_ghz", _native_fc_ghz(pn))
        object.__setattr__(self, "fc_ghz", float(self.fc_ghz))
        if not self.fc_ghz > 0:
            raise ValueError("fc_ghz must be positive")
        snr = self.snr_db
        if isinstance(snr, str) and snr.lower() in (NO_NOISE, "none", "inf"):
            snr = NO_NOISE
        else:
            snr = float(snr)
            if not math.isfinite(snr):
                raise ValueError("snr_db must be finite or 'no-noise'")
        object.__setattr__(self, "snr_db", snr)
        object.__setattr__(self, "cpe_compensation", _as_bool(self.cpe_compensation))
        if self.n_tx < 1 or self.n_rx < 1:
            raise ValueError("antenna counts must be at least 1")
        if self.n_frames < 1:
            raise ValueError("n_frames must be at least 1")
        if self.n_slots is not None and self.n_slots < 1:
            raise ValueError("n_slots must be at least 1")
        flags = frozenset(self.genie_flags)
        if flags - GENIE_FLAGS:
            raise ValueError(f"unknown genie flags {sorted(flags - GENIE_FLAGS)}")
        object.__setattr__(self, "genie_flags", flags)

    def describe(self) -> dict[str, Any]:
        d = asdict(self)
        d["genie_flags"] = sorted(self.genie_flags)
        return d


def _native_fc_ghz(pn_model: str) -> float:
    return PRESETS[pn_model].carrier_freq_hz / 1e9 if pn_model != "none" else 30.0


def _as_bool(v: Any) -> bool:
    if isinstance(v, str):
        if v.lower() in ("1", "true", "yes", "on", "with_cpe"):
            return True
        if v.lower() in ("0", "false", "no", "off", "without_cpe"):
            return False
        raise ValueError(f"not a boolean: {v!r}")
    return bool(v)


def resolve_profile(name: str, custom: dict[str, TdlProfile] | None = None) -> TdlProfile | None:
    if name == NO_CHANNEL:
        return None
    if custom and name in custom:
        return custom[name]
    try:
        return PROFILES[name]
    except KeyError:
        raise ValueError(f"unknown channel profile {name!r}") from None


def run_link(
    sc: ScenarioConfig,
    profiles: dict[str, TdlProfile] | None = None,
    capture: dict[str, Any] | None = None,
) -> LinkMetrics:
    """Transmit, impair and receive ``sc``'s slots; returns metrics over the whole run.

    If ``capture`` is a dict it receives slot 0's received grid and CPE estimate.
    """
    try:
        return _run_link(sc, profiles, capture)
    except Exception as exc:
        raise ScenarioError(f"scenario {sc.describe()} failed: {exc}") from exc


def _run_link(sc: ScenarioConfig, profiles: dict[str, TdlProfile] | None, capture: dict[str, Any] | None) -> LinkMetrics:
    cfg = CarrierConfig()
    pdsch = PdschConfig(modulation=sc.modulation)
    n_slots = sc.n_slots or sc.n_frames * cfg.slots_per_frame
    seed = sc.master_seed
    pilot_label = derive_seed(seed, 0, "pilots")
    profile = resolve_profile(sc.channel_profile, profiles)

    starts = cfg.slot_starts(n_slots)
    total = int(starts[-1])
    tx = np.zeros((sc.n_tx, total), dtype=complex)
    slots = []
    for s in range(n_slots):
        dmrs = gen_dmrs(cfg, s, pilot_label, pdsch)
        ptrs = gen_ptrs(cfg, s, pilot_label, pdsch)
        n_bits = n_data_res(cfg, pdsch, dmrs, ptrs) * qam.bits_per_symbol(pdsch.modulation)
        block = BitBlock.random(n_bits, rng_for(derive_seed(seed, s, "payload")))
        grid = build_slot_grid(block, cfg, pdsch, dmrs, ptrs)
        tx[:, starts[s] : starts[s + 1]] = ofdm_modulate(precode(grid, sc.n_tx), cfg, first_slot=s)
        sc_idx, sym_idx = grid.data_positions()
        slots.append((dmrs, ptrs, block, grid.cells[sc_idx, sym_idx, 0]))

    if sc.pn_model != "none":
        model = get_model(sc.pn_model).at_carrier(sc.fc_ghz * 1e9)
        traj = synthesize(model, cfg.sample_rate_hz, total + total % 2, derive_seed(seed, 0, "phase_noise"))
        tx = apply_phase_noise(tx, traj, cfg.sample_rate_hz)

    max_delay = 0 if profile is None else int(profile.delays_in_samples(cfg.sample_rate_hz).max())
    rx = np.zeros((sc.n_rx, total + max_delay), dtype=complex)
    for s in range(n_slots):
        seg = tx[:, starts[s] : starts[s + 1]]
        if profile is None:
            real = ChannelRealization(np.ones((1, sc.n_tx, sc.n_rx), dtype=complex), PROFILES["flat"], sc.n_tx, sc.n_rx)
        else:
            real = tdl_realize(profile, sc.n_tx, sc.n_rx, derive_seed(seed, s, "fading"))
        out = apply_channel(seg, real, cfg)
        rx[:, starts[s] : starts[s] + out.shape[1]] += out

    power = mean_power(rx)
    rx, noise_var = add_awgn(rx, sc.snr_db, power, derive_seed(seed, 0, "awgn"))

    genie = Genie(
        timing=0 if "timing" in sc.genie_flags else None,
        noise_var=noise_var if "noise_var" in sc.genie_flags else None,
    )
    mode = WITH_CPE if sc.cpe_compensation else WITHOUT_CPE
    max_lag = cfg.long_cp
    rx = np.pad(rx, ((0, 0), (0, cfg.slot_length(0) + max_lag)))
    acc = MetricsAccumulator()
    for s, (dmrs, ptrs, block, tx_syms) in enumerate(slots):
        window = rx[:, starts[s] : starts[s] + cfg.slot_length(s) + max_lag]
        res = recover_pdsch(window, cfg, pdsch, dmrs, ptrs, mode, genie, slot_index=s, max_timing_lag=max_lag)
        acc.add_slot(tx_syms, res.data_symbols, block.bits, res.bits, check_crc(res.bits))
        if capture is not None and s == 0:
            capture.update(grid=res.grid, cpe=res.cpe, timing_offset=res.timing_offset)
    return acc.result(sc.describe())


@dataclass(frozen=True)
class SweepConfig:
    base: ScenarioConfig = ScenarioConfig()
    axes: dict[str, tuple] = field(default_factory=dict)
    seeds: int = 1
    output_path: str | None = None
    profiles: dict[str, TdlProfile] = field(default_factory=dict)

    def __post_init__(self) -> None:
        names = {f.name for f in fields(ScenarioConfig)}
        unknown = set(self.axes) - names
        if unknown:
            raise ValueError(f"unknown sweep axes {sorted(unknown)}")
        if "master_seed" in self.axes:
            raise ValueError("master_seed is driven by 'seeds', not an axis")
        object.__setattr__(self, "axes", {k: tuple(v) for k, v in self.axes.items()})
        if any(len(v) == 0 for v in self.axes.values()):
            raise ValueError("sweep axes must be non-empty")
        if self.seeds < 1:
            raise ValueError("seeds must be at least 1")
        if self.n_points > MAX_SWEEP_POINTS:
            raise ValueError(f"sweep has {self.n_points} points, limit is {MAX_SWEEP_POINTS}")

    @property
    def n_points(self) -> int:
        return math.prod(len(v) for v in self.axes.values())

    def points(self) -> list[ScenarioConfig]:
        keys = list(self.axes)
        extra = {}
        # a base carrier equal to the base model's native one follows the swept model
        if "pn_model" in keys and "fc_ghz" not in keys and self.base.fc_ghz == _native_fc_ghz(self.base.pn_model):
            extra["fc_ghz"] = None
        return [replace(self.base, **extra, **dict(zip(keys, combo))) for combo in itertools.product(*self.axes.values())]

    def scenarios(self) -> list[ScenarioConfig]:
        """Every (point, seed) scenario in output order: points outer, seeds inner."""
        return [replace(p, master_seed=self.base.master_seed + s) for p in self.points() for s in range(self.seeds)]


RESULT_COLUMNS = (
    "scenario_id", "pn_model", "fc_ghz", "modulation", "n_tx", "n_rx", "snr_db",
    "cpe_comp", "seed", "evm_pct", "evm_db", "ber", "bler", "n_bits", "n_blocks",
)


def scenario_id(sc: ScenarioConfig) -> str:
    d = sc.describe()
    d.pop("master_seed")
    return hashlib.sha1(json.dumps(d, sort_keys=True).encode()).hexdigest()[:12]


def result_row(sc: ScenarioConfig, m: LinkMetrics | None) -> dict[str, Any]:
    row = {
        "scenario_id": scenario_id(sc),
        "pn_model": sc.pn_model,
        "fc_ghz": sc.fc_ghz,
        "modulation": sc.modulation,
        "n_tx": sc.n_tx,
        "n_rx": sc.n_rx,
        "snr_db": sc.snr_db,
        "cpe_comp": int(sc.cpe_compensation),
        "seed": sc.master_seed,
    }
    if m is None:
        row.update(evm_pct=math.nan, evm_db=math.nan, ber=math.nan, bler=math.nan, n_bits=0, n_blocks=0)
    else:
        row.update(evm_pct=m.evm_pct, evm_db=m.evm_db, ber=m.ber, bler=m.bler, n_bits=m.n_bits, n_blocks=m.n_blocks)
    return row


def _run_one(args: tuple[ScenarioConfig, dict[str, TdlProfile]]) -> tuple[dict[str, Any], str | None]:
    sc, profiles = args
    try:
        return result_row(sc, run_link(sc, profiles)), None
    except ScenarioError as exc:
        return result_row(sc, None), str(exc)


def run_sweep(sw: SweepConfig, jobs: int = 1) -> tuple[list[dict[str, Any]], list[str]]:
    """One row per (point, seed) in a fixed order; failing scenarios become NaN rows."""
    tasks = [(sc, sw.profiles) for sc in sw.scenarios()]
    if jobs > 1 and len(tasks) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]
    rows = [r for r, _ in results]
    errors = [e for _, e in results if e is not None]
    return rows, errors
