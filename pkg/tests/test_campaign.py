import math
from dataclasses import replace

import numpy as np
import pytest

from pnlink import campaign
from pnlink.campaign import (
    MAX_SWEEP_POINTS,
    RESULT_COLUMNS,
    ScenarioConfig,
    ScenarioError,
    SweepConfig,
    run_link,
    run_sweep,
    scenario_id,
)
from pnlink.seeding import derive_seed, rng_for, sub_label


class TestSeeding:
    def test_stable(self):
        assert derive_seed(3, 1, "awgn") == derive_seed(3, 1, "awgn")
        assert 0 <= derive_seed(3, 1, "awgn") < 2**64

    def test_purposes_differ(self):
        assert derive_seed(0, 1, "awgn") != derive_seed(0, 1, "fading")

    def test_no_collisions(self):
        purposes = ["payload", "fading", "awgn", "phase_noise"]
        labels = {derive_seed(m, t, p) for m in range(5) for t in range(500) for p in purposes}
        assert len(labels) == 10_000

    def test_streams_are_independent(self):
        a = rng_for(derive_seed(0, 0, "awgn")).standard_normal(20000)
        b = rng_for(derive_seed(0, 0, "fading")).standard_normal(20000)
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.03

    def test_label_types(self):
        np.testing.assert_array_equal(rng_for("abc").random(3), rng_for("abc").random(3))
        assert sub_label(1, "x") != sub_label("1", "x")
        with pytest.raises(TypeError):
            rng_for(True)
        with pytest.raises(ValueError):
            rng_for(-1)


class TestScenarioConfig:
    @pytest.mark.parametrize("pn,fc", [("A", 30.0), ("B", 60.0), ("C", 29.55), ("none", 30.0)])
    def test_native_carrier(self, pn, fc):
        assert ScenarioConfig(pn_model=pn).fc_ghz == pytest.approx(fc)

    def test_explicit_carrier_wins(self):
        assert ScenarioConfig(pn_model="B", fc_ghz=28).fc_ghz == 28.0

    def test_normalization(self):
        sc = ScenarioConfig(pn_model="a", modulation="256QAM", snr_db="No-Noise", cpe_compensation="false")
        assert (sc.pn_model, sc.modulation, sc.snr_db, sc.cpe_compensation) == ("A", "QAM256", "no-noise", False)

    @pytest.mark.parametrize(
        "kw",
        [
            {"pn_model": "D"},
            {"modulation": "QPSK"},
            {"n_rx": 0},
            {"n_frames": 0},
            {"snr_db": float("inf")},
            {"genie_flags": {"channel"}},
            {"fc_ghz": -1},
            {"cpe_compensation": "maybe"},
        ],
    )
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            ScenarioConfig(**kw)


SHORT = ScenarioConfig(n_slots=4)


def test_transparent_chain():
    for mod in ("QAM64", "QAM256"):
        m = run_link(ScenarioConfig(pn_model="none", modulation=mod, snr_db="no-noise", channel_profile="flat", n_slots=3))
        assert m.ber == 0 and m.bler == 0 and m.evm_pct < 1e-8
        assert m.n_bits == 3 * 9867 * (6 if mod == "QAM64" else 8)


def test_run_is_deterministic():
    assert run_link(SHORT) == run_link(SHORT)
    assert run_link(SHORT) != run_link(replace(SHORT, master_seed=1))


def test_frame_is_forty_slots():
    assert ScenarioConfig().n_frames == 2
    m = run_link(ScenarioConfig(pn_model="none", snr_db="no-noise", channel_profile="none", n_frames=1))
    assert m.n_blocks == 40


def test_two_transmit_antennas():
    m = run_link(ScenarioConfig(pn_model="none", snr_db="no-noise", n_tx=2, n_rx=2, n_slots=2))
    assert m.ber == 0


def test_paired_realizations():
    """With and without CPE correction see identical impairments: on a phase-noise
    free link the two receivers differ only by the estimated (near-zero) rotation."""
    sc = ScenarioConfig(pn_model="none", snr_db=30.0, n_slots=4)
    on, off = run_link(sc), run_link(replace(sc, cpe_compensation=False))
    assert on.evm_pct == pytest.approx(off.evm_pct, rel=0.05)


def test_cpe_helps_without_noise():
    sc = ScenarioConfig(pn_model="A", snr_db="no-noise", n_slots=8)
    assert run_link(sc).evm_pct < run_link(replace(sc, cpe_compensation=False)).evm_pct


def test_snr_monotonicity_short():
    evm = []
    for snr in (0.0, 5.0, 10.0, 15.0, 20.0):
        evm.append(np.mean([run_link(replace(SHORT, snr_db=snr, master_seed=s)).evm_pct for s in range(3)]))
    assert all(a > b for a, b in zip(evm, evm[1:]))


def test_errors_carry_scenario_context(monkeypatch):
    def boom(*a, **k):
        raise FloatingPointError("kaboom")

    monkeypatch.setattr(campaign, "recover_pdsch", boom)
    with pytest.raises(ScenarioError, match="kaboom") as info:
        run_link(SHORT)
    assert "'pn_model': 'A'" in str(info.value)


def test_unknown_profile():
    with pytest.raises(ScenarioError):
        run_link(replace(SHORT, channel_profile="cdl-x"))


class TestSweep:
    def test_row_count(self):
        sw = SweepConfig(replace(SHORT, n_slots=2), {"snr_db": [5, 10], "modulation": ["QAM64", "QAM256"]}, seeds=1)
        rows, errors = run_sweep(sw)
        assert len(rows) == 4 and not errors
        assert {(r["snr_db"], r["modulation"]) for r in rows} == {(5.0, "QAM64"), (5.0, "QAM256"), (10.0, "QAM64"), (10.0, "QAM256")}
        assert all(tuple(r) == RESULT_COLUMNS for r in rows)

    def test_seeds_inner(self):
        sw = SweepConfig(replace(SHORT, n_slots=1), {"snr_db": [5, 10]}, seeds=3)
        assert [(s.snr_db, s.master_seed) for s in sw.scenarios()] == [(5.0, 0), (5.0, 1), (5.0, 2), (10.0, 0), (10.0, 1), (10.0, 2)]

    def test_parallel_matches_serial(self):
        sw = SweepConfig(replace(SHORT, n_slots=1), {"cpe_compensation": [True, False]}, seeds=2)
        assert run_sweep(sw, jobs=2) == run_sweep(sw, jobs=1)

    def test_rerun_is_identical(self):
        sw = SweepConfig(replace(SHORT, n_slots=1), {"snr_db": [0, 20]}, seeds=1)
        assert run_sweep(sw)[0] == run_sweep(sw)[0]

    def test_failures_become_rows(self, monkeypatch):
        real = campaign._run_link

        def flaky(sc, profiles, capture):
            if sc.snr_db == 5.0:
                raise np.linalg.LinAlgError("singular")
            return real(sc, profiles, capture)

        monkeypatch.setattr(campaign, "_run_link", flaky)
        rows, errors = run_sweep(SweepConfig(replace(SHORT, n_slots=1), {"snr_db": [5, 10]}))
        assert len(rows) == 2 and len(errors) == 1
        assert math.isnan(rows[0]["evm_pct"]) and rows[0]["n_blocks"] == 0
        assert not math.isnan(rows[1]["evm_pct"])

    def test_validation(self):
        with pytest.raises(ValueError):
            SweepConfig(SHORT, {"antennas": [1]})
        with pytest.raises(ValueError):
            SweepConfig(SHORT, {"master_seed": [1, 2]})
        with pytest.raises(ValueError):
            SweepConfig(SHORT, {"snr_db": []})
        with pytest.raises(ValueError):
            SweepConfig(SHORT, seeds=0)
        big = {"snr_db": list(range(400)), "n_rx": list(range(1, 300))}
        assert 400 * 299 > MAX_SWEEP_POINTS
        with pytest.raises(ValueError, match="limit"):
            SweepConfig(SHORT, big)

    def test_model_axis_uses_native_carriers(self):
        sw = SweepConfig(ScenarioConfig(), {"pn_model": ["A", "B", "C"]})
        assert [p.fc_ghz for p in sw.points()] == [30.0, 60.0, 29.55]
        pinned = SweepConfig(ScenarioConfig(fc_ghz=28.0), {"pn_model": ["A", "B"]})
        assert [p.fc_ghz for p in pinned.points()] == [28.0, 28.0]

    def test_scenario_id_ignores_seed(self):
        assert scenario_id(SHORT) == scenario_id(replace(SHORT, master_seed=9))
        assert scenario_id(SHORT) != scenario_id(replace(SHORT, snr_db=5))
