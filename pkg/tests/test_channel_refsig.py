import numpy as np
import numpy.testing as npt
import pytest

from pnlink.channel import (
    NO_NOISE,
    PROFILES,
    ChannelRealization,
    TdlProfile,
    add_awgn,
    apply_channel,
    mean_power,
    tdl_realize,
)
from pnlink.grid import CarrierConfig, PdschConfig, ResourceGrid, Role
from pnlink.ofdm import ofdm_demodulate, ofdm_modulate
from pnlink.refsig import gen_dmrs, gen_ptrs, ptrs_symbols

CFG = CarrierConfig()


class TestPilots:
    def test_dmrs_layout(self):
        d = gen_dmrs(CFG, 0, 3)
        assert len(d) == 396
        assert set(d.symbols.tolist()) == {2}
        assert np.all(d.subcarriers % 2 == 0)
        npt.assert_allclose(np.abs(d.values), 1.0)
        assert set(np.round(d.values * np.sqrt(2), 12)) <= {1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j}

    def test_ptrs_layout(self):
        p = gen_ptrs(CFG, 0, 3)
        assert len(p) == 33 * 13
        assert 2 not in p.symbols
        assert set(p.subcarriers.tolist()) == set(range(0, 792, 24))
        # one value per subcarrier, repeated over the slot
        for k in np.unique(p.subcarriers):
            assert np.unique(p.values[p.subcarriers == k]).size == 1

    def test_no_overlap(self):
        assert not gen_dmrs(CFG, 0, 3).positions() & gen_ptrs(CFG, 0, 3).positions()

    def test_time_density(self):
        npt.assert_array_equal(ptrs_symbols(CFG, PdschConfig(ptrs_time_density=2)), [0, 3, 5, 7, 9, 11, 13])
        npt.assert_array_equal(ptrs_symbols(CFG, PdschConfig(ptrs_time_density=4)), [0, 3, 7, 11])

    def test_sequences_are_reproducible_and_distinct(self):
        npt.assert_array_equal(gen_dmrs(CFG, 4, 9).values, gen_dmrs(CFG, 4, 9).values)
        assert not np.array_equal(gen_dmrs(CFG, 4, 9).values, gen_dmrs(CFG, 5, 9).values)
        assert not np.array_equal(gen_dmrs(CFG, 4, 9).values, gen_dmrs(CFG, 4, 10).values)

    def test_negative_slot(self):
        with pytest.raises(ValueError):
            gen_ptrs(CFG, -1, 0)


class TestProfiles:
    def test_tdl3(self):
        p = PROFILES["tdl3"]
        assert p.linear_powers.sum() == pytest.approx(1.0)
        npt.assert_allclose(p.linear_powers / p.linear_powers[0], 10 ** (-np.array([0, 3, 6]) / 10))
        npt.assert_array_equal(p.delays_in_samples(CFG.sample_rate_hz), [0, 3, 7])

    def test_validation(self):
        with pytest.raises(ValueError):
            TdlProfile("x", (0.0, 1e-9), (0.0,))
        with pytest.raises(ValueError):
            TdlProfile("x", (0.0,), (3.0,))
        with pytest.raises(ValueError):
            TdlProfile.normalized("x", (1e-9, 0.0), (0.0, 0.0))
        with pytest.raises(ValueError):
            TdlProfile("x", (0.0,), (0.0,), doppler_hz=10.0)


def test_tap_power_moments():
    p = PROFILES["tdl3"]
    taps = np.stack([tdl_realize(p, 2, 2, s).taps for s in range(3000)])
    power = np.mean(np.abs(taps) ** 2, axis=(0, 2, 3))
    npt.assert_allclose(power, p.linear_powers, rtol=0.06)
    # zero-mean circular: E[g^2] ~ 0
    assert abs(np.mean(taps**2)) < 0.02


def test_identity_channel_passes_through():
    x = np.random.default_rng(0).standard_normal((1, 500)) + 0j
    npt.assert_array_equal(apply_channel(x, ChannelRealization.identity(), CFG), x)


def test_two_tap_channel_in_frequency_domain():
    """After CP removal each subcarrier sees H(k) = sum_d g_d exp(-j 2 pi k d / N)."""
    prof = TdlProfile.normalized("two", (0.0, 5 / CFG.sample_rate_hz), (0.0, -2.0))
    real = tdl_realize(prof, 1, 1, 42)
    rng = np.random.default_rng(1)
    cells = np.exp(2j * np.pi * rng.random((792, 14, 1)))
    grid = ResourceGrid(cells, np.full((792, 14), Role.DATA, dtype=np.int8))
    y = apply_channel(ofdm_modulate(grid, CFG), real, CFG)
    out = ofdm_demodulate(y, CFG).cells
    k = np.arange(792) - 396
    h = sum(g[0, 0] * np.exp(-2j * np.pi * k * d / CFG.nfft) for g, d in zip(real.taps, [0, 5]))
    npt.assert_allclose(out[:, :, 0], h[:, None] * cells[:, :, 0], atol=1e-12)


def test_channel_port_mismatch():
    with pytest.raises(ValueError):
        apply_channel(np.zeros((2, 10)), tdl_realize(PROFILES["flat"], 1, 2, 0), CFG)


class TestAwgn:
    def test_measured_snr(self):
        x = np.exp(2j * np.pi * np.random.default_rng(0).random((2, 200_000)))
        y, var = add_awgn(x, 10.0, mean_power(x), 5)
        assert var == pytest.approx(0.1)
        assert mean_power(y - x) == pytest.approx(0.1, rel=0.01)
        assert abs(np.mean((y - x) ** 2)) < 2e-3

    def test_no_noise(self):
        x = np.ones(10, dtype=complex)
        y, var = add_awgn(x, NO_NOISE, 1.0, 0)
        assert var == 0.0
        npt.assert_array_equal(y, x)
        assert y is not x

    def test_reproducible(self):
        x = np.zeros(100, dtype=complex)
        npt.assert_array_equal(add_awgn(x, 0, 1.0, 3)[0], add_awgn(x, 0, 1.0, 3)[0])

    @pytest.mark.parametrize("snr,ref", [(float("nan"), 1.0), (10.0, 0.0)])
    def test_rejects_bad_inputs(self, snr, ref):
        with pytest.raises(ValueError):
            add_awgn(np.ones(4), snr, ref, 0)
