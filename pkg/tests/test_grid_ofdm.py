import numpy as np
import numpy.testing as npt
import pytest

from pnlink import qam
from pnlink.grid import BitBlock, CarrierConfig, PdschConfig, ResourceGrid, Role, build_slot_grid, n_data_res, precode
from pnlink.ofdm import ofdm_demodulate, ofdm_modulate, waveform_length
from pnlink.refsig import gen_dmrs, gen_ptrs

CFG = CarrierConfig()


def slot_grid(mod="QAM64", slot=0, seed=0):
    pdsch = PdschConfig(mod)
    dmrs, ptrs = gen_dmrs(CFG, slot, 5, pdsch), gen_ptrs(CFG, slot, 5, pdsch)
    n = n_data_res(CFG, pdsch, dmrs, ptrs) * qam.bits_per_symbol(mod)
    return build_slot_grid(BitBlock.random(n, np.random.default_rng(seed)), CFG, pdsch, dmrs, ptrs)


def test_numerology():
    assert CFG.sample_rate_hz == 61.44e6
    assert (CFG.mu, CFG.short_cp, CFG.long_cp, CFG.n_subcarriers) == (2, 72, 104, 792)
    assert CFG.slots_per_frame == 40
    assert [CFG.slot_length(s) for s in range(4)] == [15376, 15344, 15376, 15344]
    # 4 slots are 1 ms
    assert waveform_length(CFG, 4) == 61440
    assert waveform_length(CFG, 40) == 614400


def test_invalid_carriers():
    with pytest.raises(ValueError):
        CarrierConfig(scs_hz=45e3)
    with pytest.raises(ValueError):
        CarrierConfig(n_size_grid=100)
    with pytest.raises(ValueError):
        PdschConfig(n_prb=0).prbs(CFG)


def test_resource_counts():
    g = slot_grid()
    counts = g.role_counts()
    assert counts[Role.DMRS] == 396
    assert counts[Role.PTRS] == 429
    assert counts[Role.DATA] == 9867
    assert counts[Role.EMPTY] == 792 * 14 - 396 - 429 - 9867


def test_payload_must_fill_slot():
    pdsch = PdschConfig("QAM64")
    dmrs, ptrs = gen_dmrs(CFG, 0, 1, pdsch), gen_ptrs(CFG, 0, 1, pdsch)
    with pytest.raises(ValueError, match="exactly"):
        build_slot_grid(BitBlock.random(59202 - 6, np.random.default_rng(0)), CFG, pdsch, dmrs, ptrs)


def test_data_symbols_carry_payload():
    g = slot_grid("QAM256", seed=4)
    sc, sym = g.data_positions()
    bits = qam.qam_demodulate(g.cells[sc, sym, 0], "QAM256")
    assert bits.size == 9867 * 8
    assert BitBlock(bits).bits.size == bits.size  # the CRC checks out


def test_csv_rows():
    rows = list(slot_grid().to_csv_rows())
    assert len(rows) == 792 * 14
    assert rows[0][:3] == (0, 0, "PTRS")


def idft_symbol(cells_col):
    """Explicit sum over subcarriers for one symbol body."""
    n = np.arange(CFG.nfft)
    k = np.arange(CFG.n_subcarriers) - CFG.n_subcarriers // 2
    return (cells_col[:, None] * np.exp(2j * np.pi * k[:, None] * n[None, :] / CFG.nfft)).sum(0) / np.sqrt(CFG.nfft)


def test_modulation_matches_explicit_sum():
    g = slot_grid()
    x = ofdm_modulate(g, CFG)[0]
    body0 = x[104 : 104 + 1024]
    npt.assert_allclose(body0, idft_symbol(g.cells[:, 0, 0]), atol=1e-12)
    start1 = 104 + 1024 + 72
    npt.assert_allclose(x[start1 : start1 + 1024], idft_symbol(g.cells[:, 1, 0]), atol=1e-12)


def test_cyclic_prefix_is_copy_of_tail():
    x = ofdm_modulate(slot_grid(), CFG)[0]
    npt.assert_array_equal(x[:104], x[1024 : 1024 + 104])


@pytest.mark.parametrize("slot", [0, 1])
@pytest.mark.parametrize("advance", [0, 36, 72])
def test_roundtrip(slot, advance):
    g = slot_grid(slot=slot)
    x = ofdm_modulate(g, CFG, first_slot=slot)
    assert x.shape == (1, CFG.slot_length(slot))
    back = ofdm_demodulate(x, CFG, first_slot=slot, window_advance=advance, roles=g.roles)
    npt.assert_allclose(back.cells, g.cells, atol=1e-12)


def test_energy_is_preserved():
    g = slot_grid()
    x = ofdm_modulate(g, CFG)[0]
    cps = np.array(CFG.cp_lengths)
    body_energy = np.sum(np.abs(x) ** 2) - sum(
        np.sum(np.abs(x[s : s + c]) ** 2) for s, c in zip(np.cumsum(np.r_[0, cps[:-1] + 1024]), cps)
    )
    assert body_energy == pytest.approx(np.sum(np.abs(g.cells) ** 2))


def test_demodulation_errors():
    x = ofdm_modulate(slot_grid(), CFG)
    with pytest.raises(ValueError, match="insufficient"):
        ofdm_demodulate(x[:, :-1], CFG)
    with pytest.raises(ValueError):
        ofdm_demodulate(x, CFG, window_advance=73)
    with pytest.raises(ValueError):
        ofdm_demodulate(np.zeros((1, 0)), CFG)


def test_multi_slot_grid():
    g1, g2 = slot_grid(slot=0), slot_grid(slot=1, seed=1)
    both = ResourceGrid(np.concatenate([g1.cells, g2.cells], 1), np.concatenate([g1.roles, g2.roles], 1))
    x = ofdm_modulate(both, CFG)
    npt.assert_allclose(x[:, 15376:], ofdm_modulate(g2, CFG, first_slot=1), atol=1e-12)
    npt.assert_allclose(ofdm_demodulate(x, CFG, n_slots=2).cells, both.cells, atol=1e-12)


def test_precoding_splits_power():
    g = slot_grid()
    p = precode(g, 2)
    assert p.n_ports == 2
    npt.assert_allclose(np.sum(np.abs(p.cells) ** 2), np.sum(np.abs(g.cells) ** 2))
    npt.assert_allclose(p.cells[..., 0], p.cells[..., 1])
