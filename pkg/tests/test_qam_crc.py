import itertools

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pnlink import qam
from pnlink.crc import CRC24A_POLY, CRC_LEN, attach_crc, check_crc, crc24a


@pytest.mark.parametrize("order,k,norm", [("QAM64", 6, 42), ("QAM256", 8, 170)])
def test_constellation_geometry(order, k, norm):
    pts = qam.constellation(order)
    assert pts.size == 2**k
    assert np.mean(np.abs(pts) ** 2) == pytest.approx(1.0)
    d = np.abs(pts[:, None] - pts[None, :])
    d[np.diag_indices_from(d)] = np.inf
    assert d.min() == pytest.approx(2 / np.sqrt(norm))
    assert len(set(np.round(pts, 12))) == pts.size


@pytest.mark.parametrize("order,k", [("QAM64", 6), ("QAM256", 8)])
def test_gray_neighbours_differ_in_one_bit(order, k):
    pts = qam.constellation(order)
    dmin = np.min(np.abs(np.diff(np.unique(np.round(pts.real, 12)))))
    for i, j in itertools.combinations(range(pts.size), 2):
        if abs(abs(pts[i] - pts[j]) - dmin) < 1e-9:
            assert bin(i ^ j).count("1") == 1


def test_nr_64qam_corner_points():
    s = 1 / np.sqrt(42)
    npt.assert_allclose(qam.qam_modulate([0, 0, 0, 0, 0, 0], "QAM64"), [3 * s + 3j * s])
    npt.assert_allclose(qam.qam_modulate([1, 1, 1, 1, 1, 1], "QAM64"), [-7 * s - 7j * s])
    npt.assert_allclose(qam.qam_modulate([0, 0, 1, 1, 0, 0], "QAM64"), [5 * s + 5j * s])
    npt.assert_allclose(qam.qam_modulate([0, 1, 1, 0, 1, 0], "QAM64"), [7 * s - 3j * s])


@settings(max_examples=50, deadline=None)
@given(order=st.sampled_from(["QAM64", "QAM256"]), n=st.integers(1, 200), seed=st.integers(0, 2**32 - 1))
def test_roundtrip(order, n, seed):
    k = qam.bits_per_symbol(order)
    bits = np.random.default_rng(seed).integers(0, 2, n * k, dtype=np.uint8)
    npt.assert_array_equal(qam.qam_demodulate(qam.qam_modulate(bits, order), order), bits)


def test_demodulation_is_nearest_point():
    rng = np.random.default_rng(3)
    pts = qam.constellation("QAM64")
    y = (rng.standard_normal(2000) + 1j * rng.standard_normal(2000)) * 0.8
    nearest = np.argmin(np.abs(y[:, None] - pts[None, :]), axis=1)
    expected = ((nearest[:, None] >> np.arange(5, -1, -1)) & 1).ravel()
    npt.assert_array_equal(qam.qam_demodulate(y, "QAM64"), expected)


def test_tie_goes_to_lower_level():
    s = 1 / np.sqrt(42)
    got = qam.qam_demodulate([2 * s + 2j * s], "QAM64")
    npt.assert_array_equal(qam.qam_modulate(got, "QAM64"), [1 * s + 1j * s])


def test_ragged_block_and_bad_order():
    with pytest.raises(ValueError, match="ragged"):
        qam.qam_modulate(np.zeros(7), "QAM64")
    with pytest.raises(ValueError):
        qam.normalize_order("QAM16")
    assert qam.normalize_order("256qam") == "QAM256"


def crc_bitwise(bits):
    reg = 0
    for b in bits:
        top = (reg >> (CRC_LEN - 1)) & 1
        reg = (reg << 1) & ((1 << CRC_LEN) - 1)
        if top ^ int(b):
            reg ^= CRC24A_POLY & ((1 << CRC_LEN) - 1)
    return np.array([(reg >> (CRC_LEN - 1 - i)) & 1 for i in range(CRC_LEN)], dtype=np.uint8)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=400))
def test_crc_matches_shift_register(bits):
    npt.assert_array_equal(crc24a(bits), crc_bitwise(bits))


def test_crc_of_codeword_is_zero():
    bits = np.random.default_rng(1).integers(0, 2, 1000)
    npt.assert_array_equal(crc24a(attach_crc(bits)), np.zeros(CRC_LEN))


def test_single_bit_flips_always_detected():
    rng = np.random.default_rng(11)
    cw = attach_crc(rng.integers(0, 2, 59202 - CRC_LEN))
    assert check_crc(cw)
    for pos in rng.choice(cw.size, 100, replace=False):
        bad = cw.copy()
        bad[pos] ^= 1
        assert not check_crc(bad)


def test_short_input_fails_check():
    assert not check_crc(np.zeros(10))
