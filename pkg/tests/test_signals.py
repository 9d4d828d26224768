import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wiid.features import dft_128
from wiid.signals import (
    NUM_CLASSES,
    SAMPLE_RATE,
    SNAPSHOT_LEN,
    Technology,
    all_variants,
    class_catalog,
    class_spec,
    frequency_shift,
    measure_power,
    synthesize_burst,
    zigbee_chip_table,
)

BIN_HZ = SAMPLE_RATE / SNAPSHOT_LEN
FREQS = (np.arange(SNAPSHOT_LEN) - SNAPSHOT_LEN // 2) * BIN_HZ


def periodogram(x):
    return np.abs(dft_128(x)) ** 2


def test_catalog_has_fifteen_classes():
    assert len(class_catalog()) == 15 == NUM_CLASSES


def test_catalog_counts_by_technology():
    techs = [s.technology for s in class_catalog()]
    counts = tuple(techs.count(t) for t in (Technology.BT_15_1, Technology.WLAN_11BG, Technology.ZB_15_4))
    assert counts == (10, 3, 2)


def test_catalog_has_nineteen_variants():
    assert len(all_variants()) == 19
    assert len({v.name for v in all_variants()}) == 19


def test_catalog_layout():
    cat = class_catalog()
    assert [s.class_id for s in cat] == list(range(15))
    assert all(s.technology is Technology.BT_15_1 for s in cat[:10])
    assert all(s.technology is Technology.WLAN_11BG for s in cat[10:13])
    assert all(s.technology is Technology.ZB_15_4 for s in cat[13:])
    bt = [s.center_offset for s in cat[:10]]
    assert np.allclose(np.diff(bt), 1e6)
    assert np.allclose([s.center_offset for s in cat[10:13]], [-5e6, 0, 5e6])
    assert np.allclose([s.center_offset for s in cat[13:]], [-2.5e6, 2.5e6])
    for s in cat:
        assert abs(s.center_offset) <= 5e6
        assert s.occupied_bandwidth > 0
    assert cat == class_catalog()


def test_zigbee_chip_table_rows_are_distinct():
    table = zigbee_chip_table()
    assert table.shape == (16, 32)
    assert len({row.tobytes() for row in table}) == 16


@pytest.mark.parametrize("cls", range(15))
def test_burst_length_power_and_finiteness(cls):
    for v in class_spec(cls).variant_set:
        x = synthesize_burst(cls, v, seed=11)
        assert x.shape == (128,)
        assert np.all(np.isfinite(x))
        assert measure_power(x) == pytest.approx(1.0, abs=1e-9)


def test_bt_burst_centroid_at_channel_offset():
    spec = class_spec(5)
    assert spec.center_offset == pytest.approx(0.5e6)
    x = synthesize_burst(5, "gfsk-br-h032", seed=1)
    p = periodogram(x)
    centroid = np.sum(FREQS * p) / np.sum(p)
    assert abs(centroid - 0.5e6) <= 200e3


def test_burst_is_deterministic():
    a = synthesize_burst(13, "oqpsk-dsss-250k", seed=123)
    b = synthesize_burst(13, "oqpsk-dsss-250k", seed=123)
    assert a.tobytes() == b.tobytes()


def test_distinct_seeds_give_distinct_bursts():
    rng = np.random.default_rng(0)
    for _ in range(100):
        cls = int(rng.integers(15))
        variants = class_spec(cls).variant_set
        v = variants[int(rng.integers(len(variants)))]
        s1, s2 = (int(s) for s in rng.integers(0, 2**63, 2))
        assert not np.array_equal(synthesize_burst(cls, v, s1), synthesize_burst(cls, v, s2))


def test_rejects_foreign_variant():
    with pytest.raises(ValueError, match="variant"):
        synthesize_burst(0, "cck-11m-rect", seed=0)
    with pytest.raises(ValueError, match="does not belong"):
        synthesize_burst(12, class_spec(0).variant_set[0], seed=0)
    with pytest.raises(ValueError):
        synthesize_burst(15, "gfsk-br-h032", seed=0)


@pytest.mark.parametrize("cls", [c for c in range(15) if class_spec(c).technology is not Technology.WLAN_11BG])
def test_narrowband_energy_in_channel(cls):
    spec = class_spec(cls)
    inband = np.abs(FREQS - spec.center_offset) <= spec.occupied_bandwidth / 2
    for v in spec.variant_set:
        for seed in range(5):
            p = periodogram(synthesize_burst(cls, v, seed))
            assert p[inband].sum() / p.sum() >= 0.9


def test_wlan_classes_are_spectrally_tilted():
    # the -5 and +5 MHz channels put more power on their own side of the band
    for cls, side in ((10, FREQS < 0), (12, FREQS > 0)):
        p = np.mean([periodogram(synthesize_burst(cls, "dsss-1m-rect", s)) for s in range(20)], axis=0)
        assert p[side].sum() > 2 * p[~side].sum()


# frequency_shift / measure_power

def test_shift_by_zero_is_identity():
    x = np.random.default_rng(1).standard_normal(128) + 0j
    assert np.array_equal(frequency_shift(x, 0.0), x)


def test_shift_moves_constant_to_bin():
    y = frequency_shift(np.ones(128, dtype=complex), 1e6)
    peak = int(np.argmax(np.abs(dft_128(y))))
    assert FREQS[peak] == pytest.approx(1e6, abs=BIN_HZ / 2)


@settings(max_examples=50, deadline=None)
@given(st.floats(-5e6, 5e6), st.integers(0, 2**32 - 1))
def test_shift_preserves_power(offset, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(128) + 1j * rng.standard_normal(128)
    assert measure_power(frequency_shift(x, offset)) == pytest.approx(measure_power(x), rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(-5e6, 5e6), st.floats(-5e6, 5e6))
def test_shift_composes_additively(a, b):
    x = synthesize_burst(3, "gfsk-br-h032", seed=9)
    lhs = frequency_shift(frequency_shift(x, a), b)
    assert np.max(np.abs(lhs - frequency_shift(x, a + b))) < 1e-9


def test_measure_power_trivial_cases():
    assert measure_power(np.zeros(128, dtype=complex)) == 0.0
    assert measure_power(np.ones(128, dtype=complex)) == 1.0
