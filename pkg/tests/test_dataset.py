import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wiid.dataset import (
    RECORD_DTYPE,
    Dataset,
    DatasetIOError,
    DatasetRecord,
    DatasetTruncatedError,
    DatasetVersionError,
    GenConfig,
    SirMode,
    add_awgn,
    combine_multi_label,
    derive_seed,
    generate_multi_label,
    generate_scenario,
    generate_single_label,
    labels_to_mask,
    load_dataset,
    manifest_path,
    mask_to_labels,
    read_header,
    record_components,
    save_dataset,
    split_train_val,
)
from wiid.signals import Technology, classes_of, measure_power, synthesize_burst


@pytest.fixture(scope="module")
def small_single():
    return generate_single_label(GenConfig(snapshots_per_class_snr=4, snr_grid=[0.0, 20.0], master_seed=3))


@pytest.fixture(scope="module")
def small_config():
    return GenConfig(snapshots_per_class_snr=4, snr_grid=[0.0, 20.0], multi_total=120, master_seed=3)


@pytest.fixture(scope="module")
def small_multi(small_single, small_config):
    return generate_multi_label(small_single, small_config)


def db(x):
    return 10 * math.log10(x)


# --------------------------------------------------------------------------
# AWGN

def test_awgn_infinite_snr_is_identity():
    x = synthesize_burst(4, "gfsk-br-h032", seed=2)
    assert np.array_equal(add_awgn(x, math.inf, seed=1), x)


def test_awgn_zero_db_noise_power():
    x = synthesize_burst(11, "dsss-1m-rect", seed=2)
    noise = add_awgn(x, 0.0, seed=5) - x
    assert abs(measure_power(noise) - 1.0) <= 0.05 * 3  # one snapshot: 128 samples, chi^2 spread
    assert np.array_equal(add_awgn(x, 0.0, seed=5), add_awgn(x, 0.0, seed=5))


@pytest.mark.parametrize("snr", [-20.0, -6.0, 0.0, 10.0, 20.0])
def test_awgn_calibration_aggregate(snr):
    x = synthesize_burst(13, "oqpsk-dsss-250k", seed=8)
    powers = [measure_power(add_awgn(x, snr, seed=s) - x) for s in range(100)]  # 12,800 samples
    assert np.mean(powers) == pytest.approx(10 ** (-snr / 10), rel=0.02)


def test_awgn_warns_on_non_unit_power():
    with pytest.warns(UserWarning, match="unit-power"):
        add_awgn(3 * np.ones(128, dtype=complex), 10.0, seed=0)


# --------------------------------------------------------------------------
# single-label generation

def test_single_label_counts(small_single):
    assert len(small_single) == 15 * 2 * 4
    assert all(len(r.labels) == 1 for r in small_single)
    assert small_single.label_matrix().sum(axis=0).tolist() == [8] * 15


def test_desk_count_formula():
    cfg = GenConfig(snapshots_per_class_snr=10, snr_grid=[0.0, 20.0])
    assert cfg.single_count == 300
    assert len(generate_single_label(cfg)) == 300


def test_paper_count_formulas():
    cfg = GenConfig()
    assert cfg.single_count == 225_225
    assert cfg.multi_total == 450_000
    assert cfg.per_interferer_count == 75_000


def test_single_label_records_are_unit_power_before_noise(small_single):
    hi = small_single.subset(np.flatnonzero(small_single.snr_db == 20.0))
    powers = np.mean(np.abs(hi.samples) ** 2, axis=1)
    assert np.all(np.abs(powers - 1.01) < 0.05)


def test_generation_is_deterministic_and_parallel_safe():
    cfg = GenConfig(snapshots_per_class_snr=2, snr_grid=[0.0, 20.0], master_seed=11)
    a = generate_single_label(cfg)
    b = generate_single_label(cfg)
    assert a.records.tobytes() == b.records.tobytes()
    other = generate_single_label(GenConfig(snapshots_per_class_snr=2, snr_grid=[0.0, 20.0], master_seed=12))
    assert a.checksum() != other.checksum()


@pytest.mark.parametrize("bad", [
    dict(snapshots_per_class_snr=0),
    dict(snr_grid=[]),
    dict(snr_grid=[0.0, 0.0]),
    dict(snr_grid=[10.0, 0.0]),
    dict(multi_total=7),
    dict(interferer_counts=[0, 1]),
    dict(train_fraction=1.0),
])
def test_invalid_config_rejected(bad):
    with pytest.raises(ValueError):
        GenConfig(**bad).validate()


def test_config_round_trips_through_dict():
    cfg = GenConfig(sir_mode=SirMode.LITERAL_ONE_OVER_N, master_seed=2**40)
    assert GenConfig.from_dict(cfg.to_dict()) == cfg


def test_derive_seed_separates_streams():
    seeds = {derive_seed(1, s, i) for s in range(4) for i in range(100)}
    assert len(seeds) == 400
    assert derive_seed(1, 0, 5) == derive_seed(1, 0, 5)


# --------------------------------------------------------------------------
# combining

def rec(cls, seed, snr=20.0):
    v = {0: "gfsk-br-h032", 3: "gfsk-le-h050", 10: "cck-11m-rc", 14: "oqpsk-dsss-250k"}[cls]
    return DatasetRecord(add_awgn(synthesize_burst(cls, v, seed), snr, seed + 1), frozenset({cls}), snr_db=snr)


def test_single_interferer_is_plain_sum():
    u, i = rec(3, 1), rec(10, 2)
    for mode in SirMode:
        out = combine_multi_label(u, [i], mode)
        assert np.allclose(out.snapshot, (u.snapshot + i.snapshot).astype(np.complex64))


def test_label_union_and_metadata():
    out = combine_multi_label(rec(3, 1), [rec(10, 2), rec(14, 3)], seed=77)
    assert out.labels == {3, 10, 14}
    assert out.utilized_class == 3
    assert out.num_interferers == 2
    assert out.seed == 77


def test_literal_mode_uses_one_over_n():
    u, a, b = rec(0, 1), rec(10, 2), rec(14, 3)
    out = combine_multi_label(u, [a, b], SirMode.LITERAL_ONE_OVER_N)
    ref = u.snapshot + 0.5 * (a.snapshot.astype(complex) + b.snapshot)
    assert np.allclose(out.snapshot, ref.astype(np.complex64))


def test_combine_rejections():
    with pytest.raises(ValueError, match="distinct"):
        combine_multi_label(rec(3, 1), [rec(3, 2)])
    with pytest.raises(ValueError):
        combine_multi_label(rec(3, 1), [])
    with pytest.raises(ValueError):
        combine_multi_label(rec(3, 1), [rec(0, s) for s in range(7)])
    pair = combine_multi_label(rec(3, 1), [rec(10, 2)])
    with pytest.raises(ValueError, match="single-label"):
        combine_multi_label(pair, [rec(14, 2)])


def test_four_interferer_sir_is_near_zero_db():
    u = rec(0, 5)
    ints = [rec(3, 6), rec(10, 7), rec(14, 8)]
    ints.append(DatasetRecord(add_awgn(synthesize_burst(7, "gfsk-br-h028", 9), 20.0, 10),
                              frozenset({7}), snr_db=20.0))
    mixed = combine_multi_label(u, ints).snapshot
    interference = mixed - u.snapshot.astype(np.complex64)
    assert abs(db(measure_power(u.snapshot) / measure_power(interference))) <= 1.0


def test_multi_label_counts_and_labels(small_multi, small_config):
    assert len(small_multi) == 120
    assert np.bincount(small_multi.num_interferers).tolist() == [0] + [20] * 6
    for r in small_multi:
        assert 2 <= len(r.labels) <= 7
        assert len(r.labels) == r.num_interferers + 1
        assert r.utilized_class in r.labels
        assert r.snr_db == 20.0


def test_multi_label_requires_twenty_db_pool(small_config):
    single = generate_single_label(GenConfig(snapshots_per_class_snr=1, snr_grid=[0.0]))
    with pytest.raises(ValueError, match="20 dB"):
        generate_multi_label(single, small_config)


def test_multi_label_is_deterministic(small_single, small_config, small_multi):
    again = generate_multi_label(small_single, small_config)
    assert again.records.tobytes() == small_multi.records.tobytes()


def test_record_components_rebuild_the_stored_snapshot(small_single, small_config, small_multi):
    for i in (0, 37, 119):
        u, interference = record_components(small_single, small_config, i)
        assert np.array_equal((u + interference).astype(np.complex64), small_multi.samples[i])


def test_sir_is_centered_on_zero_db():
    # a_N = 1/sqrt(N) fixes the expected interference power; the realized
    # power of a 128-sample sum still scatters around it by the cross terms
    cfg = GenConfig(snapshots_per_class_snr=20, snr_grid=[20.0], multi_total=600, master_seed=5)
    single = generate_single_label(cfg)
    sir = np.array([db(measure_power(u) / measure_power(i))
                    for u, i in (record_components(single, cfg, k) for k in range(cfg.multi_total))])
    assert abs(np.mean(sir)) < 0.1
    assert np.mean(np.abs(sir) > 1.0) < 0.01
    assert np.max(np.abs(sir)) < 1.5


# --------------------------------------------------------------------------
# scenarios

def test_same_technology_scenario(small_single):
    sc = generate_scenario(small_single, "BT_15_1", "BT_15_1", [1, 3], per_count=5, seed=1)
    bt = set(classes_of(Technology.BT_15_1))
    assert len(sc) == 10
    for r in sc:
        assert r.labels <= bt
    with pytest.raises(ValueError):
        generate_scenario(small_single, "WLAN_11BG", "WLAN_11BG", [3], per_count=1, seed=1)


def test_cross_technology_scenario(small_single):
    sc = generate_scenario(small_single, "ZB_15_4", "WLAN_11BG", [3], per_count=4, seed=1)
    for r in sc:
        assert r.utilized_class in (13, 14)
        assert r.labels - {r.utilized_class} == {10, 11, 12}


# --------------------------------------------------------------------------
# split

def test_split_ten_records_in_half():
    ds = Dataset(np.zeros(10, dtype=RECORD_DTYPE))
    ds.records["seed"] = np.arange(10)
    train, val = split_train_val(ds, 0.5, seed=0)
    assert (len(train), len(val)) == (5, 5)
    assert sorted(train.records["seed"].tolist() + val.records["seed"].tolist()) == list(range(10))


def test_split_is_stratified(small_multi):
    train, val = split_train_val(small_multi, 0.8, seed=2)
    assert len(train) == 96 and len(val) == 24
    assert np.bincount(val.num_interferers).tolist() == [0] + [4] * 6
    both = np.concatenate([train.records, val.records])
    assert sorted(r.tobytes() for r in both) == sorted(r.tobytes() for r in small_multi.records)


def test_split_rejects_degenerate_fraction(small_multi):
    for frac in (0.0, 1.0, 0.001):
        with pytest.raises(ValueError):
            split_train_val(small_multi, frac, seed=0)


# --------------------------------------------------------------------------
# labels and file format

@given(st.frozensets(st.integers(0, 14), min_size=1, max_size=7))
def test_label_mask_round_trip(labels):
    assert mask_to_labels(labels_to_mask(labels)) == labels


def test_label_mask_rejects_out_of_range():
    with pytest.raises(ValueError):
        labels_to_mask([15])


def test_record_layout_matches_file_format():
    assert RECORD_DTYPE.itemsize == 2 + 1 + 1 + 4 + 8 + 128 * 8


def test_save_load_round_trip(tmp_path, small_multi):
    path = tmp_path / "multi.wiid"
    save_dataset(small_multi, path)
    assert path.stat().st_size == 16 + 120 * 1040
    loaded = load_dataset(path)
    assert loaded.records.tobytes() == small_multi.records.tobytes()
    assert loaded.manifest == small_multi.manifest
    assert manifest_path(path).exists()
    assert [r.labels for r in loaded] == [r.labels for r in small_multi]


def test_empty_dataset_file(tmp_path):
    path = tmp_path / "empty.wiid"
    save_dataset(Dataset(), path)
    assert read_header(path) == (1, 0)
    assert len(load_dataset(path)) == 0


def test_corrupt_magic_is_a_version_error(tmp_path, small_multi):
    path = tmp_path / "bad.wiid"
    save_dataset(small_multi, path)
    raw = bytearray(path.read_bytes())
    raw[:4] = b"NOPE"
    path.write_bytes(bytes(raw))
    with pytest.raises(DatasetVersionError):
        load_dataset(path)
    raw[:4] = b"WIID"
    raw[4] = 9
    path.write_bytes(bytes(raw))
    with pytest.raises(DatasetVersionError, match="version"):
        load_dataset(path)


def test_truncated_file(tmp_path, small_multi):
    path = tmp_path / "short.wiid"
    save_dataset(small_multi, path)
    path.write_bytes(path.read_bytes()[:-1])
    with pytest.raises(DatasetTruncatedError):
        load_dataset(path)
    path.write_bytes(b"WI")
    with pytest.raises(DatasetTruncatedError):
        load_dataset(path)


def test_missing_file_is_an_io_error(tmp_path):
    with pytest.raises(DatasetIOError):
        load_dataset(tmp_path / "nope.wiid")
