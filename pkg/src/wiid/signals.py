"""Complex-baseband burst synthesis for the 15 classes of one 10 MHz sensing band.

Waveforms are built at 110 Msample/s (an integer multiple of every chip and
symbol rate used here), mixed to their channel offset, then low-pass
filtered and decimated by 11 to the 10 Msample/s sensing rate, the way a
band-limited receiver front end would see them.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy import signal as sps
from scipy.special import erfc

SAMPLE_RATE = 10e6
SNAPSHOT_LEN = 128
NUM_CLASSES = 15

SYNTH_RATE = 110e6
DECIMATION = 11

PULSE_SPAN = 4  # shaping filters are truncated to this many symbol/chip periods


class Technology(str, Enum):
    BT_15_1 = "BT_15_1"
    WLAN_11BG = "WLAN_11BG"
    ZB_15_4 = "ZB_15_4"

    @property
    def label(self) -> str:
        return {"BT_15_1": "IEEE 802.15.1", "WLAN_11BG": "IEEE 802.11 b/g",
                "ZB_15_4": "IEEE 802.15.4"}[self.value]


class Scheme(str, Enum):
    GFSK = "GFSK"
    DBPSK_BARKER = "DBPSK_BARKER"
    DQPSK_BARKER = "DQPSK_BARKER"
    CCK_5_5 = "CCK_5_5"
    CCK_11 = "CCK_11"
    OQPSK_DSSS = "OQPSK_DSSS"


@dataclass(frozen=True)
class ModulationVariant:
    """One modulation type / rate / pulse-shaping combination.

    ``symbol_rate`` is the rate of modulation symbols (GFSK symbols, Barker
    symbols, CCK code words, 802.15.4 4-bit symbols). ``chip_rate`` is set for
    the spread-spectrum schemes. ``shaping`` names the chip pulse for 802.11b
    (``rect``, ``rc`` or ``gauss``) and is ``half-sine`` for O-QPSK.
    """

    name: str
    scheme: Scheme
    symbol_rate: float
    chip_rate: float | None = None
    bt: float | None = None
    mod_index: float | None = None
    shaping: str = "rect"
    rolloff: float | None = None


@dataclass(frozen=True)
class ClassSpec:
    class_id: int
    technology: Technology
    center_offset: float
    occupied_bandwidth: float
    variant_set: tuple[ModulationVariant, ...]

    def variant(self, name: str) -> ModulationVariant:
        for v in self.variant_set:
            if v.name == name:
                return v
        raise ValueError(
            f"variant {name!r} is not defined for class {self.class_id} "
            f"({self.technology.value}); choose from {[v.name for v in self.variant_set]}"
        )


def _gfsk(name, h, bt=0.5):
    return ModulationVariant(name, Scheme.GFSK, 1e6, bt=bt, mod_index=h)


def _dsss(scheme, rate_tag, shaping):
    symbol_rate = 1.375e6 if scheme in (Scheme.CCK_5_5, Scheme.CCK_11) else 1e6
    return ModulationVariant(
        f"{rate_tag}-{shaping}", scheme, symbol_rate, chip_rate=11e6,
        shaping=shaping,
        bt=0.5 if shaping == "gauss" else None,
        rolloff=0.5 if shaping == "rc" else None,
    )


# Reconstructed variant list (19 in total): the BR GFSK index range corners
# and nominal value plus the LE 1M index range, the four 802.11b rates under
# three chip pulse shapes, and the single 2.4 GHz O-QPSK PHY of 802.15.4.
BT_VARIANTS = (
    _gfsk("gfsk-br-h028", 0.28),
    _gfsk("gfsk-br-h032", 0.32),
    _gfsk("gfsk-br-h035", 0.35),
    _gfsk("gfsk-le-h045", 0.45),
    _gfsk("gfsk-le-h050", 0.50),
    _gfsk("gfsk-le-h055", 0.55),
)
WLAN_VARIANTS = tuple(
    _dsss(scheme, tag, shaping)
    for scheme, tag in (
        (Scheme.DBPSK_BARKER, "dsss-1m"),
        (Scheme.DQPSK_BARKER, "dsss-2m"),
        (Scheme.CCK_5_5, "cck-5m5"),
        (Scheme.CCK_11, "cck-11m"),
    )
    for shaping in ("rect", "rc", "gauss")
)
ZB_VARIANTS = (
    ModulationVariant("oqpsk-dsss-250k", Scheme.OQPSK_DSSS, 62.5e3,
                      chip_rate=2e6, shaping="half-sine"),
)

BT_OFFSETS = tuple((k - 4.5) * 1e6 for k in range(10))
WLAN_OFFSETS = (-5e6, 0.0, 5e6)
ZB_OFFSETS = (-2.5e6, 2.5e6)


@lru_cache(maxsize=None)
def _catalog() -> tuple[ClassSpec, ...]:
    specs = []
    for off in BT_OFFSETS:
        specs.append(ClassSpec(len(specs), Technology.BT_15_1, off, 1e6, BT_VARIANTS))
    for off in WLAN_OFFSETS:
        specs.append(ClassSpec(len(specs), Technology.WLAN_11BG, off, 22e6, WLAN_VARIANTS))
    for off in ZB_OFFSETS:
        specs.append(ClassSpec(len(specs), Technology.ZB_15_4, off, 2e6, ZB_VARIANTS))
    return tuple(specs)


def class_catalog() -> list[ClassSpec]:
    """Return the 15 class specs, ordered by class id."""
    return list(_catalog())


def class_spec(class_id: int) -> ClassSpec:
    if not 0 <= int(class_id) < NUM_CLASSES:
        raise ValueError(f"class id must be in [0, {NUM_CLASSES - 1}], got {class_id}")
    return _catalog()[int(class_id)]


def all_variants() -> list[ModulationVariant]:
    """Distinct variants across the catalog, in first-seen order."""
    seen = {}
    for spec in _catalog():
        for v in spec.variant_set:
            seen.setdefault(v.name, v)
    return list(seen.values())


def technology_of(class_id: int) -> Technology:
    return class_spec(class_id).technology


def classes_of(technology: Technology | str) -> list[int]:
    tech = Technology(technology)
    return [s.class_id for s in _catalog() if s.technology is tech]


# --------------------------------------------------------------------------
# pulses and filters (all sampled at SYNTH_RATE)

def _sps(rate: float) -> int:
    n = SYNTH_RATE / rate
    if abs(n - round(n)) > 1e-9:
        raise ValueError(f"rate {rate} does not divide the synthesis rate")
    return int(round(n))


@lru_cache(maxsize=None)
def gaussian_frequency_pulse(bt: float, sps: int, span: int = PULSE_SPAN) -> np.ndarray:
    """Gaussian-filtered rectangular pulse over ``span`` symbols, unit area."""
    t = (np.arange(span * sps) - (span * sps - 1) / 2) / sps
    k = 2 * np.pi * bt / np.sqrt(np.log(2))
    q = lambda x: 0.5 * erfc(x / np.sqrt(2))  # noqa: E731
    g = q(k * (t - 0.5)) - q(k * (t + 0.5))
    return g / g.sum()


@lru_cache(maxsize=None)
def raised_cosine_pulse(rolloff: float, sps: int, span: int = PULSE_SPAN) -> np.ndarray:
    t = (np.arange(span * sps + 1) - span * sps / 2) / sps
    denom = 1 - (2 * rolloff * t) ** 2
    singular = np.isclose(denom, 0.0)
    safe = np.where(singular, 1.0, denom)
    p = np.sinc(t) * np.cos(np.pi * rolloff * t) / safe
    return np.where(singular, np.pi / 4 * np.sinc(1 / (2 * rolloff)), p)


@lru_cache(maxsize=None)
def half_sine_pulse(length: int) -> np.ndarray:
    return np.sin(np.pi * (np.arange(length) + 0.5) / length)


@lru_cache(maxsize=None)
def decimation_filter() -> np.ndarray:
    # -6 dB at the 5 MHz band edge, ~70 dB stop band beyond 5.4 MHz
    return sps.firwin(601, 5.0e6, fs=SYNTH_RATE, window=("kaiser", 6.76))


@lru_cache(maxsize=None)
def _reversed_filter() -> np.ndarray:
    return np.ascontiguousarray(decimation_filter()[::-1]).astype(complex)


@lru_cache(maxsize=64)
def _carrier(offset: float, n: int) -> np.ndarray:
    return frequency_shift(np.ones(n, dtype=complex), offset, SYNTH_RATE)


BARKER_11 = np.array([1, -1, 1, 1, -1, 1, 1, 1, -1, -1, -1], dtype=float)

_ZB_CHIPS_0 = np.array(
    [int(c) for c in "11011001110000110101001000101110"], dtype=np.int8)


@lru_cache(maxsize=None)
def zigbee_chip_table() -> np.ndarray:
    """802.15.4 2.4 GHz symbol-to-chip map, shape (16, 32)."""
    table = np.empty((16, 32), dtype=np.int8)
    for s in range(8):
        table[s] = np.roll(_ZB_CHIPS_0, 4 * s)
    table[8:] = table[:8]
    table[8:, 1::2] ^= 1
    return table


# DQPSK phase increments for bit pairs (d0, d1): 00, 01, 11, 10 -> 0, pi/2, pi, 3pi/2
_DQPSK_STEP = np.array([0.0, np.pi / 2, 3 * np.pi / 2, np.pi])
# QPSK phases for CCK (d, d'): 00, 01, 10, 11 -> 0, pi/2, pi, 3pi/2
_QPSK_PHASE = np.array([0.0, np.pi / 2, np.pi, 3 * np.pi / 2])


def _chip_pulse(variant: ModulationVariant, sps_chip: int) -> np.ndarray:
    if variant.shaping == "rect":
        return np.ones(sps_chip)
    if variant.shaping == "rc":
        return raised_cosine_pulse(variant.rolloff, sps_chip)
    if variant.shaping == "gauss":
        return gaussian_frequency_pulse(variant.bt, sps_chip) * sps_chip
    raise ValueError(f"unknown chip shaping {variant.shaping!r}")


def _gfsk_baseband(variant, n_sym, rng):
    sps = _sps(variant.symbol_rate)
    a = 2.0 * rng.integers(0, 2, n_sym) - 1.0
    freq = sps_upfirdn(gaussian_frequency_pulse(variant.bt, sps), a, sps)
    phase = np.pi * variant.mod_index * np.cumsum(freq)
    return np.exp(1j * phase)


def _barker_baseband(variant, n_sym, rng):
    if variant.scheme is Scheme.DBPSK_BARKER:
        steps = np.pi * rng.integers(0, 2, n_sym)
    else:
        pairs = rng.integers(0, 2, (n_sym, 2))
        steps = _DQPSK_STEP[2 * pairs[:, 0] + pairs[:, 1]]
    symbols = np.exp(1j * np.cumsum(steps))
    chips = (symbols[:, None] * BARKER_11[None, :]).ravel()
    return chips


def _cck_baseband(variant, n_sym, rng):
    if variant.scheme is Scheme.CCK_11:
        bits = rng.integers(0, 2, (n_sym, 8))
        p2 = _QPSK_PHASE[2 * bits[:, 2] + bits[:, 3]]
        p3 = _QPSK_PHASE[2 * bits[:, 4] + bits[:, 5]]
        p4 = _QPSK_PHASE[2 * bits[:, 6] + bits[:, 7]]
    else:
        bits = rng.integers(0, 2, (n_sym, 4))
        p2 = bits[:, 2] * np.pi + np.pi / 2
        p3 = np.zeros(n_sym)
        p4 = bits[:, 3] * np.pi
    p1 = np.cumsum(_DQPSK_STEP[2 * bits[:, 0] + bits[:, 1]])
    code = np.stack([
        np.exp(1j * (p1 + p2 + p3 + p4)),
        np.exp(1j * (p1 + p3 + p4)),
        np.exp(1j * (p1 + p2 + p4)),
        -np.exp(1j * (p1 + p4)),
        np.exp(1j * (p1 + p2 + p3)),
        np.exp(1j * (p1 + p3)),
        -np.exp(1j * (p1 + p2)),
        np.exp(1j * p1),
    ], axis=1)
    return code.ravel()


def _oqpsk_baseband(variant, n_sym, rng):
    sps_chip = _sps(variant.chip_rate)
    chips = zigbee_chip_table()[rng.integers(0, 16, n_sym)].ravel()
    nrz = 2.0 * chips - 1.0
    # half-sine pulses of two chip periods do not overlap within a rail
    pulse = half_sine_pulse(2 * sps_chip)
    i = (nrz[0::2, None] * pulse[None, :]).ravel()
    q = (nrz[1::2, None] * pulse[None, :]).ravel()
    out = np.zeros(len(i) + sps_chip, dtype=complex)
    out[: len(i)] += i
    out[sps_chip: sps_chip + len(q)] += 1j * q
    return out


def sps_upfirdn(pulse: np.ndarray, symbols: np.ndarray, up: int) -> np.ndarray:
    return sps.upfirdn(pulse, symbols, up=up)


def _symbol_period(variant: ModulationVariant) -> int:
    return _sps(variant.symbol_rate)


def _modulate(variant: ModulationVariant, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """At least ``n_samples`` of steady-state baseband at SYNTH_RATE."""
    sym = _symbol_period(variant)
    if variant.scheme is Scheme.GFSK:
        lead = PULSE_SPAN * sym  # skip the pulse-shaping start-up transient
    elif variant.scheme is Scheme.OQPSK_DSSS:
        lead = 2 * _sps(variant.chip_rate)
    else:
        lead = PULSE_SPAN * _sps(variant.chip_rate)
    n_sym = -(-(n_samples + lead + sym) // sym) + 1
    if variant.scheme is Scheme.GFSK:
        x = _gfsk_baseband(variant, n_sym, rng)
    elif variant.scheme is Scheme.OQPSK_DSSS:
        x = _oqpsk_baseband(variant, n_sym, rng)
    else:
        sps_chip = _sps(variant.chip_rate)
        if variant.scheme in (Scheme.DBPSK_BARKER, Scheme.DQPSK_BARKER):
            chips = _barker_baseband(variant, n_sym, rng)
        else:
            chips = _cck_baseband(variant, n_sym, rng)
        if variant.shaping == "rect":
            x = np.repeat(chips, sps_chip)
        else:
            x = sps_upfirdn(_chip_pulse(variant, sps_chip), chips, sps_chip)
    start = lead + int(rng.integers(0, sym))
    out = x[start: start + n_samples]
    if len(out) != n_samples:
        raise RuntimeError("internal: modulator produced too few samples")
    return out


# --------------------------------------------------------------------------
# public operations

def frequency_shift(snapshot: np.ndarray, offset: float, sample_rate: float = SAMPLE_RATE) -> np.ndarray:
    """Multiply sample k by exp(i 2 pi offset k / sample_rate)."""
    x = np.asarray(snapshot)
    k = np.arange(x.shape[-1])
    return x * np.exp(2j * np.pi * offset * k / sample_rate)


def measure_power(snapshot: np.ndarray) -> float:
    x = np.asarray(snapshot)
    return float(np.mean(np.abs(x) ** 2)) if x.size else 0.0


def check_snapshot(snapshot: np.ndarray) -> np.ndarray:
    x = np.asarray(snapshot)
    if x.shape != (SNAPSHOT_LEN,):
        raise ValueError(f"a snapshot has exactly {SNAPSHOT_LEN} samples, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("snapshot contains non-finite samples")
    return x


def synthesize_burst(class_id: int, variant: ModulationVariant | str, seed: int) -> np.ndarray:
    """128 unit-power samples of a continuous burst of ``class_id``.

    Payload bits, symbol-clock offset and carrier phase all come from ``seed``,
    so the output is a pure function of the arguments.
    """
    spec = class_spec(class_id)
    if isinstance(variant, ModulationVariant):
        if variant not in spec.variant_set:
            raise ValueError(
                f"variant {variant.name!r} does not belong to class {class_id} "
                f"({spec.technology.value})")
    else:
        variant = spec.variant(variant)

    rng = np.random.default_rng(int(seed))
    h = decimation_filter()
    n_in = SNAPSHOT_LEN * DECIMATION + len(h)
    x = _modulate(variant, n_in, rng)
    phase0 = rng.uniform(0.0, 2 * np.pi)
    x = x * (_carrier(spec.center_offset, n_in) * np.exp(1j * phase0))
    # fully overlapped filter outputs only, one every DECIMATION input samples
    windows = np.lib.stride_tricks.sliding_window_view(x, len(h))[::DECIMATION][:SNAPSHOT_LEN]
    y = windows @ _reversed_filter()
    return y / np.sqrt(measure_power(y))
