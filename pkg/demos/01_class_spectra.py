"""Where each of the 15 classes sits in the 10 MHz window.

Run with ``python3 demos/01_class_spectra.py``. Prints, per class, the
power-weighted centre frequency of a few synthesized bursts and the share of
their energy that falls inside the class's nominal channel.
"""
import numpy as np

from wiid.features import dft_128
from wiid.signals import SAMPLE_RATE, SNAPSHOT_LEN, class_catalog, synthesize_burst

freqs = (np.arange(SNAPSHOT_LEN) - SNAPSHOT_LEN // 2) * SAMPLE_RATE / SNAPSHOT_LEN

# %% averaged periodograms
print(f"{'class':>5} {'tech':>10} {'offset':>8} {'centroid':>9} {'in-band':>8}  variants")
for spec in class_catalog():
    p = np.zeros(SNAPSHOT_LEN)
    for seed in range(24):
        v = spec.variant_set[seed % len(spec.variant_set)]
        p += np.abs(dft_128(synthesize_burst(spec.class_id, v, seed))) ** 2
    centroid = np.sum(freqs * p) / p.sum()
    band = np.abs(freqs - spec.center_offset) <= spec.occupied_bandwidth / 2
    print(f"{spec.class_id:>5} {spec.technology.value:>10} {spec.center_offset / 1e6:>7.1f}M "
          f"{centroid / 1e6:>8.2f}M {p[band].sum() / p.sum():>8.3f}  "
          + ", ".join(v.name for v in spec.variant_set))

# %% the WLAN channels only partly overlap the window, so their centroid is
# pulled toward the middle; the 1 MHz Bluetooth channels land on their offsets.
