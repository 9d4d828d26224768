"""From single bursts to multi-label snapshots.

A small single-label set is generated, a few multi-label records are mixed
from its 20 dB pool, and the realized signal-to-interference ratio is
checked per interferer count.
"""
import numpy as np

from wiid.dataset import GenConfig, generate_multi_label, generate_single_label, record_components
from wiid.signals import measure_power

config = GenConfig(snapshots_per_class_snr=20, snr_grid=[0.0, 20.0], multi_total=600, master_seed=1)
single = generate_single_label(config)
print(f"single-label records: {len(single)} (15 classes x {len(config.snr_grid)} SNRs x "
      f"{config.snapshots_per_class_snr})")

multi = generate_multi_label(single, config)
for rec in list(multi)[:5]:
    print(f"utilized {rec.utilized_class:>2}  N={rec.num_interferers}  labels {sorted(rec.labels)}")

# %% SIR per interferer count: the 1/sqrt(N) weight keeps the interference
# power equal to the utilized power on average.
sir = np.array([10 * np.log10(measure_power(u) / measure_power(i))
                for u, i in (record_components(single, config, k) for k in range(len(multi)))])
for n in config.interferer_counts:
    at = multi.num_interferers == n
    print(f"N={n}: mean SIR {sir[at].mean():+.3f} dB, range [{sir[at].min():+.2f}, {sir[at].max():+.2f}]")
