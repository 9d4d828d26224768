"""Desk-scale training run with the bundled ``desk`` preset.

Takes a few minutes on one CPU core. Trains the reduced network on 12,000
multi-label snapshots, then reports same-technology TPR per interferer count
on scenario sets built from a held-out single-label pool, plus the TPR-vs-SNR
curve on that pool.
"""
import logging
from dataclasses import replace

from wiid.config import load_experiment
from wiid.dataset import generate_multi_label, generate_scenario, generate_single_label, split_train_val
from wiid.evaluation import evaluate, single_label_comparison
from wiid.nn import build_model, train

logging.basicConfig(level=logging.INFO, format="%(message)s")
exp = load_experiment("desk")
gen = exp.generation

single = generate_single_label(gen)
multi = generate_multi_label(single, gen)
train_set, val_set = split_train_val(multi, gen.train_fraction, gen.master_seed)

model = build_model(exp.network, seed=exp.training.seed)
train(model, train_set, val_set, epochs=exp.training.epochs, batch_size=exp.training.batch_size,
      seed=exp.training.seed, lr=exp.training.lr)

# %% evaluation on bursts the network never saw
heldout = generate_single_label(replace(gen, master_seed=gen.master_seed + exp.evaluation.heldout_seed_offset))
for tech, counts in (("BT_15_1", range(1, 7)), ("WLAN_11BG", (1, 2)), ("ZB_15_4", (1,))):
    scenario = generate_scenario(heldout, tech, tech, list(counts), exp.evaluation.scenario_per_count,
                                 seed=gen.master_seed)
    curve = evaluate(model, scenario).sti_curve(tech)
    print(tech, "  ".join(f"N={n}: {row['mean_tpr']:.3f}" for n, row in sorted(curve.items())))

comparison = single_label_comparison(model, heldout, [0.5])
for snr, tpr in zip(comparison["snr_db"], comparison["tpr"][0.5]):
    print(f"{snr:+5.0f} dB  TPR {tpr:.3f}")
