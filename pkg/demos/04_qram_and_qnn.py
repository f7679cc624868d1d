"""Learn a shallow QRAM for each class, then train a QNN on its superpositions.

The sampling baseline sees one basis-encoded example per query; the
superposition model sees a whole class per query. Both get 60 queries.
"""
import numpy as np

from eqgan import evaluate_accuracy, qram_state, sample_two_peak, train_qnn, train_qram
from eqgan.qram import sample_counts

d = sample_two_peak(seed=0)
params = {}
for c in (0, 1):
    params[c], f = train_qram(d, c)
    model = sample_counts(qram_state(4, c, params[c]), int(d.histogram(c).sum()), seed=c)
    print(f"class {c}: fidelity {f:.4f}")
    print("  data :", " ".join(f"{k:2d}" for k in d.histogram(c)))
    print("  qram :", " ".join(f"{k:2d}" for k in model))

accs = {"SAMPLING": [], "SUPERPOSITION": []}
for seed in range(5):
    for mode in accs:
        m, _ = train_qnn(mode, d, params, seed=seed)
        accs[mode].append(evaluate_accuracy(m, d))
for mode, a in accs.items():
    print(f"{mode:13s} test accuracy over 5 seeds: {np.round(a, 3)}  median {np.median(a):.3f}")
