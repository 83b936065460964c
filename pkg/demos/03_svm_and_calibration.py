"""Linear SVM training by dual coordinate descent, probability calibration,
and one-vs-rest multi-label scoring.

Run with: python demos/03_svm_and_calibration.py
"""

import numpy as np

from esgclassify import (fit_binary, fit_one_vs_rest, fit_platt,
                         predict_proba, predict_proba_normalized,
                         primal_objective)
from esgclassify.corpus import LabelCatalog, LabelEntry

rng = np.random.default_rng(3)

# --- binary machine on two overlapping point clouds
pos = rng.normal(loc=+1.2, scale=0.8, size=(30, 2))
neg = rng.normal(loc=-1.2, scale=0.8, size=(30, 2))
X = np.vstack([pos, neg])
y = np.array([1.0] * 30 + [-1.0] * 30)

machine = fit_binary(X, y, C=1.0, seed=0)
obj = primal_objective(machine.weights, machine.bias, X, y, C=1.0)
margins = y * (X @ machine.weights + machine.bias)
print(f"binary SVM: w={machine.weights.round(3)}, b={machine.bias:+.3f}")
print(f"  objective={obj:.4f}, margin violations={int(np.sum(margins < 1))}/60")

# --- Platt scaling maps decision values to probabilities
decisions = X @ machine.weights + machine.bias
platt = fit_platt(decisions, y)
print(f"\nPlatt sigmoid: A={platt.A:+.3f}, B={platt.B:+.3f} "
      f"(A<0 means probability rises with the decision value)")
for f in (-2.0, 0.0, 2.0):
    p = 1.0 / (1.0 + np.exp(platt.A * f + platt.B))
    print(f"  decision {f:+.1f} -> P(+1) = {p:.3f}")

# --- one-vs-rest over three labeled clusters, multi-label semantics
catalog = LabelCatalog([
    LabelEntry("emissions", "Emissions", "carbon output of operations"),
    LabelEntry("safety", "Safety", "workplace injuries and incidents"),
    LabelEntry("pay", "Pay", "executive compensation"),
])
centers = {"emissions": (0, 6), "safety": (6, 0), "pay": (-6, 0)}
points, gold = [], []
for label, center in centers.items():
    for _ in range(15):
        points.append(rng.normal(loc=center, scale=0.5))
        gold.append({label})
ovr = fit_one_vs_rest(np.asarray(points), gold, catalog, C=10.0, seed=1)

probe = np.asarray(centers["safety"], dtype=float)
raw = predict_proba(ovr, probe)
norm = predict_proba_normalized(ovr, probe)
print("\none-vs-rest at the safety centroid:")
for label in catalog.ids():
    print(f"  {label:<10} p={raw[label]:.3f}   normalized={norm[label]:.3f}")
print(f"  (raw probabilities are per-label and need not sum to 1: "
      f"{sum(raw.values()):.3f})")
