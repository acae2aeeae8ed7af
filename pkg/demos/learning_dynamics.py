"""Simulated vs predicted learning dynamics on one dataset.

Trains a deep and a shallow dense network, then tabulates the effective
singular values against the closed-form trajectories at a few epochs.

Run:  python demos/learning_dynamics.py
"""

import numpy as np

from modspec import (Architecture, FIG3_PARAMS, LearningRule, TrainConfig,
                     analytic_svd, build_dataset, init_network, mode_spectrum,
                     train)
from modspec.theory import _group_trajectories

EPS, EPOCHS = 0.002, 6000

d = build_dataset(FIG3_PARAMS)
spec = mode_spectrum(FIG3_PARAMS)
print("distinct modes of this dataset:")
print(f"  pi1: lambda={spec.lambda1:.4f} delta={spec.delta1:.4f} "
      f"asymptote={spec.pi1_star:.4f} (x{spec.mult1})")
print(f"  pi2: lambda={spec.lambda2:.4f} delta={spec.delta1:.4f} "
      f"asymptote={spec.pi2_star:.4f} (x{spec.mult2})")
print(f"  pi3: lambda={spec.lambda3:.4f} delta={spec.delta2:.4f} "
      f"asymptote={spec.pi3_star:.4f} (x{spec.mult3})")

for depth, arch in (("deep", Architecture.dense()), ("shallow", Architecture.shallow())):
    cfg = TrainConfig(epsilon=EPS, epochs=EPOCHS, init_std=1e-3, seed=0,
                      record_every=1)
    net = init_network(d, arch, depth, cfg, hidden_width=32 if depth == "deep" else None)
    h = train(net, d, LearningRule.gradient_descent(), cfg)
    svd = analytic_svd(d)
    print(f"\n{depth} network (eps={EPS}, {EPOCHS} epochs):")
    print("  epoch   " + "   ".join(f"pi{m}-sim  pi{m}-pred" for m in (1, 2, 3)))
    checkpoints = [0, 200, 500, 1000, 2000, 4000, EPOCHS]
    for t in checkpoints:
        i = int(np.searchsorted(h.epochs, t))
        cells = []
        for mode_id, lam, delta, _ in svd.groups():
            pred = _group_trajectories(
                lam, delta, h.initial_strengths[("dense", mode_id)],
                EPS, FIG3_PARAMS.n_x, np.array([float(t)]), depth).mean(axis=0)[0]
            sim = h.mode_values[i, h.mode_ids.index(mode_id)]
            cells.append(f"{sim:7.4f}  {pred:7.4f}")
        print(f"  {t:5d}   " + "   ".join(cells))
    print(f"  final loss {h.losses[-1]:.2e}")
