"""Summarize how concentrated importance mass is across tokens.

Participation ratio (PR = 1 / sum p^2) is the effective number of tokens
carrying mass; entropy bounds it from above via PR <= e^H. Both feed the
`stats` CLI subcommand, which turns per-layer score rows into a CSV.
"""

import math

import numpy as np

from motionprune import (entropy, layer_stats_rows, normalize,
                         participation_ratio, random_retention_probability)

uniform = [0.125] * 8
spiked = normalize([5.0, 1.0, 1.0, 0.5, 0.25, 0.25, 0.0, 0.0])

for name, p in (("uniform", uniform), ("spiked", list(spiked))):
    pr, h = participation_ratio(p), entropy(p)
    print(f"{name:>8}: PR = {pr:.2f}  H = {h:.3f} nats  e^H = {math.exp(h):.2f}"
          f"  (PR <= e^H: {pr <= math.exp(h) + 1e-12})")

# Raw attention scores can be negative; normalize shifts then rescales.
raw = np.array([-2.0, -1.0, 0.0, 3.0])
print("\nnormalized raw scores:", np.round(normalize(raw), 3))

# Per-layer CSV rows, as emitted by `motionprune stats`.
rng = np.random.default_rng(3)
rows = layer_stats_rows({layer: rng.dirichlet(np.ones(16)) for layer in (0, 8, 16)})
print("\nlayer,tokens,participation_ratio,entropy_nats,entropy_bits")
for row in rows:
    print(",".join(str(row[key]) for key in
                   ("layer", "tokens", "participation_ratio",
                    "entropy_nats", "entropy_bits")))

# Exact tail odds that a random k-of-v keep retains >= r of m special tokens.
p = random_retention_probability(v=512, m=8, k=256, r=8)
print(f"\nP(random 256-of-512 keep retains all 8 targets) = {p:.5f} (~(1/2)^8)")
