"""Drive the pruning pipeline the way a live inference host would.

The bindings package wraps the core in a streaming session: open with a
config JSON string, feed one omega x 7 action window per forward pass, get
back {s, delta, k}, and ask for token selections when s == 1. Requires
`pip install -e bindings/`.
"""

import json

import numpy as np

import motionprune_bindings as mb
from motionprune import synth_episode

print(f"bindings {mb.version()} over core {mb.core_version()}\n")

config = json.dumps({
    "rule": "extrema", "rho": 0.5, "alpha": [0.4, 0.6],
    "dims": {"preset": "llama2-7b-oft", "l_vis": 512, "l_txt": 32,
             "l_prop": 1, "l_act": 8},
})
session = mb.session_open(config)

log = synth_episode(seed=42, profile="mixed", t_windows=12)
rng = np.random.default_rng(5)
for w in range(log.num_windows):
    window = log.actions[w * 8:(w + 1) * 8]        # omega x 7 buffer
    rec = session.step(window)
    line = f"window {w + 1:>2}: delta = {rec['delta']:.4f}  s = {rec['s']}"
    if rec["s"] == 1:
        kept = session.select(rng.normal(size=512), (256, 256))
        line += f"  keep {rec['k']} tokens ({len(kept[0])} scene + {len(kept[1])} wrist)"
    print(line)

# Structured errors cross the boundary as (code, message, field) triples.
try:
    mb.session_open(json.dumps({"rule": "sometimes"}))
except mb.BindingError as err:
    print("\nrejected config ->", err.triple())
