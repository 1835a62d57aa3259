"""Replay a synthetic action log end to end: gate -> selection -> cost.

The same pipeline is available from the command line:
    motionprune synth --seed 42 --profile mixed --t 50 --out ep.jsonl
    motionprune simulate --episode ep.jsonl --dims-preset llama2-7b-oft \
        --l-vis 512 --l-txt 32 --l-prop 1 --l-act 8
"""

import json

from motionprune import (GateConfig, compare_random, dims_from_preset,
                         run_episode, synth_episode)

dims = dims_from_preset("llama2-7b-oft", l_vis=512, l_txt=32, l_prop=1, l_act=8)

for profile in ("coarse", "fine", "mixed"):
    log = synth_episode(seed=42, profile=profile, t_windows=50)
    report = run_episode(log, GateConfig(), dims, rho=0.5)
    print(f"{profile:>6}: gamma = {report.gamma:.2f}  rho_avg = {report.rho_avg:.2f}"
          f"  speedup = {report.speedup:.3f}x")

# Full JSON report for one episode (this is what `simulate` prints).
log = synth_episode(seed=42, profile="mixed", t_windows=50)
report = run_episode(log, GateConfig(), dims, rho=0.5)
doc = report.to_dict()
print("\nfirst three window records:")
print(json.dumps(doc["windows"][:3], indent=2))

# How likely is a *random* keep of the same size to retain 8 specific
# task-critical tokens? Exact hypergeometric vs Monte Carlo.
odds = compare_random(report, v=dims.l_vis, m=8, trials=100_000, seed=0)
entry = odds["per_k"][0]
print(f"\nrandom keep of k={entry['k']} from {dims.l_vis}: retains all 8 targets"
      f" with p = {entry['analytic']} (MC: {entry['monte_carlo']})")
