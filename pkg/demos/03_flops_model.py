"""Analytic per-forward and per-episode FLOPs for the pruned pipeline.

Everything here is exact integer / rational arithmetic: savings identities
hold to the last digit, and the episode expectation plus savings always
reconstructs T times the baseline cost.
"""

from motionprune import (adp_flops, baseline_flops, dims_from_preset,
                         episode_expected_flops, flops_table, scoring_flops)
from motionprune.calibrate import fit_reported

dims = dims_from_preset("llama2-7b-oft", l_vis=512, l_txt=197, l_prop=1, l_act=8)
f_base = baseline_flops(dims)
print(f"sequence length S = {dims.seq_len}, baseline = {f_base / 1e12:.2f} TFLOPs/forward")
print(f"scoring overhead  = {scoring_flops(dims) / 1e9:.2f} GFLOPs/forward\n")

print("rho   pruned S'  F_ADP (T)  saved")
for row in flops_table(dims, [0.3, 0.4, 0.5, 0.6, 0.7]):
    print(f"{row['rho']:.1f}   {row['pruned_seq_len']:>8}"
          f"  {row['flops_adp'] / 1e12:>8.2f}  {row['savings'] / f_base:>6.1%}")

# Episode expectation: gamma is the fraction of windows on the pruned path.
expected, savings = episode_expected_flops(dims, rho=0.5, gamma=0.6, t=100)
assert expected + savings == 100 * f_base   # exact, not approximate
print(f"\n100 windows at gamma=0.6, rho=0.5: expected {float(expected) / 1e12:.1f}"
      f" TFLOPs, saving {float(savings / (100 * f_base)):.1%}")

# Fit unknown sequence lengths and gamma to an externally reported FLOPs column.
best = fit_reported()["best"]
print(f"\ncalibration best fit ({best['interpretation']}): L_vis={best['l_vis']},"
      f" L_rest={best['l_rest']}, gamma={best['gamma']:.3f},"
      f" max rel err {best['max_rel_err']:.2%}")
