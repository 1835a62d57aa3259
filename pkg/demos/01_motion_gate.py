"""Walk through the motion gate on a hand-made delta stream.

The gate watches how far the end effector travels in each action window and
decides, per window, whether the next forward pass can run on a pruned
visual-token budget (decision 1) or needs full vision (decision 0).
"""

import numpy as np

from motionprune import (ActionIncrement, ActionWindow, GateConfig, Pose,
                         fk_window, gate_trace, window_distance)

# --- from raw actions to a window distance --------------------------------
# Eight 7-DoF increments: [dx, dy, dz, droll, dpitch, dyaw, gripper].
rng = np.random.default_rng(0)
incs = tuple(
    ActionIncrement.from_vector(np.concatenate([
        rng.normal(size=3) * 0.02, rng.uniform(-0.1, 0.1, size=3), [1.0]]))
    for _ in range(8)
)
window = ActionWindow(index=1, increments=incs, start_pose=Pose.identity())
positions = fk_window(window)            # (omega + 1, 3) end-effector track
delta = window_distance(window)          # arc length of that track
print(f"one window: {len(incs)} steps, path length delta = {delta:.4f} m")
print(f"net displacement = {np.linalg.norm(positions[-1] - positions[0]):.4f} m\n")

# --- gating a whole episode ------------------------------------------------
# Slow start, a fast transit in the middle, then fine manipulation at the end.
deltas = [0.02, 0.02, 0.18, 0.22, 0.25, 0.21, 0.04, 0.02, 0.015, 0.01]

for rule in ("extrema", "mean"):
    decisions, gamma = gate_trace(deltas, GateConfig(rule=rule))
    print(f"{rule:>8} rule: decisions {decisions}  gamma = {gamma:.2f}")

# Cold start forces full vision early; the consecutive-pruned cap guarantees a
# fresh look at the scene at least every max_consecutive_pruned + 1 windows.
cfg = GateConfig(rule="extrema", cold_start_windows=3, max_consecutive_pruned=2)
decisions, gamma = gate_trace(deltas, cfg)
print(f"cold_start=3, cap=2: {decisions}  gamma = {gamma:.2f}")
