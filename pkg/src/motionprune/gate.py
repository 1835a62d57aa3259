"""Per-window binary prune/full-vision gate.

State 0 means full vision, 1 means pruned. The rule decision for window i
uses the window distances delta_1..delta_i; a cold-start phase forces the
first windows to full vision, and a cap on consecutive pruned windows
forces a full-vision window after the cap is hit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import InvalidArgument, InvalidState

RULES = ("mean", "extrema")
THIRD_CASES = ("inherit", "force_prune")


@dataclass
class GateConfig:
    rule: str = "extrema"
    tau: int = 3  # extrema lookback; a package default, configurable
    third_case: str = "force_prune"
    cold_start_windows: int = 2
    max_consecutive_pruned: int = 3
    omega: int = 8

    def __post_init__(self):
        if self.rule not in RULES:
            raise InvalidArgument(f"rule must be one of {RULES}, got {self.rule!r}")
        if self.third_case not in THIRD_CASES:
            raise InvalidArgument(
                f"third_case must be one of {THIRD_CASES}, got {self.third_case!r}"
            )
        if self.tau < 1:
            raise InvalidArgument(f"tau must be >= 1, got {self.tau}")
        if self.cold_start_windows < 0:
            raise InvalidArgument("cold_start_windows must be >= 0")
        if self.max_consecutive_pruned < 1:
            raise InvalidArgument("max_consecutive_pruned must be >= 1")
        if self.omega < 1:
            raise InvalidArgument("omega must be >= 1")


@dataclass
class GateState:
    """Mutable per-episode gate state; single owner, never shared across episodes."""

    current: int = 0
    window_index: int = 0
    delta_history: list = field(default_factory=list)
    consecutive_pruned: int = 0


def mean_rule(delta_history, current_delta) -> int:
    """1 if the newest delta reaches the running mean of all deltas so far.

    The running mean includes the current delta, so `current_delta` must be
    the last element of `delta_history`.
    """
    if not delta_history:
        raise InvalidState("mean_rule requires a non-empty delta history")
    if delta_history[-1] != current_delta:
        raise InvalidArgument("current_delta must be the last element of delta_history")
    mean = sum(delta_history) / len(delta_history)
    return 1 if current_delta >= mean else 0


def extrema_rule(delta_history, tau: int, prev_state: int, third_case: str) -> int:
    """Compare the newest delta against the extrema of the last min(tau, i) deltas."""
    if not delta_history:
        raise InvalidState("extrema_rule requires a non-empty delta history")
    if third_case not in THIRD_CASES:
        raise InvalidArgument(f"third_case must be one of {THIRD_CASES}")
    lookback = delta_history[-tau:]
    current = delta_history[-1]
    hi, lo = max(lookback), min(lookback)
    if current >= hi:
        return 1
    if current <= lo:
        return 0
    return 1 if third_case == "force_prune" else prev_state


def gate_step(state: GateState, config: GateConfig, delta: float):
    """Advance the gate by one window; returns (state, decision for the next window).

    Mutates `state` in place. Cold start and the consecutive-prune cap both
    override the rule decision to 0; a full-vision window (forced or not)
    resets the consecutive counter.
    """
    if not (isinstance(delta, (int, float)) and math.isfinite(delta)):
        raise InvalidArgument(f"delta must be finite, got {delta!r}")
    state.window_index += 1
    state.delta_history.append(float(delta))

    if config.rule == "mean":
        decision = mean_rule(state.delta_history, float(delta))
    else:
        decision = extrema_rule(
            state.delta_history, config.tau, state.current, config.third_case
        )

    if state.window_index <= config.cold_start_windows:
        decision = 0
    elif state.consecutive_pruned >= config.max_consecutive_pruned:
        decision = 0

    if decision == 1:
        state.consecutive_pruned += 1
    else:
        state.consecutive_pruned = 0
    state.current = decision
    return state, decision


def gate_trace(deltas, config: GateConfig):
    """Fold gate_step over a delta stream; returns (decisions, fraction pruned)."""
    deltas = list(deltas)
    if not deltas:
        raise InvalidArgument("gate_trace requires a non-empty delta stream")
    for d in deltas:
        if not math.isfinite(d) or d < 0:
            raise InvalidArgument(f"deltas must be finite and non-negative, got {d!r}")
    state = GateState()
    decisions = []
    for d in deltas:
        _, decision = gate_step(state, config, d)
        decisions.append(decision)
    gamma = sum(decisions) / len(decisions)
    return decisions, gamma
