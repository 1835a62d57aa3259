"""Episode replay: action logs through the gate, token selection, and cost model.

An episode log is JSONL: a header line {"meta": {"omega": int, "angle_unit":
"rad"|"deg"}} followed by one {"step": int, "action": [7 floats]} object per
action step. Steps are chunked into consecutive windows of omega; a final
partial window is dropped with a warning.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument, ParseError
from .flops import ModelDims, adp_flops, baseline_flops
from .gate import GateConfig, GateState, gate_step
from .se3 import ActionIncrement, ActionWindow, Pose, compose_step, window_distance
from .scoring import EmbeddingMatrix, ProjectionWeights, prune_pipeline
from .stats import random_retention_probability

ANGLE_UNITS = ("rad", "deg")
PROFILES = ("coarse", "fine", "mixed")


@dataclass
class EpisodeLog:
    """Validated action log; angles already converted to radians."""

    actions: np.ndarray  # (steps, 7)
    omega: int
    angle_unit: str = "rad"
    dropped_steps: int = 0

    def __post_init__(self):
        actions = np.asarray(self.actions, dtype=float)
        if actions.ndim != 2 or actions.shape[1] != 7:
            raise InvalidArgument(f"actions must be (steps, 7), got {actions.shape}")
        if actions.shape[0] < 1:
            raise InvalidArgument("episode must contain at least one step")
        if not np.isfinite(actions).all():
            raise InvalidArgument("actions must be finite")
        if self.omega < 1:
            raise InvalidArgument("omega must be >= 1")
        self.actions = actions

    @property
    def num_windows(self) -> int:
        return self.actions.shape[0] // self.omega

    def windows(self):
        """Consecutive non-overlapping windows, poses chained across the episode."""
        n = self.num_windows
        dropped = self.actions.shape[0] - n * self.omega
        if dropped:
            warnings.warn(f"dropping {dropped} trailing step(s) short of a full window")
        pose = Pose.identity()
        out = []
        for i in range(n):
            chunk = self.actions[i * self.omega : (i + 1) * self.omega]
            incs = tuple(ActionIncrement.from_vector(row) for row in chunk)
            out.append(ActionWindow(index=i + 1, increments=incs, start_pose=pose))
            for inc in incs:
                pose = compose_step(pose, inc)
        return out

    def window_deltas(self):
        return [window_distance(w) for w in self.windows()]


def load_episode(path) -> EpisodeLog:
    """Parse a JSONL episode file; errors carry the offending line number."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError(f"{path}: empty episode file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:1: bad JSON header: {exc}") from exc
    meta = header.get("meta")
    if not isinstance(meta, dict):
        raise ParseError(f"{path}:1: first line must be a meta header object")
    omega = meta.get("omega")
    unit = meta.get("angle_unit", "rad")
    if not isinstance(omega, int) or omega < 1:
        raise ParseError(f"{path}:1: meta.omega must be a positive integer")
    if unit not in ANGLE_UNITS:
        raise ParseError(f"{path}:1: meta.angle_unit must be one of {ANGLE_UNITS}")

    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}:{lineno}: bad JSON: {exc}") from exc
        action = obj.get("action")
        if not isinstance(action, list) or len(action) != 7:
            raise ParseError(f"{path}:{lineno}: action must be a list of 7 numbers")
        try:
            rows.append([float(v) for v in action])
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{path}:{lineno}: non-numeric action entry") from exc
    if not rows:
        raise ParseError(f"{path}: no action steps found")

    actions = np.array(rows, dtype=float)
    if unit == "deg":
        actions[:, 3:6] = np.deg2rad(actions[:, 3:6])
    dropped = actions.shape[0] % omega
    return EpisodeLog(actions=actions, omega=omega, angle_unit=unit, dropped_steps=dropped)


def save_episode(path, log: EpisodeLog) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"meta": {"omega": log.omega, "angle_unit": "rad"}}) + "\n")
        for step, row in enumerate(log.actions):
            fh.write(json.dumps({"step": step, "action": [float(v) for v in row]}) + "\n")


@dataclass
class WindowRecord:
    index: int
    delta: float
    decision: int
    k: int


@dataclass
class RunReport:
    windows: list
    gamma: float
    rho_avg: float
    t: int
    flops_base_total: int
    flops_episode: int
    savings: int
    speedup: float
    kept_indices: list = field(default_factory=list)  # per pruned window, when scored

    def to_dict(self) -> dict:
        return {
            "windows": [
                {"index": w.index, "delta": _sig6(w.delta),
                 "decision": w.decision, "k": w.k}
                for w in self.windows
            ],
            "gamma": _sig6(self.gamma),
            "rho_avg": _sig6(self.rho_avg),
            "t": self.t,
            "flops_base_total": self.flops_base_total,
            "flops_base_total_e12": _e12(self.flops_base_total),
            "flops_episode": self.flops_episode,
            "flops_episode_e12": _e12(self.flops_episode),
            "savings": self.savings,
            "speedup": _sig6(self.speedup),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _sig6(x: float) -> float:
    return float(f"{x:.6g}")


def _e12(flops: int) -> str:
    return f"{flops / 1e12:.2f}"


def run_episode(
    log: EpisodeLog,
    gate_config: GateConfig,
    dims: ModelDims,
    rho: float,
    alpha=(1.0,),
    embeddings: EmbeddingMatrix | None = None,
    weights: ProjectionWeights | None = None,
) -> RunReport:
    """Replay one episode through gate + selection + cost model.

    Without embeddings the pruned-token count is derived from rho and dims
    alone; with embeddings each pruned window also runs real Top-K selection.
    """
    if (embeddings is None) != (weights is None):
        raise InvalidArgument("embeddings and weights must be provided together")
    if embeddings is not None:
        if embeddings.l_vis != dims.l_vis:
            raise InvalidArgument(
                f"embedding L_vis={embeddings.l_vis} does not match dims L_vis={dims.l_vis}"
            )
        if embeddings.cols != dims.hidden:
            raise InvalidArgument(
                f"embedding width {embeddings.cols} does not match hidden {dims.hidden}"
            )

    f_base = baseline_flops(dims)
    f_adp = adp_flops(dims, rho)
    state = GateState()
    records = []
    kept_lists = []
    flops_episode = 0
    for window in log.windows():
        delta = window_distance(window)
        _, decision = gate_step(state, gate_config, delta)
        if decision == 1:
            if embeddings is not None:
                _, pd, _ = prune_pipeline(embeddings, weights, rho, alpha)
                k = pd.k
                kept_lists.append([idx.tolist() for idx in pd.kept_indices])
            else:
                k = dims.kept_tokens(rho)
            flops_episode += f_adp
        else:
            k = 0
            flops_episode += f_base
        records.append(WindowRecord(window.index, delta, decision, k))

    t = len(records)
    if t == 0:
        raise InvalidArgument(f"episode has fewer than omega={log.omega} steps")
    gamma = sum(r.decision for r in records) / t
    rho_avg = sum((r.k / dims.l_vis) if r.decision else 1.0 for r in records) / t
    base_total = t * f_base
    return RunReport(
        windows=records,
        gamma=gamma,
        rho_avg=rho_avg,
        t=t,
        flops_base_total=base_total,
        flops_episode=flops_episode,
        savings=base_total - flops_episode,
        speedup=base_total / flops_episode,
        kept_indices=kept_lists,
    )


def synth_episode(seed: int, profile: str, t_windows: int, omega: int = 8) -> EpisodeLog:
    """Deterministic synthetic log whose per-window motion follows a profile.

    Each step translation has an exact per-window magnitude, so the window
    distance equals omega * magnitude regardless of the random directions and
    rotations. "coarse" ramps magnitudes up across the episode, "fine" ramps
    them down, and "mixed" alternates rising and falling half-blocks so the
    gate demonstrably toggles.
    """
    if profile not in PROFILES:
        raise InvalidArgument(f"profile must be one of {PROFILES}, got {profile!r}")
    if t_windows < 1:
        raise InvalidArgument("t_windows must be >= 1")
    rng = np.random.default_rng(seed)
    base = 0.01
    mags = np.empty(t_windows)
    for w in range(t_windows):
        if profile == "coarse":
            mags[w] = base * (1.0 + 0.25 * w)
        elif profile == "fine":
            mags[w] = base / (1.0 + 0.25 * w)
        else:  # mixed: 4 windows rising, 4 falling, repeating
            j = w % 8
            mags[w] = base * (1.0 + 0.3 * j) if j < 4 else base * (2.2 - 0.3 * (j - 4))

    steps = np.zeros((t_windows * omega, 7))
    for w in range(t_windows):
        for u in range(omega):
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
            row = w * omega + u
            steps[row, 0:3] = direction * mags[w]
            steps[row, 3:6] = rng.uniform(-0.2, 0.2, size=3)
            steps[row, 6] = float(rng.integers(0, 2))
    return EpisodeLog(actions=steps, omega=omega)


def compare_random(
    report: RunReport,
    v: int,
    m: int,
    trials: int = 100_000,
    seed: int = 0,
    kept_indices=None,
    target_indices=None,
) -> dict:
    """Random-pruning retention odds for every distinct kept-token count.

    For each k appearing in the report's pruned windows, gives the analytic
    and Monte-Carlo probability that a uniform random k-of-v keep retains all
    m target tokens. When an explicit kept/target index pair is supplied the
    deterministic selection's retained fraction is reported alongside.
    """
    if m > v:
        raise InvalidArgument(f"m={m} exceeds v={v}")
    if m < 0 or v < 1 or trials < 1:
        raise InvalidArgument("need v >= 1, m >= 0, trials >= 1")
    rng = np.random.default_rng(seed)
    ks = sorted({r.k for r in report.windows if r.decision == 1})
    entries = []
    for k in ks:
        analytic = random_retention_probability(v, m, k, m)
        if m == 0:
            mc = 1.0
        else:
            draws = rng.hypergeometric(m, v - m, k, size=trials)
            mc = float(np.mean(draws == m))
        entries.append({
            "k": k,
            "analytic": _sig6(analytic),
            "monte_carlo": _sig6(mc),
            "trials": trials,
            "stderr": _sig6(math.sqrt(max(analytic * (1 - analytic), 1e-12) / trials)),
        })
    record = {"v": v, "m": m, "per_k": entries}
    if kept_indices is not None and target_indices is not None:
        kept = set(int(i) for i in kept_indices)
        target = [int(i) for i in target_indices]
        if target:
            record["deterministic_retained_fraction"] = _sig6(
                sum(1 for i in target if i in kept) / len(target)
            )
        else:
            record["deterministic_retained_fraction"] = 1.0
    return record
