"""Streaming adapter around the motionprune core for host inference loops.

A host opens a session from a config JSON string, then feeds one action
window (an omega x 7 array) per forward pass and gets back the pruning
decision record {s, delta, k}. Token selection and the config echo are
exposed through the same session so the host never touches core types.

Boundary rules:
  - Numeric payloads cross as contiguous little-endian float buffers with
    explicit shapes; results come back as plain ints, floats, and lists.
  - Core failures surface as BindingError carrying a (code, message, field)
    triple, never as a raw core exception.
  - One session is one episode; sessions are independent and may be driven
    concurrently with each other, but a single session is not thread-safe.
"""

from __future__ import annotations

import json

import numpy as np

import motionprune
from motionprune.config import ConfigError, parse_config
from motionprune.errors import (DegenerateInput, InvalidArgument, InvalidState,
                                MotionPruneError, ParseError)
from motionprune.gate import GateState, gate_step
from motionprune.scoring import ImportanceScores, topk_per_view
from motionprune.se3 import (ActionIncrement, ActionWindow, Pose,
                             compose_step, window_distance)

__all__ = [
    "BindingError",
    "SessionHandle",
    "session_open",
    "session_step",
    "select_tokens",
    "config_echo",
    "version",
    "core_version",
]

__version__ = "0.1.0"

_ERROR_CODES = (
    (ConfigError, "invalid-config"),
    (ParseError, "parse-error"),
    (DegenerateInput, "degenerate-input"),
    (InvalidState, "invalid-state"),
    (InvalidArgument, "invalid-argument"),
    (MotionPruneError, "internal"),
)


class BindingError(Exception):
    """Structured boundary error: machine-readable code plus a field path."""

    def __init__(self, code: str, message: str, field: str | None = None):
        super().__init__(message)
        self.code = code
        self.message = message
        self.field = field

    def triple(self) -> tuple:
        return (self.code, self.message, self.field)

    def __repr__(self):
        return f"BindingError(code={self.code!r}, message={self.message!r}, field={self.field!r})"


def _wrap(exc: MotionPruneError, field: str | None = None) -> BindingError:
    for cls, code in _ERROR_CODES:
        if isinstance(exc, cls):
            return BindingError(code, str(exc), getattr(exc, "field", field))
    return BindingError("internal", str(exc), field)


def version() -> str:
    return __version__


def core_version() -> str:
    return motionprune.__version__


class SessionHandle:
    """One live episode: gate state, running end-effector pose, window counter.

    Construct through session_open; the attributes below are read-only from
    the host's point of view.
    """

    def __init__(self, config, config_dict):
        self._config = config
        self._config_dict = config_dict
        self._state = GateState()
        self._pose = Pose.identity()
        self.window_count = 0

    @property
    def omega(self) -> int:
        return self._config.gate.omega

    def step(self, window) -> dict:
        return session_step(self, window)

    def select(self, importance, view_lengths, rho=None, alpha=None) -> list:
        return select_tokens(self, importance, view_lengths, rho, alpha)

    def echo(self) -> str:
        return config_echo(self)


def session_open(config_json: str) -> SessionHandle:
    """Validate a config JSON string and return a fresh session at window 0."""
    if not isinstance(config_json, str):
        raise BindingError("invalid-argument", "config must be a JSON string", "<root>")
    try:
        obj = json.loads(config_json)
    except json.JSONDecodeError as exc:
        raise BindingError("parse-error", f"bad config JSON: {exc}", "<root>") from exc
    try:
        config = parse_config(obj)
    except MotionPruneError as exc:
        raise _wrap(exc) from exc
    return SessionHandle(config, config.to_dict())


def config_echo(handle: SessionHandle) -> str:
    """The session's effective config as JSON; reopening it is a no-op change."""
    return json.dumps(handle._config_dict, sort_keys=True)


def session_step(handle: SessionHandle, window) -> dict:
    """Advance one action window; returns {"s": 0|1, "delta": float, "k": int|None}.

    delta chains the end-effector pose across all windows fed to this session,
    so a full replay is bit-equal to the core harness on the same log. k is
    the kept-token count implied by the configured dims and rho (0 on full
    vision windows, None if the config carries no dims).
    """
    arr = np.ascontiguousarray(window, dtype=np.float64)
    omega = handle.omega
    if arr.ndim != 2 or arr.shape != (omega, 7):
        raise BindingError(
            "invalid-argument",
            f"window must have shape ({omega}, 7), got {arr.shape}",
            "window",
        )
    try:
        incs = tuple(ActionIncrement.from_vector(row) for row in arr)
        win = ActionWindow(index=handle.window_count + 1, increments=incs,
                           start_pose=handle._pose)
        delta = window_distance(win)
        _, decision = gate_step(handle._state, handle._config.gate, delta)
    except MotionPruneError as exc:
        raise _wrap(exc, "window") from exc
    pose = handle._pose
    for inc in incs:
        pose = compose_step(pose, inc)
    handle._pose = pose
    handle.window_count += 1

    dims = handle._config.dims
    if decision == 1:
        k = dims.kept_tokens(handle._config.rho) if dims is not None else None
    else:
        k = 0
    return {"s": int(decision), "delta": float(delta), "k": k}


def select_tokens(handle: SessionHandle, importance, view_lengths,
                  rho=None, alpha=None) -> list:
    """Top-K selection over per-view importance; per-view sorted index lists.

    rho and alpha default to the session config. importance is a flat buffer
    of length sum(view_lengths), views concatenated in order.
    """
    values = np.ascontiguousarray(importance, dtype=np.float64)
    if values.ndim != 1:
        raise BindingError("invalid-argument",
                           f"importance must be one-dimensional, got shape {values.shape}",
                           "importance")
    lengths = tuple(int(v) for v in view_lengths)
    rho = handle._config.rho if rho is None else float(rho)
    alpha = handle._config.alpha if alpha is None else tuple(float(a) for a in alpha)
    try:
        scores = ImportanceScores(values, lengths)
        decision = topk_per_view(scores, rho, alpha)
    except MotionPruneError as exc:
        raise _wrap(exc) from exc
    return [idx.tolist() for idx in decision.kept_indices]
