"""Rigid-transform composition over windowed 7-DoF action increments.

Each action step carries body-frame translation increments (dx, dy, dz),
Euler-angle increments (dphi, dtheta, dpsi) applied as Rx*Ry*Rz, and a
gripper command g that is carried along but never enters the kinematics.
Windows of omega consecutive increments are folded by right-multiplication
into end-effector poses, and the per-window distance is the cumulative
Euclidean arc length of the resulting positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument

EULER_ORDERS = ("xyz", "xzy", "yxz", "yzx", "zxy", "zyx")


def _rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


_AXIS_ROT = {"x": _rot_x, "y": _rot_y, "z": _rot_z}


def euler_to_rotation(
    dphi: float, dtheta: float, dpsi: float, order: str = "xyz"
) -> np.ndarray:
    """Rotation matrix for intrinsic Euler increments, default Rx(dphi)Ry(dtheta)Rz(dpsi).

    `order` selects which axis consumes which angle slot; the default "xyz"
    matches the body-frame convention used everywhere else in this package.
    """
    if order not in EULER_ORDERS:
        raise InvalidArgument(f"unknown Euler order {order!r}; expected one of {EULER_ORDERS}")
    angles = dict(x=dphi, y=dtheta, z=dpsi)
    for name, val in (("dphi", dphi), ("dtheta", dtheta), ("dpsi", dpsi)):
        if not math.isfinite(val):
            raise InvalidArgument(f"{name} must be finite, got {val!r}")
    r = np.eye(3)
    for axis in order:
        r = r @ _AXIS_ROT[axis](angles[axis])
    return r


@dataclass(frozen=True)
class ActionIncrement:
    """One 7-DoF action step: body-frame translation, Euler rotation, gripper."""

    dx: float
    dy: float
    dz: float
    dphi: float
    dtheta: float
    dpsi: float
    g: float = 0.0

    def __post_init__(self):
        for name in ("dx", "dy", "dz", "dphi", "dtheta", "dpsi", "g"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise InvalidArgument(f"ActionIncrement.{name} must be finite, got {v!r}")

    @classmethod
    def from_vector(cls, vec) -> "ActionIncrement":
        vals = [float(v) for v in vec]
        if len(vals) != 7:
            raise InvalidArgument(f"action vector must have 7 entries, got {len(vals)}")
        return cls(*vals)

    def translation(self) -> np.ndarray:
        return np.array([self.dx, self.dy, self.dz])

    def rotation(self, order: str = "xyz") -> np.ndarray:
        return euler_to_rotation(self.dphi, self.dtheta, self.dpsi, order=order)


@dataclass(frozen=True)
class Pose:
    """End-effector pose: orthonormal rotation (det +1) plus translation in meters."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        if r.shape != (3, 3):
            raise InvalidArgument(f"rotation must be 3x3, got shape {r.shape}")
        if not (np.isfinite(r).all() and np.isfinite(t).all()):
            raise InvalidArgument("pose entries must be finite")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))

    def is_orthonormal(self, tol: float = 1e-6) -> bool:
        r = self.rotation
        return bool(
            np.allclose(r @ r.T, np.eye(3), atol=tol)
            and abs(np.linalg.det(r) - 1.0) <= tol
        )

    def orthonormalized(self) -> "Pose":
        """Project the rotation back onto SO(3) via SVD; use after long compositions."""
        u, _, vt = np.linalg.svd(self.rotation)
        r = u @ vt
        if np.linalg.det(r) < 0:
            u[:, -1] = -u[:, -1]
            r = u @ vt
        return Pose(r, self.translation)

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m


@dataclass(frozen=True)
class ActionWindow:
    """omega consecutive increments starting from a known pose; index is 1-based."""

    index: int
    increments: tuple
    start_pose: Pose = field(default_factory=Pose.identity)

    def __post_init__(self):
        incs = tuple(self.increments)
        if not incs:
            raise InvalidArgument("ActionWindow requires at least one increment")
        for inc in incs:
            if not isinstance(inc, ActionIncrement):
                raise InvalidArgument("increments must be ActionIncrement instances")
        object.__setattr__(self, "increments", incs)

    @property
    def omega(self) -> int:
        return len(self.increments)


def compose_step(pose: Pose, inc: ActionIncrement, order: str = "xyz") -> Pose:
    """Right-multiply one body-frame increment onto a pose."""
    r_inc = inc.rotation(order=order)
    v = inc.translation()
    return Pose(pose.rotation @ r_inc, pose.translation + pose.rotation @ v)


def fk_window(window: ActionWindow, order: str = "xyz") -> np.ndarray:
    """End-effector positions along the window: (omega+1, 3), first row is the start."""
    positions = np.empty((window.omega + 1, 3))
    pose = window.start_pose
    positions[0] = pose.translation
    for u, inc in enumerate(window.increments, start=1):
        pose = compose_step(pose, inc, order=order)
        positions[u] = pose.translation
    return positions


def window_distance(window: ActionWindow, order: str = "xyz") -> float:
    """Cumulative Euclidean arc length of the window's position sequence."""
    positions = fk_window(window, order=order)
    return float(np.linalg.norm(np.diff(positions, axis=0), axis=1).sum())
