"""Builders for the shipped fixture models and synthetic motion clips.

The default humanoid mirrors the 24-joint SMPL topology in a z-up frame
(x forward, y left). Segment masses follow anthropometric fractions scaled
to 70 kg; inertias are solid ellipsoids spanning each segment.
"""
from __future__ import annotations

import numpy as np

from .rigidbody import JointSpec, KinematicModel

TOTAL_MASS = 70.0
STAND_HEIGHT = 0.95

# name, parent, offset (m, in parent frame), relative mass, ellipsoid radius (m)
_SMPL_TREE = [
    ("pelvis", -1, (0.0, 0.0, 0.0), 8.0, 0.12),
    ("left_hip", 0, (0.0, 0.09, -0.08), 7.0, 0.07),
    ("right_hip", 0, (0.0, -0.09, -0.08), 7.0, 0.07),
    ("spine1", 0, (0.0, 0.0, 0.11), 5.0, 0.11),
    ("left_knee", 1, (0.0, 0.01, -0.38), 3.0, 0.05),
    ("right_knee", 2, (0.0, -0.01, -0.38), 3.0, 0.05),
    ("spine2", 3, (0.0, 0.0, 0.13), 5.0, 0.11),
    ("left_ankle", 4, (0.0, 0.0, -0.40), 1.0, 0.04),
    ("right_ankle", 5, (0.0, 0.0, -0.40), 1.0, 0.04),
    ("spine3", 6, (0.0, 0.0, 0.05), 6.0, 0.12),
    ("left_foot", 7, (0.12, 0.0, -0.06), 0.3, 0.03),
    ("right_foot", 8, (0.12, 0.0, -0.06), 0.3, 0.03),
    ("neck", 9, (0.0, 0.0, 0.22), 1.2, 0.05),
    ("left_collar", 9, (0.0, 0.07, 0.15), 1.5, 0.04),
    ("right_collar", 9, (0.0, -0.07, 0.15), 1.5, 0.04),
    ("head", 12, (0.03, 0.0, 0.09), 4.8, 0.09),
    ("left_shoulder", 13, (0.0, 0.11, 0.03), 1.9, 0.045),
    ("right_shoulder", 14, (0.0, -0.11, 0.03), 1.9, 0.045),
    ("left_elbow", 16, (0.0, 0.26, 0.0), 1.2, 0.035),
    ("right_elbow", 17, (0.0, -0.26, 0.0), 1.2, 0.035),
    ("left_wrist", 18, (0.0, 0.25, 0.0), 0.45, 0.03),
    ("right_wrist", 19, (0.0, -0.25, 0.0), 0.45, 0.03),
    ("left_hand", 20, (0.0, 0.08, 0.0), 0.15, 0.02),
    ("right_hand", 21, (0.0, -0.08, 0.0), 0.15, 0.02),
]

# segment direction for leaves and for the pelvis (whose first child is a hip)
_SEGMENT_OVERRIDE = {
    "pelvis": (0.0, 0.0, 0.10),
    "left_foot": (0.06, 0.0, 0.0),
    "right_foot": (0.06, 0.0, 0.0),
    "head": (0.0, 0.0, 0.20),
    "left_hand": (0.0, 0.08, 0.0),
    "right_hand": (0.0, -0.08, 0.0),
}

JOINT_INDEX = {name: i for i, (name, *_rest) in enumerate(_SMPL_TREE)}


def ellipsoid_inertia(mass: float, segment: np.ndarray, radius: float) -> np.ndarray:
    """Inertia about the centroid of a solid spheroid whose long axis spans ``segment``."""
    length = float(np.linalg.norm(segment))
    half = max(length / 2.0, radius)
    u = segment / length if length > 0 else np.array([0.0, 0.0, 1.0])
    uu = np.outer(u, u)
    return mass / 5.0 * (2.0 * radius**2 * uu + (half**2 + radius**2) * (np.eye(3) - uu))


def build_default_humanoid() -> KinematicModel:
    rel_total = sum(row[3] for row in _SMPL_TREE)
    first_child = {}
    for i, (_name, parent, *_r) in enumerate(_SMPL_TREE):
        if parent >= 0:
            first_child.setdefault(parent, i)
    joints = []
    for i, (name, parent, offset, rel_mass, radius) in enumerate(_SMPL_TREE):
        if name in _SEGMENT_OVERRIDE:
            seg = np.array(_SEGMENT_OVERRIDE[name])
        else:
            seg = np.array(_SMPL_TREE[first_child[i]][2])
        mass = TOTAL_MASS * rel_mass / rel_total
        joints.append(
            JointSpec(name, parent, np.array(offset), mass, seg / 2.0, ellipsoid_inertia(mass, seg, radius))
        )
    return KinematicModel(tuple(joints))


def build_pendulum(mass: float = 1.0, length: float = 1.0) -> KinematicModel:
    """Point mass hanging ``length`` below the root pivot (J=1)."""
    return KinematicModel(
        (JointSpec("pivot", -1, np.zeros(3), mass, np.array([0.0, 0.0, -length]), np.zeros((3, 3))),)
    )


def build_double_pendulum(m1=1.0, m2=1.0, l1=1.0, l2=1.0) -> KinematicModel:
    """Two point masses chained about the root pivot (J=2), planar about x."""
    return KinematicModel(
        (
            JointSpec("upper", -1, np.zeros(3), m1, np.array([0.0, 0.0, -l1]), np.zeros((3, 3))),
            JointSpec("lower", 0, np.array([0.0, 0.0, -l1]), m2, np.array([0.0, 0.0, -l2]), np.zeros((3, 3))),
        )
    )


def build_chain3() -> KinematicModel:
    """Small non-planar 3-body chain with full inertias, used for 3D dynamics checks."""
    seg = [np.array([0.0, 0.0, -0.4]), np.array([0.1, 0.0, -0.35]), np.array([0.0, 0.15, -0.3])]
    masses = [2.0, 1.5, 1.0]
    joints = []
    offset = np.zeros(3)
    for i, (s, m) in enumerate(zip(seg, masses)):
        joints.append(JointSpec(f"link{i}", i - 1, offset, m, s / 2 + 0.01 * i, ellipsoid_inertia(m, s, 0.05)))
        offset = s
    return KinematicModel(tuple(joints))


# ---------------------------------------------------------------------------
# motions


def _pose_track(t: np.ndarray, model: KinematicModel) -> np.ndarray:
    q = np.zeros((t.size, model.N))
    q[:, 2] = STAND_HEIGHT
    return q


def _set(q, joint: str, axis: int, values):
    q[:, 3 + 3 * JOINT_INDEX[joint] + axis] = values


def static_stand(model: KinematicModel, frames: int = 100, fps: float = 30.0) -> np.ndarray:
    """Upright standing pose with arms slightly lowered; no motion."""
    t = np.arange(frames) / fps
    q = _pose_track(t, model)
    _set(q, "left_shoulder", 0, -1.2)
    _set(q, "right_shoulder", 0, 1.2)
    return q


def slow_wave(model: KinematicModel, frames: int = 100, fps: float = 30.0) -> np.ndarray:
    """Standing with the right arm raised and waving slowly."""
    t = np.arange(frames) / fps
    q = static_stand(model, frames, fps)
    _set(q, "right_shoulder", 0, -0.9 + 0.25 * np.sin(2 * np.pi * 0.43 * t))
    _set(q, "right_elbow", 2, 0.6 + 0.35 * np.sin(2 * np.pi * 0.91 * t))
    _set(q, "right_wrist", 0, 0.2 * np.sin(2 * np.pi * 0.91 * t + 0.5))
    _set(q, "spine3", 0, 0.03 * np.sin(2 * np.pi * 0.43 * t))
    return q


def fast_spin(model: KinematicModel, frames: int = 100, fps: float = 30.0) -> np.ndarray:
    """Fast pirouette about the vertical axis with a lifted, kicking left leg."""
    t = np.arange(frames) / fps
    q = _pose_track(t, model)
    spin = 2 * np.pi * 1.37 * t
    q[:, 2] = STAND_HEIGHT + 0.05 * np.sin(2 * np.pi * 2.71 * t)
    q[:, 0] = 0.1 * np.sin(spin)
    q[:, 1] = 0.1 * (1 - np.cos(spin))
    q[:, 3 + 2] = np.angle(np.exp(1j * spin))  # root yaw, stored wrapped
    q[:, 3 + 0] = 0.1 * np.sin(2 * np.pi * 1.37 * t)
    _set(q, "left_hip", 1, -1.1 - 0.3 * np.sin(2 * np.pi * 1.93 * t))
    _set(q, "left_hip", 0, 0.3 * np.sin(2 * np.pi * 1.93 * t + 1.0))
    _set(q, "left_knee", 1, 0.9 + 0.6 * np.sin(2 * np.pi * 1.93 * t + 0.7))
    _set(q, "right_knee", 1, 0.15 + 0.1 * np.sin(2 * np.pi * 2.71 * t))
    _set(q, "spine2", 2, 0.25 * np.sin(2 * np.pi * 1.37 * t))
    _set(q, "left_shoulder", 0, -0.3 + 0.6 * np.sin(2 * np.pi * 1.37 * t))
    _set(q, "right_shoulder", 0, 0.3 + 0.6 * np.sin(2 * np.pi * 1.37 * t + 1.3))
    _set(q, "left_elbow", 2, -0.8 + 0.5 * np.sin(2 * np.pi * 2.71 * t))
    _set(q, "right_elbow", 2, 0.8 + 0.5 * np.sin(2 * np.pi * 2.71 * t + 0.4))
    _set(q, "head", 2, 0.4 * np.sin(2 * np.pi * 1.37 * t + 2.0))
    return q


SYNTHETIC_MOTIONS = {
    "static_stand": static_stand,
    "slow_wave": slow_wave,
    "fast_spin": fast_spin,
}
