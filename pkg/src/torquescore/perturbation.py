"""Torque-sensitivity Jacobians of the per-frame reduced torque map.

For each frame the state ``s = (q, qdot, qddot)`` is perturbed along every
coordinate direction and the per-joint torque magnitudes are differenced
centrally. Frames are independent; each chunk of frames is evaluated as one
batched inverse-dynamics call.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, TooShort, ValidationError
from .motion import Clip, MotionSequence, estimate_derivatives
from .rigidbody import EULER_SINGULAR_TOL, GeneralizedState, KinematicModel, rnea

UNSCORABLE_DEGENERATE_FRACTION = 0.10


@dataclass(frozen=True)
class PerturbationConfig:
    """Perturbation radii and numerical guards.

    ``eps_qdot`` and ``eps_qddot`` default to ``eps_q * fps`` and
    ``eps_q * fps**2`` so every block corresponds to a comparable pose
    displacement over one frame. ``directions="theta"`` restricts
    perturbations to the Euler-angle part of ``q``.
    """

    eps_q: float = 1e-4
    eps_qdot: float | None = None
    eps_qddot: float | None = None
    delta: float = 1e-8
    floor_ratio: float = 1e-12
    directions: str = "full"

    def __post_init__(self):
        for name in ("eps_q", "eps_qdot", "eps_qddot", "delta", "floor_ratio"):
            v = getattr(self, name)
            if v is not None and not (np.isfinite(v) and v > 0):
                raise ValidationError(f"{name} must be strictly positive, got {v}")
        if self.directions not in ("full", "theta"):
            raise ValidationError(f"directions must be 'full' or 'theta', got {self.directions!r}")

    def block_steps(self, fps: float) -> tuple[float, float, float]:
        return (
            self.eps_q,
            self.eps_qdot if self.eps_qdot is not None else self.eps_q * fps,
            self.eps_qddot if self.eps_qddot is not None else self.eps_q * fps * fps,
        )

    def direction_indices(self, N: int) -> np.ndarray:
        """Indices into the 3N state vector that get perturbed."""
        if self.directions == "theta":
            return np.arange(3, N)
        return np.arange(3 * N)

    def steps(self, N: int, fps: float) -> np.ndarray:
        eq, ed, edd = self.block_steps(fps)
        full = np.concatenate([np.full(N, eq), np.full(N, ed), np.full(N, edd)])
        return full[self.direction_indices(N)]

    def as_dict(self, fps: float | None = None) -> dict:
        d = {
            "eps_q": self.eps_q,
            "eps_qdot": self.eps_qdot,
            "eps_qddot": self.eps_qddot,
            "delta": self.delta,
            "floor_ratio": self.floor_ratio,
            "directions": self.directions,
        }
        if fps is not None:
            d["effective_steps"] = list(self.block_steps(fps))
        return d


@dataclass(frozen=True)
class FrameJacobian:
    matrix: np.ndarray  # (J, D)
    frame: int
    degenerate: bool = False


@dataclass(frozen=True)
class StackedJacobian:
    """Row ``i`` is frame ``i``'s J x D Jacobian flattened row-major over (joint, direction)."""

    matrix: np.ndarray  # (t, J * D)
    J: int
    D: int
    degenerate: np.ndarray  # (t,) bool

    @property
    def t(self) -> int:
        return self.matrix.shape[0]

    @property
    def rank_bound(self) -> int:
        return min(self.t, self.J * self.D)

    @property
    def frames(self) -> np.ndarray:
        return self.matrix.reshape(self.t, self.J, self.D)

    @property
    def degenerate_fraction(self) -> float:
        return float(np.mean(self.degenerate)) if self.t else 0.0

    @property
    def scorable(self) -> bool:
        return self.degenerate_fraction <= UNSCORABLE_DEGENERATE_FRACTION

    def frame_jacobians(self) -> list[FrameJacobian]:
        return [FrameJacobian(m, i, bool(d)) for i, (m, d) in enumerate(zip(self.frames, self.degenerate))]

    def select(self, rows) -> "StackedJacobian":
        return StackedJacobian(self.matrix[rows], self.J, self.D, self.degenerate[rows])

    @classmethod
    def from_frames(cls, frames: list[FrameJacobian]) -> "StackedJacobian":
        mats = np.stack([f.matrix for f in frames])
        t, J, D = mats.shape
        return cls(mats.reshape(t, J * D), J, D, np.array([f.degenerate for f in frames], dtype=bool))


def joint_torque_reduction(tau, model: KinematicModel, delta: float = 1e-8) -> np.ndarray:
    """Smoothed per-joint torque magnitude ``sqrt(|tau_j|^2 + delta^2) - delta``.

    Works on ``(..., N)`` arrays; the root's translational residual is dropped.
    """
    tau = np.asarray(tau, dtype=float)
    if tau.shape[-1:] != (model.N,):
        raise DimensionMismatch(f"expected torque vectors of length N={model.N}, got shape {tau.shape}")
    tj = tau[..., 3:].reshape(tau.shape[:-1] + (model.J, 3))
    sq = tj[..., 0] * tj[..., 0] + tj[..., 1] * tj[..., 1] + tj[..., 2] * tj[..., 2]
    d2 = delta * delta
    # sqrt(x + d^2) - d rewritten as x / (sqrt(x + d^2) + d): no cancellation for tiny x
    return sq / (np.sqrt(sq + d2) + delta)


def _perturbed_states(states: np.ndarray, idx: np.ndarray, steps: np.ndarray) -> np.ndarray:
    """``(F, 3N)`` states -> ``(F, 2, D, 3N)`` with +step / -step along each direction."""
    F, S = states.shape
    D = idx.size
    out = np.broadcast_to(states[:, None, None, :], (F, 2, D, S)).copy()
    cols = np.arange(D)
    out[:, 0, cols, idx] += steps
    out[:, 1, cols, idx] -= steps
    return out


def _torques(model: KinematicModel, states: np.ndarray):
    N = model.N
    return rnea(model, states[..., :N], states[..., N : 2 * N], states[..., 2 * N :])


def _chunk_jacobians(model, states, cfg, fps, reduce=True):
    N = model.N
    idx = cfg.direction_indices(N)
    steps = cfg.steps(N, fps)
    batch = _perturbed_states(states, idx, steps)
    tau, min_sv = _torques(model, batch)
    out = joint_torque_reduction(tau, model, cfg.delta) if reduce else tau
    jac = (out[:, 0] - out[:, 1]) / (2.0 * steps[:, None])  # (F, D, rows)
    jac = np.swapaxes(jac, 1, 2)
    degenerate = np.any(min_sv < EULER_SINGULAR_TOL, axis=(1, 2))
    degenerate |= ~np.all(np.isfinite(jac), axis=(1, 2))
    jac[degenerate] = 0.0
    return jac, degenerate


def _state_vector(model: KinematicModel, s: GeneralizedState) -> np.ndarray:
    v = s.as_vector()
    if v.size != 3 * model.N:
        raise DimensionMismatch(f"state has {v.size // 3} coordinates, model has N={model.N}")
    return v


def frame_jacobian(model: KinematicModel, s: GeneralizedState, cfg: PerturbationConfig,
                   fps: float = 30.0, frame: int = 0) -> FrameJacobian:
    """Central-difference Jacobian of the reduced torques, shape ``(J, D)``."""
    jac, deg = _chunk_jacobians(model, _state_vector(model, s)[None], cfg, fps)
    return FrameJacobian(jac[0], frame, bool(deg[0]))


def torque_jacobian(model: KinematicModel, s: GeneralizedState, cfg: PerturbationConfig,
                    fps: float = 30.0) -> np.ndarray:
    """Pre-reduction hook: central-difference ``d tau / d s``, shape ``(N, D)``."""
    jac, deg = _chunk_jacobians(model, _state_vector(model, s)[None], cfg, fps, reduce=False)
    if deg[0]:
        jac[0] = np.nan
    return jac[0]


def clip_states(model: KinematicModel, clip: Clip | MotionSequence) -> np.ndarray:
    if clip.qdot is None or clip.qddot is None:
        raise ValidationError("clip has no velocity/acceleration tracks; run estimate_derivatives first")
    if clip.frames.shape[1] != model.N:
        raise DimensionMismatch(f"clip frames have {clip.frames.shape[1]} entries, model has N={model.N}")
    return np.concatenate([clip.frames, clip.qdot, clip.qddot], axis=1)


def sequence_jacobians(model: KinematicModel, clip: Clip | MotionSequence, cfg: PerturbationConfig,
                       chunk: int = 8, workers: int = 1) -> StackedJacobian:
    """Stack per-frame Jacobians of a clip into a ``(t, J * D)`` matrix.

    Frames are processed in chunks, optionally on a thread pool; the
    per-frame arithmetic is elementwise, so results do not depend on
    ``chunk`` or ``workers``.
    """
    states = clip_states(model, clip)
    t = states.shape[0]
    if t < 1:
        raise TooShort("clip has no frames")
    starts = range(0, t, max(1, chunk))

    def run(start):
        return _chunk_jacobians(model, states[start : start + chunk], cfg, clip.fps)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(s) for s in starts]
    jac = np.concatenate([p[0] for p in parts])
    deg = np.concatenate([p[1] for p in parts])
    return StackedJacobian(jac.reshape(t, -1), model.J, jac.shape[2], deg)


def motion_jacobians(model: KinematicModel, seq: MotionSequence, cfg: PerturbationConfig, **kw) -> StackedJacobian:
    if not seq.has_derivatives:
        seq = estimate_derivatives(seq)
    return sequence_jacobians(model, seq, cfg, **kw)
