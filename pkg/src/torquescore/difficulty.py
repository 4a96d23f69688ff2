"""Spectral, variance and segment diversity, and the weighted difficulty score."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AllDegenerate, EmptyStack, TooShort, ValidationError
from .perturbation import FrameJacobian, StackedJacobian

ABSOLUTE_FLOOR = 1e-300
VAR_FLOOR = 1e-20
DEFAULT_K = 4
SPECTRAL_MODES = ("stacked", "per_frame")


@dataclass(frozen=True)
class DiversityWeights:
    w1: float = 1.0
    w2: float = -1.0
    w3: float = 1.0

    def __post_init__(self):
        vals = (self.w1, self.w2, self.w3)
        if not all(math.isfinite(v) for v in vals):
            raise ValidationError(f"weights must be finite, got {vals}")
        if all(v == 0 for v in vals):
            raise ValidationError("weights must not all be zero")

    @classmethod
    def parse(cls, text: str) -> "DiversityWeights":
        parts = [p for p in text.replace(" ", "").split(",") if p]
        if len(parts) != 3:
            raise ValidationError(f"expected three comma-separated weights, got {text!r}")
        try:
            return cls(*(float(p) for p in parts))
        except ValueError:
            raise ValidationError(f"weights must be numbers, got {text!r}") from None

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.w1, self.w2, self.w3)

    def combine(self, d1: float, d2: float, d3: float) -> float:
        return self.w1 * d1 + self.w2 * d2 + self.w3 * d3


@dataclass(frozen=True)
class SpectralResult:
    value: float
    rank: int
    n_clamped: int
    zero_stack: bool


@dataclass(frozen=True)
class DifficultyBreakdown:
    d1: float
    d2: float
    d3: float
    mds: float
    degenerate_fraction: float
    K: int
    weights: DiversityWeights = field(default_factory=DiversityWeights)
    warnings: tuple[str, ...] = ()

    @property
    def scorable(self) -> bool:
        from .perturbation import UNSCORABLE_DEGENERATE_FRACTION

        return self.degenerate_fraction <= UNSCORABLE_DEGENERATE_FRACTION


def _as_matrix(stack) -> np.ndarray:
    m = stack.matrix if isinstance(stack, StackedJacobian) else np.asarray(stack, dtype=float)
    if m.ndim != 2 or m.size == 0:
        raise EmptyStack("spectral diversity needs a non-empty 2-D stack")
    return m


def log_singular_sum(sigma: np.ndarray, floor_ratio: float) -> SpectralResult:
    """Sum of logs of descending singular values, each clamped at ``floor_ratio * sigma[0]``."""
    r = sigma.size
    top = float(sigma[0]) if r else 0.0
    if top <= 0.0:
        return SpectralResult(r * math.log(ABSOLUTE_FLOOR), r, r, True)
    floor = floor_ratio * top
    clamped = int(np.count_nonzero(sigma < floor))
    return SpectralResult(float(np.sum(np.log(np.maximum(sigma, floor)))), r, clamped, False)


def spectral_details(stack, floor_ratio: float = 1e-12, mode: str = "stacked") -> SpectralResult:
    m = _as_matrix(stack)
    if mode == "stacked":
        return log_singular_sum(np.linalg.svd(m, compute_uv=False), floor_ratio)
    if mode == "per_frame":
        if not isinstance(stack, StackedJacobian):
            raise ValidationError("per_frame spectral mode needs a StackedJacobian")
        total, rank, clamped, zero = 0.0, 0, 0, False
        for frame in stack.frames:
            res = log_singular_sum(np.linalg.svd(frame, compute_uv=False), floor_ratio)
            total += res.value
            rank += res.rank
            clamped += res.n_clamped
            zero |= res.zero_stack
        return SpectralResult(total, rank, clamped, zero)
    raise ValidationError(f"unknown spectral mode {mode!r}; expected one of {SPECTRAL_MODES}")


def spectral_diversity(stack, floor_ratio: float = 1e-12, mode: str = "stacked") -> float:
    """Sum of the log singular values of the stacked torque-sensitivity Jacobian."""
    return spectral_details(stack, floor_ratio, mode).value


def _frames_array(frames) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(frames, StackedJacobian):
        return frames.frames, frames.degenerate
    if len(frames) and isinstance(frames[0], FrameJacobian):
        return np.stack([f.matrix for f in frames]), np.array([f.degenerate for f in frames], dtype=bool)
    arr = np.asarray(frames, dtype=float)
    if arr.ndim != 3:
        raise ValidationError("expected frames of shape (t, J, D)")
    return arr, np.zeros(arr.shape[0], dtype=bool)


def variance_details(frames) -> tuple[float, np.ndarray]:
    arr, degenerate = _frames_array(frames)
    keep = arr[~degenerate]
    if keep.shape[0] == 0:
        raise AllDegenerate("no non-degenerate frames to pool for variance diversity")
    per_joint = np.swapaxes(keep, 0, 1).reshape(keep.shape[1], -1)  # (J, t*D)
    n = per_joint.shape[1]
    # fsum is correctly rounded, hence independent of frame/direction order
    var = np.array([math.fsum(row * row) / n - (math.fsum(row) / n) ** 2 for row in per_joint])
    return float(np.sum(np.log(np.maximum(var, VAR_FLOOR)))), var


def variance_diversity(frames) -> float:
    """Sum over joints of the log variance of Jacobian entries pooled over frames and directions."""
    return variance_details(frames)[0]


def segment_bounds(t: int, K: int) -> list[tuple[int, int]]:
    """Contiguous ``[start, stop)`` ranges; earlier segments absorb the remainder."""
    base, extra = divmod(t, K)
    bounds, start = [], 0
    for k in range(K):
        size = base + (1 if k < extra else 0)
        bounds.append((start, start + size))
        start += size
    return bounds


def segment_diversity(frames, K: int = DEFAULT_K, floor_ratio: float = 1e-12, mode: str = "stacked") -> float:
    """Mean spectral diversity over K contiguous temporal segments."""
    stack = frames if isinstance(frames, StackedJacobian) else _stack_from(frames)
    if K < 1:
        raise ValidationError(f"K must be >= 1, got {K}")
    if K > 1 and stack.t < 2 * K:
        raise TooShort(f"segment diversity with K={K} needs at least {2 * K} frames, got {stack.t}")
    return float(sum(segment_values(stack, K, floor_ratio, mode)) / K)


def segment_values(stack: StackedJacobian, K: int = DEFAULT_K, floor_ratio: float = 1e-12,
                   mode: str = "stacked") -> list[float]:
    """Spectral diversity of each of the K contiguous segments."""
    return [spectral_diversity(stack.select(slice(a, b)), floor_ratio, mode) for a, b in segment_bounds(stack.t, K)]


def log_volume_means(log_volumes) -> tuple[float, float]:
    """Logs of the geometric and arithmetic means of ``exp(log_volumes)``.

    The first is what segment diversity reports; AM-GM says it never exceeds
    the second. Computed in the log domain so huge volumes do not overflow.
    """
    v = np.asarray(log_volumes, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValidationError("need a non-empty vector of log volumes")
    top = float(np.max(v))
    log_am = top + math.log(math.fsum(np.exp(v - top)) / v.size)
    return math.fsum(v) / v.size, log_am


def _stack_from(frames) -> StackedJacobian:
    arr, degenerate = _frames_array(frames)
    t, J, D = arr.shape
    return StackedJacobian(arr.reshape(t, J * D), J, D, degenerate)


def compute_mds(stack: StackedJacobian, weights: DiversityWeights | None = None, K: int = DEFAULT_K,
                floor_ratio: float = 1e-12, mode: str = "stacked") -> DifficultyBreakdown:
    weights = weights or DiversityWeights()
    warnings = []
    spec = spectral_details(stack, floor_ratio, mode)
    if spec.zero_stack:
        warnings.append("zero_stack")
    elif spec.n_clamped:
        warnings.append(f"singular_floor:{spec.n_clamped}/{spec.rank}")
    d2, var = variance_details(stack)
    n_floor = int(np.count_nonzero(var < VAR_FLOOR))
    if n_floor:
        warnings.append(f"variance_floor:{n_floor}/{var.size}")
    d3 = segment_diversity(stack, K, floor_ratio, mode)
    frac = stack.degenerate_fraction
    if frac > 0:
        warnings.append(f"degenerate_frames:{int(np.count_nonzero(stack.degenerate))}")
    if not stack.scorable:
        warnings.append("unscorable")
    return DifficultyBreakdown(spec.value, d2, d3, weights.combine(spec.value, d2, d3), frac, K, weights, tuple(warnings))
