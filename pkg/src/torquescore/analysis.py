"""Dataset-level analytics over scored clips.

Means over record subsets are computed from exact integer sums (every
float is scaled to a common power-of-two denominator), so the fast
prefix-sum scans return bit-for-bit the same values as summing each
subset from scratch.
"""
from __future__ import annotations

import itertools
import math
from bisect import bisect_left
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .difficulty import DiversityWeights
from .errors import DegenerateVariance, EmptyStratum, LengthMismatch, TooFewRecords, ValidationError
from .motion import MotionSequence
from .rigidbody import KinematicModel, forward_kinematics

LOW_CONFIDENCE_RHO = 0.2


@dataclass(frozen=True)
class ScoredRecord:
    clip_id: str
    mds: float
    error: float | None = None


@dataclass(frozen=True)
class MidResult:
    threshold: float
    mu_low: float
    mu_high: float
    gap: float
    low_count: int
    high_count: int

    def as_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "mu_low": self.mu_low,
            "mu_high": self.mu_high,
            "gap": self.gap,
            "counts": {"low": self.low_count, "high": self.high_count},
        }


@dataclass(frozen=True)
class CorrelationReport:
    pearson_r: float
    spearman_rho: float
    kendall_tau: float
    n: int

    def as_dict(self) -> dict:
        return {"pearson": self.pearson_r, "spearman": self.spearman_rho, "kendall": self.kendall_tau, "n": self.n}


@dataclass(frozen=True)
class CalibrationResult:
    weights: DiversityWeights
    rho: float
    low_confidence: bool
    evaluated: int


# ---------------------------------------------------------------------------
# imitation error


def mpjpe_from_positions(reference: np.ndarray, tracked: np.ndarray, root_align: bool = False) -> float:
    """Mean per-joint Euclidean distance (input metres, result millimetres) over ``(t, J, 3)`` arrays."""
    reference = np.asarray(reference, dtype=float)
    tracked = np.asarray(tracked, dtype=float)
    if reference.shape != tracked.shape:
        raise LengthMismatch(f"position arrays differ in shape: {reference.shape} vs {tracked.shape}")
    if root_align:
        reference = reference - reference[:, :1, :]
        tracked = tracked - tracked[:, :1, :]
    return float(np.mean(np.linalg.norm(reference - tracked, axis=-1)) * 1000.0)


def _positions(model: KinematicModel, seq: MotionSequence) -> np.ndarray:
    return forward_kinematics(model, seq.frames)[0]


def mpjpe_g(model: KinematicModel, reference: MotionSequence, tracked: MotionSequence) -> float:
    """Global MPJPE in mm: no alignment of any kind."""
    if reference.t != tracked.t:
        raise LengthMismatch(f"sequences differ in length: {reference.t} vs {tracked.t}")
    return mpjpe_from_positions(_positions(model, reference), _positions(model, tracked))


def mpjpe_l(model: KinematicModel, reference: MotionSequence, tracked: MotionSequence) -> float:
    """Root-aligned MPJPE in mm: each frame's root joint is translated onto the reference root."""
    if reference.t != tracked.t:
        raise LengthMismatch(f"sequences differ in length: {reference.t} vs {tracked.t}")
    return mpjpe_from_positions(_positions(model, reference), _positions(model, tracked), root_align=True)


# ---------------------------------------------------------------------------
# exact means


def _scaled_ints(values) -> tuple[list[int], int]:
    """Integers ``n_i`` and a shift ``k`` with ``values[i] == n_i / 2**k`` exactly."""
    ratios = [float(v).as_integer_ratio() for v in values]
    k = max((d.bit_length() - 1 for _n, d in ratios), default=0)
    return [n << (k - (d.bit_length() - 1)) for n, d in ratios], k


def _exact_mean(total: int, count: int, shift: int) -> float:
    # int / int true division is correctly rounded
    return total / (count << shift)


def _require_errors(records) -> None:
    for r in records:
        if r.error is None or not math.isfinite(r.error) or not math.isfinite(r.mds):
            raise ValidationError(f"record {r.clip_id!r} needs finite mds and error values")


def mid(records, min_partition: int = 1) -> MidResult:
    """Maximum imitable difficulty: the MDS split maximizing ``mu_high - mu_low``.

    Candidates are the observed MDS values below the maximum; a record with
    MDS exactly at the threshold belongs to the low partition. Ties go to the
    smallest threshold.
    """
    records = list(records)
    _require_errors(records)
    if min_partition < 1:
        raise ValidationError("min_partition must be >= 1")
    if len(records) < 2 * min_partition:
        raise TooFewRecords(f"MID needs at least {2 * min_partition} records, got {len(records)}")
    order = sorted(range(len(records)), key=lambda i: records[i].mds)
    mds = [records[i].mds for i in order]
    ints, shift = _scaled_ints(records[i].error for i in order)
    prefix = list(itertools.accumulate(ints, initial=0))
    n, total = len(mds), prefix[-1]
    best = None
    for i in range(n - 1):
        if mds[i] == mds[i + 1]:
            continue
        low = i + 1
        if low < min_partition or n - low < min_partition:
            continue
        mu_low = _exact_mean(prefix[low], low, shift)
        mu_high = _exact_mean(total - prefix[low], n - low, shift)
        gap = mu_high - mu_low
        if best is None or gap > best.gap:
            best = MidResult(mds[i], mu_low, mu_high, gap, low, n - low)
    if best is None:
        raise TooFewRecords("no MDS threshold leaves both partitions non-empty")
    return best


def dsje(records, c: float) -> float:
    """Mean error over records with MDS strictly below ``c``."""
    return dsje_many(records, [c])[c]


def dsje_many(records, thresholds) -> dict:
    records = list(records)
    _require_errors(records)
    order = sorted(range(len(records)), key=lambda i: records[i].mds)
    mds = [records[i].mds for i in order]
    ints, shift = _scaled_ints(records[i].error for i in order)
    prefix = list(itertools.accumulate(ints, initial=0))
    out = {}
    for c in thresholds:
        k = bisect_left(mds, c)
        if k == 0:
            raise EmptyStratum(f"no records with MDS < {c}")
        out[c] = _exact_mean(prefix[k], k, shift)
    return out


def stratum(records, c: float) -> set[str]:
    return {r.clip_id for r in records if r.mds < c}


def exclude_outliers(records, error_above: float = 250.0, mds_above: float = 350.0) -> list[ScoredRecord]:
    """Drop near-failure records whose error and MDS both exceed the given cut-offs."""
    return [r for r in records if not (r.error is not None and r.error > error_above and r.mds > mds_above)]


# ---------------------------------------------------------------------------
# correlation


def _check_pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"correlation inputs must be equal-length vectors, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise TooFewRecords("correlation needs at least 2 samples")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValidationError("correlation inputs must be finite")
    return x, y


def pearson(x, y) -> float:
    x, y = _check_pair(x, y)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = math.fsum(dx * dx), math.fsum(dy * dy)
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateVariance("a variable is constant; correlation is undefined")
    r = math.fsum(dx * dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def spearman(x, y) -> float:
    x, y = _check_pair(x, y)
    return pearson(rankdata(x, method="average"), rankdata(y, method="average"))


def _merge_count(seq: list) -> tuple[list, int]:
    """Sort ``seq`` and count strict inversions (pairs i < j with seq[i] > seq[j])."""
    if len(seq) < 2:
        return seq, 0
    mid_ = len(seq) // 2
    left, a = _merge_count(seq[:mid_])
    right, b = _merge_count(seq[mid_:])
    merged, inv, i, j = [], a + b, 0, 0
    while i < len(left) and j < len(right):
        if right[j] < left[i]:
            merged.append(right[j])
            inv += len(left) - i
            j += 1
        else:
            merged.append(left[i])
            i += 1
    merged.extend(left[i:])
    merged.extend(right[j:])
    return merged, inv


def _tie_pairs(values) -> int:
    return sum(c * (c - 1) // 2 for c in Counter(values).values())


def kendall_tau_b(x, y) -> float:
    """Tie-corrected Kendall tau-b in O(n log n) (Knight's merge-sort method)."""
    x, y = _check_pair(x, y)
    n = x.size
    order = np.lexsort((y, x))
    xs, ys = x[order], y[order]
    n0 = n * (n - 1) // 2
    xl, yl = xs.tolist(), ys.tolist()
    n1 = _tie_pairs(xl)
    n2 = _tie_pairs(yl)
    n3 = _tie_pairs(zip(xl, yl)) if n1 else 0
    _sorted, swaps = _merge_count(yl)
    if n0 == n1 or n0 == n2:
        raise DegenerateVariance("a variable is constant; Kendall tau is undefined")
    s = n0 - n1 - n2 + n3 - 2 * swaps
    tau = s / math.sqrt((n0 - n1) * (n0 - n2))
    return min(1.0, max(-1.0, tau))


def correlations(records) -> CorrelationReport:
    records = list(records)
    _require_errors(records)
    x = [r.mds for r in records]
    y = [r.error for r in records]
    return CorrelationReport(pearson(x, y), spearman(x, y), kendall_tau_b(x, y), len(records))


# ---------------------------------------------------------------------------
# weight calibration


def parse_grid(spec: str) -> list[float]:
    """``"lo:hi:step"`` (inclusive) or a comma-separated list of values."""
    spec = spec.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValidationError(f"grid range must be lo:hi:step, got {spec!r}")
        lo, hi, step = (float(p) for p in parts)
        if step <= 0 or hi < lo:
            raise ValidationError(f"invalid grid range {spec!r}")
        count = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return [round(lo + i * step, 12) for i in range(count)]
    try:
        vals = [float(p) for p in spec.split(",") if p.strip()]
    except ValueError:
        raise ValidationError(f"grid values must be numbers, got {spec!r}") from None
    if not vals:
        raise ValidationError("empty grid")
    return vals


def calibrate_weights(components, errors, grid, min_rows: int = 10) -> CalibrationResult:
    """Grid-search weights maximizing Spearman's rho between weighted components and errors.

    ``grid`` is either one value list shared by all three weights or a
    triple of lists. Ties prefer the smaller L1 norm, then lexicographic order.
    """
    comp = np.asarray(components, dtype=float)
    err = np.asarray(errors, dtype=float)
    if comp.ndim != 2 or comp.shape[1] != 3:
        raise ValidationError("components must be an (n, 3) table of d1, d2, d3")
    if comp.shape[0] != err.shape[0]:
        raise LengthMismatch("component and error tables differ in length")
    if comp.shape[0] < min_rows:
        raise TooFewRecords(f"calibration needs at least {min_rows} rows, got {comp.shape[0]}")
    grids = [list(g) for g in grid] if grid and isinstance(grid[0], (list, tuple)) else [list(grid)] * 3
    if any(not g for g in grids):
        raise ValidationError("calibration grid is empty")
    err_ranks = rankdata(err, method="average")
    best_key, best_w, best_rho, evaluated = None, None, None, 0
    for w in itertools.product(*grids):
        if all(v == 0 for v in w):
            continue
        score = comp @ np.array(w)
        try:
            rho = pearson(rankdata(score, method="average"), err_ranks)
        except DegenerateVariance:
            continue
        evaluated += 1
        key = (-round(rho, 12), sum(abs(v) for v in w), w)
        if best_key is None or key < best_key:
            best_key, best_w, best_rho = key, w, rho
    if best_w is None:
        raise DegenerateVariance("every weight triple in the grid gives a constant score")
    return CalibrationResult(DiversityWeights(*best_w), best_rho, best_rho < LOW_CONFIDENCE_RHO, evaluated)
