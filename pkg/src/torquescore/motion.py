"""Motion sequences: file I/O, derivative estimation, resampling and clip partitioning."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, NonIntegerStride, ParseError, TooShort, ValidationError
from .rigidbody import KinematicModel

MOTION_HEADER = "torquescore-motion v1"
DEFAULT_CLIP_LEN = 100
MIN_CLIP_LEN = 8
MANIFEST_FIELDS = ["clip_id", "source_id", "start_frame", "length", "fps", "d1", "d2", "d3", "mds", "status"]


@dataclass(frozen=True)
class MotionSequence:
    fps: float
    frames: np.ndarray
    source_id: str = ""
    qdot: np.ndarray | None = None
    qddot: np.ndarray | None = None

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=float)
        if frames.ndim != 2 or frames.shape[0] < 1:
            raise ValidationError("a motion needs at least one frame of generalized coordinates")
        if not (np.isfinite(self.fps) and self.fps > 0):
            raise ValidationError(f"fps must be positive, got {self.fps}")
        if not np.all(np.isfinite(frames)):
            raise ValidationError("motion frames contain non-finite values")
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "fps", float(self.fps))
        for attr in ("qdot", "qddot"):
            v = getattr(self, attr)
            if v is not None:
                v = np.asarray(v, dtype=float)
                if v.shape != frames.shape:
                    raise DimensionMismatch(f"{attr} shape {v.shape} does not match frames {frames.shape}")
                object.__setattr__(self, attr, v)

    @property
    def t(self) -> int:
        return self.frames.shape[0]

    @property
    def dof(self) -> int:
        return self.frames.shape[1]

    @property
    def has_derivatives(self) -> bool:
        return self.qdot is not None and self.qddot is not None

    def __len__(self):
        return self.t


@dataclass(frozen=True)
class Clip:
    source_id: str
    start_frame: int
    frames: np.ndarray
    fps: float
    qdot: np.ndarray | None = None
    qddot: np.ndarray | None = None

    @property
    def clip_id(self) -> str:
        return f"{self.source_id}_{self.start_frame:06d}"

    @property
    def length(self) -> int:
        return self.frames.shape[0]

    def as_sequence(self) -> MotionSequence:
        return MotionSequence(self.fps, self.frames, self.clip_id, self.qdot, self.qddot)


@dataclass
class ManifestRow:
    clip_id: str
    source_id: str
    start_frame: int | None
    length: int | None
    fps: float | None
    d1: float | None = None
    d2: float | None = None
    d3: float | None = None
    mds: float | None = None
    status: str = "ok"


# ---------------------------------------------------------------------------
# files


def parse_motion(text: str, source: str = "<string>", source_id: str | None = None) -> MotionSequence:
    fps = dof = None
    header = None
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if header is None:
            header = line
            if header != MOTION_HEADER:
                raise ParseError(f"{source}:{lineno}: expected header {MOTION_HEADER!r}, got {header!r}")
            continue
        tokens = line.split()
        if tokens[0] == "fps":
            fps = _one_number(tokens, float, source, lineno)
        elif tokens[0] == "dof":
            dof = _one_number(tokens, int, source, lineno)
        else:
            if dof is None or fps is None:
                raise ParseError(f"{source}:{lineno}: frame data before 'fps' and 'dof' lines")
            if len(tokens) != dof:
                raise DimensionMismatch(f"{source}:{lineno}: frame has {len(tokens)} entries, expected dof={dof}")
            try:
                rows.append([float(x) for x in tokens])
            except ValueError as exc:
                raise ParseError(f"{source}:{lineno}: {exc}") from None
    if header is None:
        raise ParseError(f"{source}: empty motion file")
    if not rows:
        raise ParseError(f"{source}: motion contains no frames")
    if fps is None or fps <= 0:
        raise ParseError(f"{source}: missing or invalid fps")
    if source_id is None:
        source_id = Path(source).stem
    return MotionSequence(fps, np.array(rows), source_id)


def _one_number(tokens, kind, source, lineno):
    if len(tokens) != 2:
        raise ParseError(f"{source}:{lineno}: expected '{tokens[0]} <value>'")
    try:
        return kind(tokens[1])
    except ValueError:
        raise ParseError(f"{source}:{lineno}: bad {tokens[0]} value {tokens[1]!r}") from None


def load_motion(path, model: KinematicModel | None = None) -> MotionSequence:
    """Load a motion file; with ``model`` given, its frame length must equal ``model.N``."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not UTF-8 ({exc})") from None
    seq = parse_motion(text, str(path))
    if model is not None and seq.dof != model.N:
        raise DimensionMismatch(f"{path}: frames have {seq.dof} entries but the model has N={model.N}")
    return seq


def format_motion(seq: MotionSequence) -> str:
    out = [MOTION_HEADER, f"fps {seq.fps!r}", f"dof {seq.dof}"]
    out.extend(" ".join(repr(float(v)) for v in row) for row in seq.frames)
    return "\n".join(out) + "\n"


def save_motion(seq: MotionSequence, path) -> None:
    Path(path).write_text(format_motion(seq), encoding="utf-8")


def write_manifest(rows, path_or_file) -> None:
    def fmt(v):
        return "" if v is None else (repr(v) if isinstance(v, float) else str(v))

    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MANIFEST_FIELDS)
        for r in rows:
            w.writerow([fmt(getattr(r, f)) for f in MANIFEST_FIELDS])

    if hasattr(path_or_file, "write"):
        emit(path_or_file)
    else:
        with open(path_or_file, "w", newline="", encoding="utf-8") as fh:
            emit(fh)


def read_manifest(path) -> list[ManifestRow]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):

            def num(key, kind=float):
                v = rec.get(key, "")
                return kind(v) if v not in ("", None) else None

            rows.append(
                ManifestRow(
                    rec["clip_id"], rec["source_id"], num("start_frame", int), num("length", int), num("fps"),
                    num("d1"), num("d2"), num("d3"), num("mds"), rec.get("status") or "ok",
                )
            )
    return rows


# ---------------------------------------------------------------------------
# processing


def unwrap_angles(frames: np.ndarray) -> np.ndarray:
    """Unwrap the Euler-angle columns (all but the first three) along time."""
    out = np.array(frames, dtype=float)
    out[:, 3:] = np.unwrap(out[:, 3:], axis=0)
    return out


def estimate_derivatives(seq: MotionSequence) -> MotionSequence:
    """Finite-difference velocities and accelerations in generalized coordinates.

    Interior frames use central differences; the end frames use one-sided
    second-order stencils (the acceleration end stencil needs 4 frames and
    falls back to the 3-point second difference when t == 3).
    """
    if seq.t < 3:
        raise TooShort(f"derivative estimation needs at least 3 frames, got {seq.t}")
    q = unwrap_angles(seq.frames)
    f = seq.fps
    qd = np.empty_like(q)
    qdd = np.empty_like(q)
    qd[1:-1] = (q[2:] - q[:-2]) * (f / 2.0)
    qdd[1:-1] = ((q[2:] + q[:-2]) - 2.0 * q[1:-1]) * (f * f)
    # end stencils written as differences from the end frame so constants give exact zeros
    qd[0] = (4.0 * (q[1] - q[0]) - (q[2] - q[0])) * (f / 2.0)
    qd[-1] = -(4.0 * (q[-2] - q[-1]) - (q[-3] - q[-1])) * (f / 2.0)
    if seq.t >= 4:
        qdd[0] = (-5.0 * (q[1] - q[0]) + 4.0 * (q[2] - q[0]) - (q[3] - q[0])) * (f * f)
        qdd[-1] = (-5.0 * (q[-2] - q[-1]) + 4.0 * (q[-3] - q[-1]) - (q[-4] - q[-1])) * (f * f)
    else:
        qdd[0] = qdd[-1] = qdd[1]
    return replace(seq, frames=q, qdot=qd, qddot=qdd)


def partition_clips(seq: MotionSequence, clip_len: int = DEFAULT_CLIP_LEN, stride: int | None = None) -> list[Clip]:
    """Cut fixed-length clips at offsets 0, stride, 2*stride, ...; the short tail is dropped."""
    if stride is None:
        stride = clip_len
    if clip_len < MIN_CLIP_LEN:
        raise ValidationError(f"clip_len must be >= {MIN_CLIP_LEN}, got {clip_len}")
    if stride < 1:
        raise ValidationError(f"stride must be >= 1, got {stride}")
    clips = []
    for start in range(0, seq.t - clip_len + 1, stride):
        sl = slice(start, start + clip_len)
        clips.append(
            Clip(
                seq.source_id, start, seq.frames[sl], seq.fps,
                None if seq.qdot is None else seq.qdot[sl],
                None if seq.qddot is None else seq.qddot[sl],
            )
        )
    return clips


def resample(seq: MotionSequence, target_fps: float) -> MotionSequence:
    """Keep every ``fps / target_fps``-th frame; derivative tracks are dropped."""
    ratio = seq.fps / target_fps
    step = round(ratio)
    if step < 1 or not math.isclose(ratio, step, rel_tol=0, abs_tol=1e-9):
        raise NonIntegerStride(f"cannot resample {seq.fps:g} fps to {target_fps:g} fps by an integer stride")
    return MotionSequence(float(target_fps), seq.frames[::step], seq.source_id)
