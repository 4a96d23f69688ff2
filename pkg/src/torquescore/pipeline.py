"""End-to-end clip scoring shared by the CLI and the experiment scripts."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

from threadpoolctl import threadpool_limits

from . import __version__
from .difficulty import DEFAULT_K, DifficultyBreakdown, DiversityWeights, compute_mds
from .errors import TorqueScoreError
from .motion import DEFAULT_CLIP_LEN, Clip, MotionSequence, estimate_derivatives, partition_clips, resample
from .perturbation import PerturbationConfig, sequence_jacobians
from .rigidbody import KinematicModel

SCORE_FIELDS = [
    "clip_id", "source_id", "start_frame", "t", "J", "D", "d1", "d2", "d3", "mds",
    "degenerate_fraction", "K", "weights", "eps_q", "version", "status", "warnings",
]


@dataclass(frozen=True)
class RunConfig:
    model: str = ""
    weights: DiversityWeights = field(default_factory=DiversityWeights)
    perturbation: PerturbationConfig = field(default_factory=PerturbationConfig)
    K: int = DEFAULT_K
    clip_len: int = DEFAULT_CLIP_LEN
    stride: int | None = None
    fps: float | None = None
    spectral_mode: str = "stacked"
    partition: bool = True
    threads: int = 1
    format: str = "csv"

    def as_dict(self) -> dict:
        d = asdict(self)
        d["weights"] = list(self.weights.as_tuple())
        d["perturbation"] = self.perturbation.as_dict()
        d["version"] = __version__
        return d


@dataclass(frozen=True)
class ClipScore:
    clip_id: str
    source_id: str
    start_frame: int
    t: int
    J: int
    D: int
    breakdown: DifficultyBreakdown | None
    status: str = "ok"

    def row(self, cfg: RunConfig) -> dict:
        b = self.breakdown
        return {
            "clip_id": self.clip_id,
            "source_id": self.source_id,
            "start_frame": self.start_frame,
            "t": self.t,
            "J": self.J,
            "D": self.D,
            "d1": None if b is None else b.d1,
            "d2": None if b is None else b.d2,
            "d3": None if b is None else b.d3,
            "mds": None if b is None else b.mds,
            "degenerate_fraction": None if b is None else b.degenerate_fraction,
            "K": cfg.K,
            "weights": ",".join(repr(w) for w in cfg.weights.as_tuple()),
            "eps_q": cfg.perturbation.eps_q,
            "version": __version__,
            "status": self.status,
            "warnings": "" if b is None else ";".join(b.warnings),
        }


def prepare_clips(seq: MotionSequence, cfg: RunConfig) -> list[Clip]:
    """Resample, estimate derivatives on the whole sequence, then cut clips."""
    if cfg.fps is not None and seq.fps != cfg.fps:
        seq = resample(seq, cfg.fps)
    seq = estimate_derivatives(seq)
    if not cfg.partition:
        return [Clip(seq.source_id, 0, seq.frames, seq.fps, seq.qdot, seq.qddot)]
    return partition_clips(seq, cfg.clip_len, cfg.stride)


def score_clip(model: KinematicModel, clip: Clip, cfg: RunConfig, frame_workers: int = 1) -> ClipScore:
    p = cfg.perturbation
    D = p.direction_indices(model.N).size
    try:
        stack = sequence_jacobians(model, clip, p, workers=frame_workers)
        b = compute_mds(stack, cfg.weights, cfg.K, p.floor_ratio, cfg.spectral_mode)
        status = "ok" if b.scorable else "unscorable"
    except TorqueScoreError as exc:
        b, status = None, f"error:{type(exc).__name__}"
    return ClipScore(clip.clip_id, clip.source_id, clip.start_frame, clip.length, model.J, D, b, status)


def _init_worker():
    os.environ["OMP_NUM_THREADS"] = "1"
    threadpool_limits(1)


def _score_job(args):
    model, clip, cfg = args
    with threadpool_limits(1):
        return score_clip(model, clip, cfg)


def score_clips(model: KinematicModel, clips: list[Clip], cfg: RunConfig, workers: int | None = None) -> list[ClipScore]:
    """Score clips in input order; BLAS is pinned to one thread so results do not depend on ``workers``."""
    workers = cfg.threads if workers is None else workers
    jobs = [(model, c, cfg) for c in clips]
    if workers <= 1 or len(clips) <= 1:
        return [_score_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker) as pool:
        return list(pool.map(_score_job, jobs))


def score_motion(model: KinematicModel, seq: MotionSequence, cfg: RunConfig | None = None) -> list[ClipScore]:
    cfg = cfg or RunConfig()
    return score_clips(model, prepare_clips(seq, cfg), cfg)
