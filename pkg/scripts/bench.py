"""Time full MDS scoring: one clip, and a batch of clips at several worker counts.

    python3 scripts/bench.py --clips 100 --workers 1 2 4 8
"""
import argparse
import os
import time

from torquescore.motion import Clip, MotionSequence, estimate_derivatives
from torquescore.pipeline import RunConfig, score_clip, score_clips
from torquescore.rigidbody import default_humanoid
from torquescore.synthetic import SYNTHETIC_MOTIONS


def fixture_clips(model, count):
    seqs = [estimate_derivatives(MotionSequence(30.0, fn(model), name)) for name, fn in sorted(SYNTHETIC_MOTIONS.items())]
    return [
        Clip(f"{s.source_id}{i:03d}", 0, s.frames, s.fps, s.qdot, s.qddot)
        for i, s in ((i, seqs[i % len(seqs)]) for i in range(count))
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--clips", type=int, default=100)
    ap.add_argument("--workers", type=int, nargs="+", default=[1, 2, 4, 8])
    args = ap.parse_args()
    model = default_humanoid()
    cfg = RunConfig()
    clips = fixture_clips(model, args.clips)
    print(f"cpus={os.cpu_count()}")
    for fw in (1, 8):
        t0 = time.perf_counter()
        score_clip(model, clips[0], cfg, frame_workers=fw)
        print(f"single clip, {fw} frame thread(s): {time.perf_counter() - t0:.2f}s")
    base = None
    for w in args.workers:
        t0 = time.perf_counter()
        score_clips(model, clips, cfg, workers=w)
        dt = time.perf_counter() - t0
        base = base or dt
        print(f"{args.clips} clips, {w} worker(s): {dt:.1f}s  speedup {base / dt:.2f}x")


if __name__ == "__main__":
    main()
