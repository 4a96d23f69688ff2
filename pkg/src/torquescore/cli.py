"""Command-line interface: ``torquescore {score,partition,analyze,calibrate,inspect}``.

Exit codes: 0 success (possibly with per-item warnings), 2 usage or
configuration error, 3 empty result, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    ScoredRecord,
    calibrate_weights,
    correlations,
    dsje_many,
    exclude_outliers,
    mid,
    parse_grid,
)
from .difficulty import SPECTRAL_MODES, DiversityWeights
from .errors import TorqueScoreError, TooFewRecords
from .motion import MOTION_HEADER, ManifestRow, load_motion, partition_clips, resample, save_motion, write_manifest
from .perturbation import PerturbationConfig, joint_torque_reduction, sequence_jacobians, torque_jacobian
from .pipeline import SCORE_FIELDS, RunConfig, prepare_clips, score_clips
from .rigidbody import MODEL_HEADER, GeneralizedState, builtin_model_path, inverse_dynamics, load_model

MODEL_ENV = "TORQUESCORE_MODEL"
EXIT_OK, EXIT_USAGE, EXIT_EMPTY, EXIT_NUMERIC = 0, 2, 3, 4
DEFAULT_DSJE = (200.0, 300.0, 350.0)


class CliError(Exception):
    def __init__(self, message, code=EXIT_USAGE):
        super().__init__(message)
        self.code = code


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _resolve_model(path: str | None):
    path = path or os.environ.get(MODEL_ENV) or str(builtin_model_path())
    if not Path(path).is_file():
        raise CliError(f"model file not found: {path}")
    try:
        return load_model(path), path
    except TorqueScoreError as exc:
        raise CliError(f"invalid model file {path}: {exc}") from None


def _header_line(kind: str, config: dict, timestamp: bool) -> str:
    meta = {"config": config}
    if timestamp:
        meta["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return f"# torquescore-{kind} v1 " + json.dumps(meta, sort_keys=True)


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline="", encoding="utf-8"), True


def _read_table(path) -> list[dict]:
    """CSV reader that skips ``#`` header comments."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            lines = [ln for ln in fh if not ln.startswith("#")]
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from None
    return list(csv.DictReader(io.StringIO("".join(lines))))


def _float_col(row, key, path):
    try:
        return float(row[key])
    except (KeyError, TypeError, ValueError):
        raise CliError(f"{path}: column {key!r} missing or non-numeric for clip {row.get('clip_id')!r}") from None


# ---------------------------------------------------------------------------
# score


def _run_config(args, model_path) -> RunConfig:
    try:
        weights = DiversityWeights.parse(args.weights)
        pert = PerturbationConfig(
            eps_q=args.eps, eps_qdot=args.eps_qdot, eps_qddot=args.eps_qddot, delta=args.delta,
            floor_ratio=args.floor_ratio, directions=args.directions,
        )
    except TorqueScoreError as exc:
        raise CliError(str(exc)) from None
    if args.K < 1 or args.clip_len < 8 or (args.stride is not None and args.stride < 1) or args.threads < 1:
        raise CliError("K >= 1, clip-len >= 8, stride >= 1 and threads >= 1 are required")
    return RunConfig(
        model=model_path, weights=weights, perturbation=pert, K=args.K, clip_len=args.clip_len,
        stride=args.stride, fps=args.fps, spectral_mode=args.spectral_mode, partition=not args.no_partition,
        threads=args.threads, format=args.format,
    )


def _dump_matrix(path: Path, matrix: np.ndarray, labels: str = "") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# shape {matrix.shape[0]} {matrix.shape[1]}{(' ' + labels) if labels else ''}\n")
        for row in matrix:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def cmd_score(args) -> int:
    model, model_path = _resolve_model(args.model)
    cfg = _run_config(args, model_path)
    clips, failures = [], []
    for path in args.motion:
        try:
            seq = load_motion(path, model)
            if cfg.fps is None and seq.fps != 30.0:
                print(f"warning: {path}: {seq.fps:g} fps; scores are calibrated for 30 fps (see --fps)",
                      file=sys.stderr)
            clips.extend(prepare_clips(seq, cfg))
        except (OSError, TorqueScoreError) as exc:
            failures.append((path, exc))
            print(f"warning: {path}: {exc}", file=sys.stderr)
    if not clips:
        if failures and len(failures) == len(args.motion):
            print("error: no motion could be loaded", file=sys.stderr)
            return EXIT_USAGE if all(isinstance(e, OSError) for _p, e in failures) else EXIT_NUMERIC
        print("error: no clips to score (motions shorter than the clip length?)", file=sys.stderr)
        return EXIT_EMPTY
    scores = score_clips(model, clips, cfg)
    if args.dump_jacobian:
        out_dir = Path(args.dump_jacobian)
        out_dir.mkdir(parents=True, exist_ok=True)
        for clip in clips:
            stack = sequence_jacobians(model, clip, cfg.perturbation)
            _dump_matrix(out_dir / f"{clip.clip_id}.jac.csv", stack.matrix, f"J={stack.J} D={stack.D}")

    rows = [s.row(cfg) for s in scores]
    fh, close = _open_out(args.out)
    try:
        header = _header_line("scores", cfg.as_dict(), not args.no_timestamp)
        if cfg.format == "jsonl":
            fh.write(header + "\n")
            for r in rows:
                fh.write(json.dumps(r) + "\n")
        else:
            fh.write(header + "\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SCORE_FIELDS)
            for r in rows:
                w.writerow([_fmt(r[k]) for k in SCORE_FIELDS])
    finally:
        if close:
            fh.close()
    if all(s.breakdown is None for s in scores):
        return EXIT_NUMERIC
    return EXIT_OK


# ---------------------------------------------------------------------------
# partition


def cmd_partition(args) -> int:
    src = Path(args.source)
    if src.is_dir():
        files = sorted(p for p in src.iterdir() if p.suffix == ".motion")
    elif src.is_file():
        files = [src]
    else:
        raise CliError(f"no such motion file or directory: {src}")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = []
    for path in files:
        try:
            seq = load_motion(path)
            if args.fps is not None and seq.fps != args.fps:
                seq = resample(seq, args.fps)
            clips = partition_clips(seq, args.clip_len, args.stride)
        except (OSError, TorqueScoreError) as exc:
            manifest.append(ManifestRow(f"{path.stem}_failed", path.stem, None, None, None, status=f"failed:{exc}"))
            continue
        if not clips:
            manifest.append(ManifestRow("", seq.source_id, None, seq.t, seq.fps, status="too_short"))
        for clip in clips:
            save_motion(clip.as_sequence(), out_dir / f"{clip.clip_id}.motion")
            manifest.append(ManifestRow(clip.clip_id, clip.source_id, clip.start_frame, clip.length, clip.fps))
    manifest_path = Path(args.manifest) if args.manifest else out_dir / "manifest.csv"
    write_manifest(manifest, manifest_path)
    return EXIT_OK


# ---------------------------------------------------------------------------
# analyze / calibrate


def _join(scores_path, errors_path):
    scores = _read_table(scores_path)
    errors = _read_table(errors_path)
    err = {}
    for r in errors:
        err[r["clip_id"]] = _float_col(r, "mpjpe_g", errors_path)
    joined, unmatched_scores = [], []
    seen = set()
    for r in scores:
        cid = r.get("clip_id", "")
        if r.get("mds", "") in ("", None):
            continue
        seen.add(cid)
        if cid in err:
            joined.append((r, err[cid]))
        else:
            unmatched_scores.append(cid)
    unmatched_errors = [cid for cid in err if cid not in seen]
    return joined, {"unmatched_scores": unmatched_scores, "unmatched_errors": unmatched_errors}


def _error_entry(exc: Exception) -> dict:
    return {"error": type(exc).__name__, "message": str(exc)}


def cmd_analyze(args) -> int:
    joined, warnings = _join(args.scores, args.errors)
    if not joined:
        print("error: no joined records", file=sys.stderr)
        return EXIT_EMPTY
    records = [ScoredRecord(r["clip_id"], _float_col(r, "mds", args.scores), e) for r, e in joined]
    if args.exclude_outliers:
        records = exclude_outliers(records)
    run_all = not (args.mid or args.dsje or args.correlations)
    report = {
        "config": {
            "scores": str(args.scores), "errors": str(args.errors), "min_partition": args.min_partition,
            "exclude_outliers": args.exclude_outliers, "n": len(records), "version": __version__,
        },
        "warnings": warnings,
    }
    if args.mid or run_all:
        try:
            report["mid"] = mid(records, args.min_partition).as_dict()
        except TorqueScoreError as exc:
            report["mid"] = _error_entry(exc)
    if args.dsje or run_all:
        thresholds = parse_grid(args.dsje) if args.dsje else list(DEFAULT_DSJE)
        out = {}
        for c in thresholds:
            try:
                out[_fmt(float(c))] = dsje_many(records, [c])[c]
            except TorqueScoreError as exc:
                out[_fmt(float(c))] = _error_entry(exc)
        report["dsje"] = out
    if args.correlations or run_all:
        try:
            report["correlations"] = correlations(records).as_dict()
        except TorqueScoreError as exc:
            report["correlations"] = _error_entry(exc)
    fh, close = _open_out(args.out)
    try:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    finally:
        if close:
            fh.close()
    return EXIT_OK


def cmd_calibrate(args) -> int:
    joined, warnings = _join(args.components, args.errors)
    if not joined:
        print("error: no joined records", file=sys.stderr)
        return EXIT_EMPTY
    comps = [[_float_col(r, k, args.components) for k in ("d1", "d2", "d3")] for r, _e in joined]
    errs = [e for _r, e in joined]
    try:
        grid = parse_grid(args.grid)
        res = calibrate_weights(comps, errs, grid)
    except TooFewRecords as exc:
        print(f"error: TooFewRecords: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TorqueScoreError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    out = {
        "weights": list(res.weights.as_tuple()),
        "spearman": res.rho,
        "low_confidence": res.low_confidence,
        "evaluated": res.evaluated,
        "n": len(errs),
        "grid": grid,
        "warnings": warnings,
        "version": __version__,
    }
    fh, close = _open_out(args.out)
    try:
        json.dump(out, fh, indent=2)
        fh.write("\n")
    finally:
        if close:
            fh.close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# inspect


def cmd_inspect(args) -> int:
    model, _path = _resolve_model(args.model)
    try:
        seq = load_motion(args.motion, model)
        if args.fps is not None and seq.fps != args.fps:
            seq = resample(seq, args.fps)
        from .motion import estimate_derivatives

        seq = estimate_derivatives(seq)
    except (OSError, TorqueScoreError) as exc:
        raise CliError(f"{args.motion}: {exc}") from None
    cfg = PerturbationConfig(eps_q=args.eps, directions=args.directions)
    frames = range(seq.t) if args.frame is None else [args.frame]
    if args.frame is not None and not 0 <= args.frame < seq.t:
        raise CliError(f"frame {args.frame} out of range [0, {seq.t})")
    fh, close = _open_out(args.out)
    try:
        if args.what == "torques":
            fh.write("frame," + ",".join(f"tau{i}" for i in range(model.N)) + ","
                     + ",".join(f"joint_{n}" for n in model.names) + "\n")
            for i in frames:
                s = GeneralizedState(seq.frames[i], seq.qdot[i], seq.qddot[i])
                try:
                    tau = inverse_dynamics(model, s)
                except TorqueScoreError as exc:
                    fh.write(f"{i},{type(exc).__name__}\n")
                    continue
                red = joint_torque_reduction(tau, model, cfg.delta)
                fh.write(f"{i}," + ",".join(repr(float(v)) for v in np.concatenate([tau, red])) + "\n")
        elif args.what == "torque-jacobian":
            i = frames[0]
            s = GeneralizedState(seq.frames[i], seq.qdot[i], seq.qddot[i])
            jac = torque_jacobian(model, s, cfg, seq.fps)
            fh.write(f"# shape {jac.shape[0]} {jac.shape[1]} frame={i}\n")
            for row in jac:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
        else:
            stack = sequence_jacobians(model, seq, cfg)
            mat = stack.matrix if args.frame is None else stack.frames[args.frame]
            fh.write(f"# shape {mat.shape[0]} {mat.shape[1]} J={stack.J} D={stack.D}\n")
            for row in mat:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
    finally:
        if close:
            fh.close()
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="torquescore", description=__doc__.splitlines()[0])
    p.add_argument(
        "--version", action="version",
        version=f"torquescore {__version__} (formats: {MODEL_HEADER}, {MOTION_HEADER}, torquescore-scores v1)",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def model_arg(sp):
        sp.add_argument("--model", help=f"model file (default: ${MODEL_ENV} or the built-in humanoid)")

    s = sub.add_parser("score", help="score motion files clip by clip")
    s.add_argument("motion", nargs="+")
    model_arg(s)
    s.add_argument("--weights", default="1,-1,1", help="w1,w2,w3 (default 1,-1,1)")
    s.add_argument("--eps", type=float, default=1e-4, help="pose perturbation radius")
    s.add_argument("--eps-qdot", type=float, default=None)
    s.add_argument("--eps-qddot", type=float, default=None)
    s.add_argument("--delta", type=float, default=1e-8, help="torque-norm smoothing")
    s.add_argument("--floor-ratio", type=float, default=1e-12)
    s.add_argument("--directions", choices=("full", "theta"), default="full")
    s.add_argument("--spectral-mode", choices=SPECTRAL_MODES, default="stacked")
    s.add_argument("-K", "--segments", dest="K", type=int, default=4)
    s.add_argument("--clip-len", type=int, default=100)
    s.add_argument("--stride", type=int, default=None)
    s.add_argument("--fps", type=float, default=None, help="resample to this frame rate first")
    s.add_argument("--no-partition", action="store_true", help="score each motion as a single clip")
    s.add_argument("--threads", type=int, default=1, help="worker processes (clip-level)")
    s.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    s.add_argument("--out", "-o", default=None)
    s.add_argument("--no-timestamp", action="store_true")
    s.add_argument("--dump-jacobian", metavar="DIR", default=None, help="write each clip's stacked Jacobian")
    s.set_defaults(func=cmd_score)

    s = sub.add_parser("partition", help="cut motions into fixed-length clip files plus a manifest")
    s.add_argument("source", help="motion file or directory of .motion files")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--manifest", default=None)
    s.add_argument("--clip-len", type=int, default=100)
    s.add_argument("--stride", type=int, default=None)
    s.add_argument("--fps", type=float, default=None)
    s.set_defaults(func=cmd_partition)

    s = sub.add_parser("analyze", help="MID, DSJE and correlations over scored clips")
    s.add_argument("scores")
    s.add_argument("errors", help="CSV with clip_id,mpjpe_g (mm)")
    s.add_argument("--mid", action="store_true")
    s.add_argument("--dsje", default=None, help="comma-separated thresholds or lo:hi:step")
    s.add_argument("--correlations", action="store_true")
    s.add_argument("--min-partition", type=int, default=1)
    s.add_argument("--exclude-outliers", action="store_true", help="drop clips with error > 250 mm and MDS > 350")
    s.add_argument("--out", "-o", default=None)
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("calibrate", help="grid-search diversity weights against an error table")
    s.add_argument("components", help="scores CSV with d1,d2,d3 columns")
    s.add_argument("errors")
    s.add_argument("--grid", default="-2:2:0.5")
    s.add_argument("--out", "-o", default=None)
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("inspect", help="dump per-frame torques or Jacobians")
    s.add_argument("motion")
    model_arg(s)
    s.add_argument("--what", choices=("torques", "torque-jacobian", "jacobian"), default="torques")
    s.add_argument("--frame", type=int, default=None)
    s.add_argument("--eps", type=float, default=1e-4)
    s.add_argument("--directions", choices=("full", "theta"), default="full")
    s.add_argument("--fps", type=float, default=None)
    s.add_argument("--out", "-o", default=None)
    s.set_defaults(func=cmd_inspect)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "inspect" and args.what == "torque-jacobian" and args.frame is None:
        args.frame = 0
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except TorqueScoreError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
