import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from torquescore.errors import DimensionMismatch, NonIntegerStride, ParseError, TooShort, ValidationError
from torquescore.motion import (
    ManifestRow,
    MotionSequence,
    estimate_derivatives,
    format_motion,
    load_motion,
    parse_motion,
    partition_clips,
    read_manifest,
    resample,
    save_motion,
    unwrap_angles,
    write_manifest,
)
from torquescore.rigidbody import builtin_model_path


def seq_of(frames, fps=30.0, sid="m"):
    return MotionSequence(fps, np.asarray(frames, dtype=float), sid)


def test_load_builtin_motion(humanoid):
    seq = load_motion(builtin_model_path().parent.parent / "motions" / "slow_wave.motion", humanoid)
    assert (seq.t, seq.dof, seq.fps, seq.source_id) == (100, 75, 30.0, "slow_wave")


def test_round_trip(tmp_path, rng):
    seq = seq_of(rng.normal(size=(12, 9)), fps=60.0, sid="rt")
    save_motion(seq, tmp_path / "rt.motion")
    back = load_motion(tmp_path / "rt.motion")
    np.testing.assert_array_equal(back.frames, seq.frames)
    assert back.fps == 60.0 and back.source_id == "rt"


def test_wrong_dof_for_model(tmp_path, pendulum):
    save_motion(seq_of(np.zeros((5, 7))), tmp_path / "x.motion")
    with pytest.raises(DimensionMismatch):
        load_motion(tmp_path / "x.motion", pendulum)


def test_parse_errors():
    with pytest.raises(ParseError):
        parse_motion("")
    with pytest.raises(ParseError):
        parse_motion("torquescore-motion v1\nfps 30\ndof 3\n")
    with pytest.raises(DimensionMismatch):
        parse_motion("torquescore-motion v1\nfps 30\ndof 3\n1 2\n")
    with pytest.raises(ParseError):
        parse_motion("torquescore-motion v1\n1 2 3\n")
    with pytest.raises(ParseError):
        parse_motion("torquescore-motion v1\nfps 30\ndof 1\nx\n")


def test_format_is_stable(rng):
    seq = seq_of(rng.normal(size=(4, 6)))
    assert format_motion(parse_motion(format_motion(seq))) == format_motion(seq)


# --- derivatives --------------------------------------------------------


def test_constant_motion_has_zero_derivatives():
    d = estimate_derivatives(seq_of(np.full((10, 6), 0.4)))
    np.testing.assert_array_equal(d.qdot, 0.0)
    np.testing.assert_array_equal(d.qddot, 0.0)


def test_linear_ramp_is_exact():
    t = np.arange(20) / 30.0
    frames = np.outer(t, [1.0, -2.0, 0.5, 0.3, 0.1, -0.2])
    d = estimate_derivatives(seq_of(frames))
    np.testing.assert_allclose(d.qdot, np.broadcast_to([1.0, -2.0, 0.5, 0.3, 0.1, -0.2], frames.shape), atol=1e-12)
    np.testing.assert_allclose(d.qddot, 0.0, atol=1e-9)


def test_quadratic_is_exact_everywhere():
    t = np.arange(15) / 30.0
    frames = np.outer(t * t, np.ones(6))
    d = estimate_derivatives(seq_of(frames))
    np.testing.assert_allclose(d.qdot[:, 0], 2 * t, atol=1e-11)
    np.testing.assert_allclose(d.qddot[:, 0], 2.0, atol=1e-7)


@pytest.mark.parametrize("omega", [0.5, 2.0, 6.0])
def test_central_difference_error_bound(omega):
    fps = 30.0
    t = np.arange(60) / fps
    frames = np.outer(np.sin(omega * t), np.ones(6)) * 0.5
    d = estimate_derivatives(seq_of(frames, fps))
    true_v = 0.5 * omega * np.cos(omega * t)
    err = np.abs(d.qdot[1:-1, 0] - true_v[1:-1])
    assert err.max() <= 0.5 * omega**3 / (6 * fps**2) * 1.0001


def test_three_frames_minimum():
    estimate_derivatives(seq_of(np.zeros((3, 6))))
    with pytest.raises(TooShort):
        estimate_derivatives(seq_of(np.zeros((2, 6))))


def test_time_reversal_flips_velocity(rng):
    frames = np.cumsum(rng.normal(0, 0.05, (30, 9)), axis=0)
    fwd = estimate_derivatives(seq_of(frames))
    bwd = estimate_derivatives(seq_of(frames[::-1]))
    np.testing.assert_allclose(bwd.qdot[::-1], -fwd.qdot, atol=1e-12)
    np.testing.assert_allclose(bwd.qddot[::-1], fwd.qddot, atol=1e-9)


def test_derivatives_see_through_angle_wrap():
    t = np.arange(40) / 30.0
    yaw = 8.0 * t
    frames = np.zeros((40, 6))
    frames[:, 5] = np.angle(np.exp(1j * yaw))
    d = estimate_derivatives(seq_of(frames))
    np.testing.assert_allclose(d.qdot[:, 5], 8.0, atol=1e-9)


@given(arrays(float, (25, 6), elements=st.floats(-3.1, 3.1)))
def test_unwrap_is_idempotent_and_preserves_angles(frames):
    u = unwrap_angles(frames)
    np.testing.assert_array_equal(unwrap_angles(u), u)
    np.testing.assert_array_equal(u[:, :3], frames[:, :3])
    k = (u[:, 3:] - frames[:, 3:]) / (2 * math.pi)
    np.testing.assert_allclose(k, np.round(k), atol=1e-9)
    assert np.all(np.abs(np.diff(u[:, 3:], axis=0)) <= math.pi + 1e-12)


# --- partitioning / resampling -----------------------------------------


@pytest.mark.parametrize("t, n", [(350, 3), (100, 1), (99, 0), (200, 2)])
def test_partition_counts(t, n):
    assert len(partition_clips(seq_of(np.zeros((t, 6))))) == n


def test_partition_ids_and_coverage(rng):
    frames = rng.normal(size=(350, 6))
    clips = partition_clips(seq_of(frames, sid="walk"), 100)
    assert [c.clip_id for c in clips] == ["walk_000000", "walk_000100", "walk_000200"]
    np.testing.assert_array_equal(np.concatenate([c.frames for c in clips]), frames[:300])


def test_partition_stride_overlap():
    clips = partition_clips(seq_of(np.zeros((30, 6))), 10, 5)
    assert [c.start_frame for c in clips] == [0, 5, 10, 15, 20]


def test_partition_rejects_bad_sizes():
    s = seq_of(np.zeros((30, 6)))
    with pytest.raises(ValidationError):
        partition_clips(s, 7)
    with pytest.raises(ValidationError):
        partition_clips(s, 10, 0)


def test_partition_slices_derivatives():
    d = estimate_derivatives(seq_of(np.outer(np.arange(30.0) ** 2, np.ones(6))))
    c = partition_clips(d, 10)[1]
    np.testing.assert_array_equal(c.qdot, d.qdot[10:20])
    np.testing.assert_array_equal(c.qddot, d.qddot[10:20])


def test_resample():
    frames = np.arange(120 * 6, dtype=float).reshape(120, 6)
    r = resample(seq_of(frames, 120.0), 30.0)
    assert r.fps == 30.0
    np.testing.assert_array_equal(r.frames, frames[::4])
    same = resample(seq_of(frames, 30.0), 30.0)
    np.testing.assert_array_equal(same.frames, frames)
    with pytest.raises(NonIntegerStride):
        resample(seq_of(frames, 50.0), 30.0)


def test_manifest_round_trip(tmp_path):
    rows = [
        ManifestRow("a_000000", "a", 0, 100, 30.0, 1.5, -2.25, 3.0, 0.1 + 0.2),
        ManifestRow("bad", "bad", None, None, None, status="error:ParseError"),
    ]
    write_manifest(rows, tmp_path / "m.csv")
    assert read_manifest(tmp_path / "m.csv") == rows


def test_frame_length_one_short(tmp_path, humanoid):
    save_motion(seq_of(np.zeros((3, 74))), tmp_path / "short.motion")
    with pytest.raises(DimensionMismatch):
        load_motion(tmp_path / "short.motion", humanoid)


def test_rewrapping_recovers_angles(rng):
    frames = rng.uniform(-math.pi, math.pi, (30, 9))
    u = unwrap_angles(frames)
    np.testing.assert_allclose(np.angle(np.exp(1j * u[:, 3:])), frames[:, 3:], atol=1e-12)
