"""Acceptance criteria 1-10. Each test records one PASS/FAIL line shown in the terminal summary."""
import math
import os
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, random_state
from oracles import (
    double_pendulum_lagrangian,
    euler_lagrange_torques,
    mp_singular_values,
    naive_dsje,
    naive_kendall_tau_b,
    naive_mid_scaled,
    naive_pearson,
    naive_spearman,
    pendulum_static_torque,
)
from test_analysis import uhc_records
from torquescore.analysis import ScoredRecord, dsje, kendall_tau_b, mid, pearson, spearman
from torquescore.difficulty import compute_mds, log_volume_means, spectral_diversity
from torquescore.errors import EmptyStratum
from torquescore.perturbation import PerturbationConfig, sequence_jacobians, torque_jacobian
from torquescore.pipeline import RunConfig, score_clip, score_clips
from torquescore.motion import Clip
from torquescore.rigidbody import GeneralizedState, bias_term, inverse_dynamics, mass_matrix


def report(n, title, ok, detail):
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'} criterion {n:2d} {title}: {detail}")
    print(ACCEPTANCE_LINES[-1])
    assert ok, detail


def test_criterion_01_dynamics_oracle(pendulum, double_pendulum):
    rng = np.random.default_rng(101)
    elapsed = 0.0
    worst_single = 0.0
    for theta in rng.uniform(-math.pi, math.pi, 50):
        q = np.zeros(pendulum.N)
        q[3] = theta
        t0 = time.perf_counter()
        tau = inverse_dynamics(pendulum, GeneralizedState.static(q))[3]
        elapsed += time.perf_counter() - t0
        ref = pendulum_static_torque(theta)
        worst_single = max(worst_single, abs(tau - ref) / max(abs(ref), 1e-300))
    worst_double = 0.0
    for _ in range(50):
        th, thd, thdd = rng.uniform(-2.5, 2.5, 2), rng.normal(0, 2, 2), rng.normal(0, 5, 2)
        q, qd, qdd = (np.zeros(double_pendulum.N) for _ in range(3))
        q[[3, 6]], qd[[3, 6]], qdd[[3, 6]] = th, thd, thdd
        t0 = time.perf_counter()
        tau = inverse_dynamics(double_pendulum, GeneralizedState(q, qd, qdd))[[3, 6]]
        elapsed += time.perf_counter() - t0
        ref = np.array(euler_lagrange_torques(double_pendulum_lagrangian, th, thd, thdd))
        worst_double = max(worst_double, float(np.max(np.abs(tau - ref) / np.maximum(np.abs(ref), 1e-3))))
    ok = worst_single <= 1e-8 and worst_double <= 1e-6 and elapsed < 1.0
    report(1, "dynamics oracle", ok,
           f"pendulum rel err {worst_single:.1e} (<=1e-8), double pendulum rel err {worst_double:.1e} (<=1e-6), "
           f"runtime {elapsed:.3f}s (<1s)")


def test_criterion_02_equation_of_motion(humanoid):
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(100):
        q, qd, qdd = random_state(humanoid, rng)
        tau = inverse_dynamics(humanoid, GeneralizedState(q, qd, qdd))
        resid = np.linalg.norm(tau - (mass_matrix(humanoid, q) @ qdd + bias_term(humanoid, q, qd)))
        worst = max(worst, resid / (1 + np.linalg.norm(tau)))
    report(2, "M qdd + h identity", worst <= 1e-9, f"max residual / (1+|tau|) = {worst:.1e} (<=1e-9), 100 states, J=24")


def test_criterion_03_jacobian_linearity(humanoid, chain3):
    rng = np.random.default_rng(303)
    N = humanoid.N
    worst_m = 0.0
    for _ in range(5):
        q, qd, qdd = random_state(humanoid, rng)
        Jt = torque_jacobian(humanoid, GeneralizedState(q, qd, qdd), PerturbationConfig())
        M = mass_matrix(humanoid, q)
        worst_m = max(worst_m, np.max(np.abs(Jt[:, 2 * N :] - M)) / (1 + np.linalg.norm(M)))
    ratios = []
    for model in (chain3, humanoid):
        s = GeneralizedState(*random_state(model, rng))
        J = [torque_jacobian(model, s, PerturbationConfig(eps_q=e, eps_qdot=e, eps_qddot=e)) for e in (1e-2, 5e-3, 2.5e-3)]
        ratios.append(float(np.linalg.norm(J[0] - J[1]) / np.linalg.norm(J[1] - J[2])))
    ok = worst_m <= 1e-5 and all(3.5 <= r <= 4.5 for r in ratios)
    report(3, "Jacobian linearity", ok,
           f"qdd-block vs M err/(1+|M|) {worst_m:.1e} (<=1e-5); Richardson ratios "
           + ", ".join(f"{r:.4f}" for r in ratios) + " (in [3.5, 4.5])")


def test_criterion_04_spectral_properties():
    rng = np.random.default_rng(404)
    ident = spectral_diversity(np.eye(40))
    worst_scale = 0.0
    for _ in range(50):
        A = rng.normal(size=(8, 30))
        c = float(np.exp(rng.uniform(-5, 5)))
        worst_scale = max(worst_scale, abs(spectral_diversity(c * A) - spectral_diversity(A) - 8 * math.log(c)))
    worst_diag = 0.0
    for _ in range(50):
        d = np.exp(rng.uniform(-6, 6, 5))
        A = np.zeros((5, 9))
        A[np.arange(5), rng.permutation(9)[:5]] = d * rng.choice([-1, 1], 5)
        ref = math.fsum(math.log(s) for s in mp_singular_values(A))
        worst_diag = max(worst_diag, abs(spectral_diversity(A) - ref))
    ok = ident == 0.0 and worst_scale <= 1e-9 and worst_diag <= 1e-10
    report(4, "spectral properties", ok,
           f"d1(I)={ident!r} (==0); scaling err {worst_scale:.1e} (<=1e-9); diagonal vs mp SVD {worst_diag:.1e} (<=1e-10)")


def test_criterion_05_am_gm():
    rng = np.random.default_rng(505)
    violations = mismatched = 0
    for i in range(1000):
        k = int(rng.integers(1, 12))
        vols = np.full(k, np.exp(rng.uniform(-50, 50))) if i % 4 == 0 else np.exp(rng.normal(0, 3, k))
        logs = np.log(vols)
        log_gm, log_am = log_volume_means(logs)
        gm, am = math.exp(log_gm), math.exp(log_am)
        if gm > am * (1 + 1e-12):
            violations += 1
        equal = bool(np.all(vols == vols[0]))
        if (abs(am - gm) <= 1e-12 * am) != equal:
            mismatched += 1
    report(5, "AM-GM bound", violations == 0 and mismatched == 0,
           f"{violations} GM>AM violations, {mismatched} equality mismatches over 1000 sets (tol 1e-12)")


def _mid_dataset(rng):
    n = int(round(math.exp(rng.uniform(math.log(2), math.log(1000)))))
    if rng.random() < 0.05:
        n = 1000
    if rng.random() < 0.4:
        mds = rng.integers(0, max(2, n // 4), n).astype(float) * 3.25
    else:
        mds = rng.normal(300, 40, n)
    if len(set(mds.tolist())) < 2:
        mds[0] += 1.0
    err = rng.gamma(2.0, 25.0, n) if rng.random() < 0.7 else np.round(rng.gamma(2.0, 25.0, n), 2)
    return mds.tolist(), err.tolist()


def test_criterion_06_mid_dsje_oracles():
    rng = np.random.default_rng(606)
    mid_diff = dsje_diff = compared = 0
    for _ in range(1000):
        mds, err = _mid_dataset(rng)
        recs = [ScoredRecord(str(i), m, e) for i, (m, e) in enumerate(zip(mds, err))]
        got = mid(recs)
        if (got.threshold, got.gap, got.mu_low, got.mu_high, got.low_count, got.high_count) != naive_mid_scaled(mds, err):
            mid_diff += 1
        compared += 1
        for c in (float(rng.choice(mds)), max(mds) + 1.0, min(mds)):
            ref = naive_dsje(mds, err, c)
            try:
                value = dsje(recs, c)
            except EmptyStratum:
                value = None
            dsje_diff += value != ref
    table = dsje(uhc_records(), 300.0)
    ok = mid_diff == 0 and dsje_diff == 0 and abs(table - 22.93) <= 0.01
    report(6, "MID/DSJE oracles", ok,
           f"{mid_diff} MID and {dsje_diff} DSJE mismatches vs naive scans ({compared} MID datasets, n<=1000, exact); "
           f"reference DSJE-300 over 18 UHC samples = {table:.4f} mm (22.93 +- 0.01)")


def test_criterion_07_correlations():
    rng = np.random.default_rng(707)
    exact_ok = True
    for _ in range(50):
        x = (rng.normal(size=int(rng.integers(2, 60))) * 10 ** rng.uniform(-4, 4)).tolist()
        for f in (pearson, spearman, kendall_tau_b):
            exact_ok &= f(x, x) == 1.0 and f(x, [-v for v in x]) == -1.0
    worst = 0.0
    done = 0
    while done < 1000:
        n = int(rng.integers(3, 120))
        x = rng.normal(size=n)
        y = x * rng.uniform(-1, 1) + rng.normal(size=n)
        if rng.random() < 0.5:
            x = np.round(x * 2)
        if rng.random() < 0.5:
            y = np.round(y)
        x, y = x.tolist(), y.tolist()
        if len(set(x)) < 2 or len(set(y)) < 2:
            continue
        worst = max(
            worst,
            abs(pearson(x, y) - naive_pearson(x, y)),
            abs(spearman(x, y) - naive_spearman(x, y)),
            abs(kendall_tau_b(x, y) - naive_kendall_tau_b(x, y)),
        )
        done += 1
    report(7, "correlations", exact_ok and worst <= 1e-12,
           f"+-1 exact for identical/reversed: {exact_ok}; max deviation from naive definitions {worst:.1e} (<=1e-12, 1000 datasets with ties)")


def test_criterion_08_rank_sanity(humanoid, synthetic_clips):
    lines, ok = [], True
    for eps in (1e-3, 1e-4, 1e-5):
        cfg = PerturbationConfig(eps_q=eps)
        mds = {name: compute_mds(sequence_jacobians(humanoid, clip, cfg)).mds for name, clip in synthetic_clips.items()}
        ok &= mds["static_stand"] < mds["slow_wave"] < mds["fast_spin"]
        lines.append(f"eps={eps:g}: {mds['static_stand']:.1f} < {mds['slow_wave']:.1f} < {mds['fast_spin']:.1f}")
    report(8, "rank sanity", ok, "; ".join(lines))


def _fixture_clips(synthetic_clips, count):
    names = sorted(synthetic_clips)
    out = []
    for i in range(count):
        s = synthetic_clips[names[i % len(names)]]
        out.append(Clip(f"{s.source_id}{i:03d}", 0, s.frames, s.fps, s.qdot, s.qddot))
    return out


@pytest.mark.slow
def test_criterion_09_performance(humanoid, synthetic_clips):
    cfg = RunConfig()
    clip = _fixture_clips(synthetic_clips, 1)[0]
    t0 = time.perf_counter()
    score_clip(humanoid, clip, cfg)
    single = time.perf_counter() - t0
    t0 = time.perf_counter()
    score_clip(humanoid, clip, cfg, frame_workers=8)
    threaded = time.perf_counter() - t0
    batch = _fixture_clips(synthetic_clips, 100)
    t0 = time.perf_counter()
    score_clips(humanoid, batch, cfg, workers=1)
    t_1 = time.perf_counter() - t0
    t0 = time.perf_counter()
    score_clips(humanoid, batch, cfg, workers=8)
    t_8 = time.perf_counter() - t0
    speedup = t_1 / t_8
    ok = single < 10.0 and threaded < 3.0 and speedup >= 6.0
    report(9, "performance", ok,
           f"one clip {single:.2f}s single-threaded (<10s), {threaded:.2f}s with 8 workers (<3s); "
           f"100-clip batch {t_1:.1f}s -> {t_8:.1f}s at 8 workers, speedup {speedup:.2f}x (>=6x) "
           f"on {os.cpu_count()} CPU(s)")


def test_criterion_10_determinism(humanoid, synthetic_clips):
    cfg = RunConfig()
    clips = _fixture_clips(synthetic_clips, 3)

    def rows(**kw):
        return [",".join(repr(v) for v in s.row(cfg).values()) for s in kw.pop("scores")]

    runs = [
        rows(scores=score_clips(humanoid, clips, cfg, workers=1)),
        rows(scores=score_clips(humanoid, clips, cfg, workers=1)),
        rows(scores=score_clips(humanoid, clips, cfg, workers=3)),
        rows(scores=[score_clip(humanoid, c, cfg, frame_workers=4) for c in clips]),
    ]
    same = all(r == runs[0] for r in runs)
    report(10, "determinism", same, f"{len(runs)} runs (repeat, 3 processes, 4 frame threads) byte-identical: {same}")
