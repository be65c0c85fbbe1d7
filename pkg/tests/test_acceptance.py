"""Acceptance criteria 1-10, evaluated on the shipped presets.

Each test records a one-line verdict that is printed in the terminal
summary under "acceptance criteria", then asserts it.
"""

import json
import math
import time

import numpy as np
import pytest

from fdsmc_robot import chaos_kit as ck
from fdsmc_robot import exp_cli
from fdsmc_robot.controllers import smc_jump_scale
from fdsmc_robot.dde_sim import ScenarioConfig, SimulationDiverged, simulate
from fdsmc_robot.frac_ops import SampledSignal, caputo_gl
from fdsmc_robot.robot_model import Coeffs, JointState, RobotParams, inertia, mech_energy, rk4_step

pytestmark = pytest.mark.slow

_determinism: list = []


def timed(fn, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t0


def try_simulate(cfg):
    try:
        return simulate(cfg), None
    except SimulationDiverged as exc:
        return exc.partial, exc


@pytest.fixture(scope="module")
def sync_cfg():
    return exp_cli.preset_config("fig5-sync")


@pytest.fixture(scope="module")
def nominal(sync_cfg):
    (run, exc), dt = timed(try_simulate, sync_cfg)
    return run, exc, dt


@pytest.fixture(scope="module")
def baseline_smc(sync_cfg):
    return simulate(sync_cfg.replace(mode="master_slave_smc_baseline"))


def test_criterion_01_fractional_oracle(record_criterion):
    t0 = time.perf_counter()
    h = 1e-3
    f = SampledSignal.from_function(lambda t: t**2, 0.0, 1.0, h)
    g = caputo_gl(f, 0.7, memory_len=1001)
    t = f.times
    m = t >= 0.1 - 1e-12
    exact = math.gamma(3) / math.gamma(2.3) * t[m] ** 1.3
    err = float(np.max(np.abs(g.values[m] - exact) / exact))
    const = caputo_gl(SampledSignal(np.full(1001, 3.7), h), 0.7)
    zero = bool(np.all(const.values == 0.0))
    dt = time.perf_counter() - t0
    ok = err <= 1e-2 and zero and dt < 1.0
    record_criterion(1, ok, f"max rel err {err:.3g} (<=1e-2), constant -> exact zero: {zero}, {dt:.2f} s")
    assert ok


def test_criterion_02_mechanics(record_criterion):
    t0 = time.perf_counter()
    p = RobotParams(D1=0.0, D2=0.0)
    c = Coeffs(p)
    x = (0.1, 0.4, 2.0, -3.0)
    E0 = mech_energy(p, JointState(x[:2], x[2:]))
    drift = 0.0
    for _ in range(20_000):
        x = rk4_step(c, x, 0.0, 0.0, 5e-4)
        drift = max(drift, abs(mech_energy(p, JointState(x[:2], x[2:])) - E0) / E0)
    pd = True
    for params in (RobotParams.nominal(), RobotParams.uncertain()):
        for th2 in np.linspace(-math.pi, math.pi, 10_000):
            M = inertia(params, th2)
            pd &= bool(M[0, 0] > 0 and M[0, 0] * M[1, 1] - M[0, 1] ** 2 > 0)
    dt = time.perf_counter() - t0
    ok = drift < 1e-6 and pd and dt < 5.0
    record_criterion(2, ok, f"relative energy drift {drift:.2e} over 10 s, M positive definite: {pd}, {dt:.1f} s")
    assert ok


def test_criterion_03_chaos_regime(record_criterion, chaotic_run):
    t0 = time.perf_counter()
    tr = chaotic_run
    seg = tr.segment(100.0)
    est = ck.max_lyapunov(ck.downsample(seg.theta[:, 1], tr.h), ck.DIAG_DT)
    pts = ck.poincare_section(seg, 0.5, +1)
    clusters = ck.distinct_values(np.round(pts[:, 0] / 0.01)) if len(pts) else 0
    dt = time.perf_counter() - t0
    in_band = 0.01 <= est.exponent <= 0.10
    scattered = len(pts) >= 50 and clusters > 3
    record_criterion(3, in_band and scattered,
                     f"lambda_max {est.exponent:.3f} 1/s (band [0.01, 0.10]), positive: {est.exponent > 0}; "
                     f"Poincare {len(pts)} points in {clusters} 0.01-rad bins")
    assert scattered
    assert in_band, "Rosenstein estimate outside the band"


def test_criterion_04_bifurcation(record_criterion):
    delays = [round(0.001 * k, 3) for k in range(1, 21)]
    res, dt = timed(ck.bifurcation_sweep, ScenarioConfig(mode="single_pd"), delays, 100.0, 300.0)
    narrow = {L: ck.maxima_spread(res.maxima[L]) for L in (0.001, 0.002)}
    wide = ck.maxima_spread(res.maxima[0.015])
    n_wide = ck.distinct_values(res.maxima[0.015])
    ok = all(v < 0.01 for v in narrow.values()) and wide > 0.1 and n_wide > 30
    record_criterion(4, ok, f"spread L<=2 ms {max(narrow.values()):.2e} rad, L=15 ms {wide:.3f} rad "
                            f"({n_wide} distinct maxima), {dt:.0f} s")
    assert ok


def test_criterion_05_synchronization(record_criterion, nominal, sync_cfg):
    run, exc, dt = nominal
    pd = simulate(sync_cfg.replace(mode="master_slave_pd"))
    rms_pd = ck.rms(pd.error[pd.slave.window(10, 100), 1])
    if exc is not None:
        record_criterion(5, False, f"diverged at t={exc.time:.3f} s; PD-only RMS {rms_pd:.3g}")
        pytest.fail(str(exc))
    rms = ck.rms(run.error[run.slave.window(10, 100), 1])
    ok = rms < 1e-2 and rms * 100 <= rms_pd
    record_criterion(5, ok, f"link-2 RMS {rms:.3g} rad on [10,100] s (bar 1e-2), PD-only {rms_pd:.3g}, "
                            f"ratio {rms_pd / rms:.3g}, {dt:.0f} s")
    assert ok


def test_criterion_06_robustness(record_criterion, sync_cfg):
    cfg = exp_cli.preset_config("fig8-uncertain")
    (run, exc), dt = timed(try_simulate, cfg)
    if exc is not None:
        record_criterion(6, False, f"diverged at t={exc.time:.3f} s (bar: bounded, RMS <= 5e-2)")
        pytest.fail(str(exc))
    rms = ck.rms(run.error[run.slave.window(10, 100), 1])
    ok = rms <= 5e-2
    record_criterion(6, ok, f"link-2 RMS {rms:.3g} rad on [10,100] s (bar 5e-2), {dt:.0f} s")
    assert ok


def test_criterion_07_chattering(record_criterion, nominal, baseline_smc, sync_cfg):
    run, exc, _ = nominal
    if exc is not None:
        record_criterion(7, False, f"FDSMC run diverged at t={exc.time:.3f} s")
        pytest.fail(str(exc))
    w = run.slave.window(10, 100)
    tv_f = np.array([ck.total_variation(run.slave.tau_applied[w, k]) for k in (0, 1)])
    tv_b = np.array([ck.total_variation(baseline_smc.slave.tau_applied[w, k]) for k in (0, 1)])
    h = sync_cfg.h
    # the applied torque is the command shifted by the dead time, so the
    # bound is checked on the command against the rate that produced it
    a = run.slave.window(sync_cfg.activation_time)
    a0 = a.start + 1
    inc = np.abs(np.diff(run.slave.tau_cmd[a0 - 1:], axis=0))
    bound = h * np.abs(run.slave.torque_rate[a0:])
    bounded = bool(np.all(inc <= bound + 1e-12))
    jump_b = float(np.max(np.abs(np.diff(baseline_smc.slave.tau_applied[w], axis=0))))
    jump_f = float(np.max(np.abs(np.diff(run.slave.tau_applied[w], axis=0))))
    floor = 2 * sync_cfg.smc_k * min(smc_jump_scale(RobotParams.nominal(), t) for t in np.linspace(-math.pi, math.pi, 721))
    ratio = tv_f / tv_b
    ok = bool(np.all(ratio <= 0.2)) and bounded and jump_b >= floor
    record_criterion(7, ok, f"TV ratio FDSMC/SMC {ratio[0]:.3f}, {ratio[1]:.3f} (bar 0.2); increments within "
                            f"h|dT/dt|: {bounded}; max jump on [10,100] s FDSMC {jump_f:.2e} "
                            f"(50h = {50 * h:.3g}) vs SMC {jump_b:.2f} N m (floor {floor:.3f})")
    assert ok


def test_criterion_08_reaching(record_criterion, nominal, sync_cfg):
    run, exc, _ = nominal
    if exc is not None:
        record_criterion(8, False, f"FDSMC run diverged at t={exc.time:.3f} s")
        pytest.fail(str(exc))
    t, S, h = run.slave.t, run.slave.S, sync_cfg.h
    act = sync_cfg.activation_time
    reach = [exp_cli.reaching_time(t, S[:, k], act) for k in (0, 1)]
    reached = all(r is not None and r <= act + 5.0 for r in reach)
    start = max(r if r is not None else act for r in reach)
    after = t[1:] >= start
    Sd = np.diff(S, axis=0) / h
    big = (np.abs(S[1:]) > 0.05) & after[:, None]
    oppose = float(np.mean(np.sign(Sd[big]) == -np.sign(S[1:][big]))) if big.any() else 1.0
    ok = reached and oppose >= 0.95
    fmt = ", ".join("never" if r is None else f"{r - act:.3f} s" for r in reach)
    record_criterion(8, ok, f"|S_i| < 0.05 after {fmt} (bar 5 s); dS/dt opposes S on {oppose:.1%} "
                            f"of off-band steps (bar 95 %)")
    assert ok


def test_criterion_09_controlled_regularity(record_criterion, nominal):
    run, exc, _ = nominal
    if exc is not None:
        record_criterion(9, False, f"FDSMC run diverged at t={exc.time:.3f} s")
        pytest.fail(str(exc))
    cfg = exp_cli.preset_config("fig7-attractor")
    seg = run.slave.segment(cfg.transient)
    est = ck.max_lyapunov(ck.downsample(seg.theta[:, 1], cfg.h), ck.DIAG_DT)
    ok = est.exponent < 0.01
    record_criterion(9, ok, f"controlled slave lambda_max {est.exponent:.4f} 1/s (bar < 0.01)")
    assert ok


@pytest.mark.parametrize("name", ["fig6-surfaces", "fig2-chaotic"])
def test_criterion_10_determinism(record_criterion, tmp_path, name):
    exp_cli.run_preset(name, tmp_path / "a")
    exp_cli.run_preset(name, tmp_path / "b")
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    same = files == sorted(p.name for p in (tmp_path / "b").iterdir())
    differing = []
    for f in files:
        a, b = (tmp_path / "a" / f).read_bytes(), (tmp_path / "b" / f).read_bytes()
        if f == "manifest.json":
            ja, jb = json.loads(a), json.loads(b)
            ja.pop("wall_clock_s"), jb.pop("wall_clock_s")
            if ja != jb:
                differing.append(f)
        elif a != b:
            differing.append(f)
    ok = same and not differing
    _determinism.append((name, ok, len(files)))
    detail = "; ".join(f"{n}: {k} files {'identical' if o else 'DIFFER'}" for n, o, k in _determinism)
    record_criterion(10, all(o for _, o, _ in _determinism), detail + " (manifest compared without wall-clock)")
    assert ok, differing

