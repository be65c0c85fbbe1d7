import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdsmc_robot import chaos_kit as ck
from fdsmc_robot.dde_sim import ScenarioConfig, Trajectory


def _traj(t, th1, th2=None, om1=None, om2=None):
    n = len(t)
    th2 = np.zeros(n) if th2 is None else th2
    om1 = np.gradient(th1, t) if om1 is None else om1
    om2 = np.zeros(n) if om2 is None else om2
    z = np.zeros((n, 2))
    return Trajectory(t[1] - t[0], t, np.column_stack([th1, th2]), np.column_stack([om1, om2]), z, z)


# -- embedding ---------------------------------------------------------------


def test_embedding_counts_and_constant():
    Y = ck.delay_embed(np.full(10, 2.5), ck.EmbeddingSpec(2, 1))
    assert Y.shape == (9, 2) and np.all(Y == 2.5)
    with pytest.raises(ValueError):
        ck.delay_embed(np.arange(3.0), ck.EmbeddingSpec(4, 1))
    with pytest.raises(ValueError):
        ck.EmbeddingSpec(1, 1)


def test_quarter_period_embedding_is_circle():
    dt = 0.01
    s = np.sin(0.5 * math.pi * np.arange(0, 40, dt))
    Y = ck.delay_embed(s, ck.EmbeddingSpec(2, 100))
    r = np.hypot(Y[:, 0], Y[:, 1])
    assert np.max(np.abs(r - 1.0)) < 0.01


def test_default_delay_is_capped():
    slow = np.linspace(0, 1, 5000)
    assert ck.default_embedding(slow, 0.01).delay_samples == 500
    s = np.sin(0.5 * math.pi * np.arange(0, 100, 0.01))
    assert ck.default_embedding(s, 0.01).delay_samples == pytest.approx(100, abs=2)


# -- Lyapunov ----------------------------------------------------------------


def test_lyapunov_sine_not_positive():
    dt = 0.01
    s = np.sin(0.5 * math.pi * np.arange(0, 300, dt))
    assert ck.max_lyapunov(s, dt).exponent <= 0.005


def test_lyapunov_damped_negative():
    dt = 0.01
    t = np.arange(0, 300, dt)
    assert ck.max_lyapunov(np.exp(-0.1 * t) * np.sin(3 * t), dt).exponent < 0


def test_lyapunov_logistic_map():
    x = np.empty(5000)
    x[0] = 0.3
    for i in range(1, len(x)):
        x[i] = 4 * x[i - 1] * (1 - x[i - 1])
    est = ck.max_lyapunov(x, 1.0, ck.EmbeddingSpec(2, 1), theiler=10, horizon=20)
    assert est.exponent > 0
    assert abs(est.exponent - math.log(2)) <= 0.25 * math.log(2)
    a, b = est.fit_range
    assert 0 <= a < b <= len(est.divergence)


def test_lyapunov_errors():
    with pytest.raises(ValueError):
        ck.max_lyapunov(np.sin(np.arange(30.0)), 1.0, ck.EmbeddingSpec(2, 1), theiler=2, horizon=40)
    with pytest.raises(ValueError):
        ck.max_lyapunov(np.sin(np.arange(100.0)), 1.0, ck.EmbeddingSpec(2, 1), theiler=200, horizon=10)


def test_linear_region_stops_before_saturation():
    d = np.concatenate([np.linspace(-5, 0, 50), np.zeros(50)])
    a, b = ck.linear_region(d)
    assert a == 0 and b <= 50


# -- Poincare ----------------------------------------------------------------


def test_poincare_no_crossing():
    t = np.linspace(0, 1, 101)
    assert ck.poincare_section(_traj(t, 0.1 * t), 0.5).shape == (0, 2)


def test_poincare_linear_motion_exact():
    t = np.linspace(0, 1, 101)
    t = t + 0.003  # keep the crossing off a grid point
    pts = ck.poincare_section(_traj(t, t, th2=2 * t, om2=np.full(len(t), 2.0)), 0.5)
    assert pts.shape == (1, 2)
    assert pts[0, 0] == pytest.approx(1.0, abs=1e-12)
    assert pts[0, 1] == pytest.approx(2.0, abs=1e-12)


def test_poincare_direction_filter():
    t = np.linspace(0, 4 * math.pi, 4001)
    tr = _traj(t, np.sin(t), om1=np.cos(t))
    up = ck.poincare_section(tr, 0.5, +1)
    down = ck.poincare_section(tr, 0.5, -1)
    assert len(up) == 2 and len(down) == 2
    with pytest.raises(ValueError):
        ck.poincare_section(tr, 0.5, 0)


def test_poincare_interpolation_second_order():
    def crossing(n):
        t = np.linspace(0, 3, n)
        tr = _traj(t, np.sin(t), th2=np.cos(3 * t), om1=np.cos(t))
        return ck.poincare_section(tr, 0.5)[0, 0]

    exact = math.cos(3 * math.asin(0.5))
    e1 = abs(crossing(301) - exact)
    e2 = abs(crossing(601) - exact)
    assert e2 < 0.35 * e1


# -- maxima and sweep --------------------------------------------------------


def test_local_maxima_plateau_counts_once():
    x = [0, 1, 0, 2, 2, 2, 0, 3, 3, 4, 1]
    np.testing.assert_array_equal(ck.local_maxima(x), [1, 2, 4])
    assert len(ck.local_maxima([0, 1, 1])) == 0


def test_distinct_values_and_spread():
    assert ck.distinct_values([1.0, 1.0005, 2.0]) == 2
    assert ck.maxima_spread([]) == 0.0
    assert ck.maxima_spread([0.2, 0.9]) == pytest.approx(0.7)


def test_bifurcation_empty_grid():
    assert ck.bifurcation_sweep(ScenarioConfig(), [], t_end=10, transient=1).maxima == {}


def test_bifurcation_independent_of_workers():
    cfg = ScenarioConfig(mode="single_pd")
    a = ck.bifurcation_sweep(cfg, [0.01, 0.002], transient=5, t_end=15, workers=1)
    b = ck.bifurcation_sweep(cfg, [0.002, 0.01], transient=5, t_end=15, workers=2)
    assert list(a.rows()) == list(b.rows())


# -- scalar metrics ----------------------------------------------------------


def test_rms_examples():
    assert ck.rms(np.zeros(10)) == 0
    assert ck.rms(np.full(7, -3.0)) == pytest.approx(3.0)
    t = np.linspace(0, 2 * math.pi, 100_000, endpoint=False)
    assert ck.rms(2.0 * np.sin(t)) == pytest.approx(2.0 / math.sqrt(2), abs=1e-6)
    assert math.isnan(ck.rms(np.empty(0)))


def test_tv_examples():
    assert ck.total_variation(np.linspace(0, 1, 57)) == pytest.approx(1.0)
    a, n = 0.3, 11
    x = a * (-1.0) ** np.arange(n)
    assert ck.total_variation(x) == pytest.approx(2 * a * (n - 1))


@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=50), st.integers(0, 20))
@settings(max_examples=40)
def test_metrics_shift_invariant(values, pad):
    x = np.array(values)
    shifted = np.concatenate([np.full(pad, np.nan), x])
    w = slice(pad, pad + len(x))
    assert ck.rms(shifted, w) == ck.rms(x)
    assert ck.total_variation(shifted, w) == ck.total_variation(x)


def test_downsample():
    x = np.arange(100)
    np.testing.assert_array_equal(ck.downsample(x, 5e-4, 0.01), x[::20])
    with pytest.raises(ValueError):
        ck.downsample(x, 3e-3, 0.01)
