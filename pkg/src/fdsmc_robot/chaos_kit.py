"""Chaos diagnostics for scalar series and simulated trajectories."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .dde_sim import ScenarioConfig, Trajectory, run_many

DIAG_DT = 0.01
DEFAULT_THEILER_SECONDS = 4.0
MAX_EMBED_DELAY_SECONDS = 5.0
# separations below this fraction of the series' std are roundoff, not dynamics
RESOLUTION = 1e-9


@dataclass(frozen=True)
class EmbeddingSpec:
    dim: int = 4
    delay_samples: int = 1

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("embedding dimension must be at least 2")
        if self.delay_samples < 1:
            raise ValueError("delay must be at least one sample")

    def span(self) -> int:
        return (self.dim - 1) * self.delay_samples


@dataclass
class LyapunovEstimate:
    exponent: float
    fit_range: tuple[int, int]
    divergence: np.ndarray
    dt: float
    n_pairs: int = 0
    spec: EmbeddingSpec | None = None
    theiler: int = 0

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self.divergence))


def downsample(values: np.ndarray, h: float, dt: float = DIAG_DT) -> np.ndarray:
    """Keep every (dt/h)-th sample; ``dt`` must be a multiple of ``h``."""
    k = int(round(dt / h))
    if k < 1 or abs(k * h - dt) > 1e-9 * dt:
        raise ValueError(f"dt={dt} is not a multiple of h={h}")
    return np.asarray(values)[::k]


def delay_embed(series, spec: EmbeddingSpec) -> np.ndarray:
    """Rows (s_j, s_{j+tau}, ..., s_{j+(dim-1)tau})."""
    x = np.asarray(series, dtype=float)
    n = len(x) - spec.span()
    if n < 1:
        raise ValueError(f"series of length {len(x)} too short for span {spec.span()}")
    tau = spec.delay_samples
    return np.stack([x[i * tau:i * tau + n] for i in range(spec.dim)], axis=1)


def autocorr_first_zero(series, max_lag: int) -> int:
    """First lag where the sample autocorrelation drops to <= 0, capped."""
    x = np.asarray(series, dtype=float)
    x = x - x.mean()
    max_lag = min(max_lag, len(x) - 1)
    for k in range(1, max_lag + 1):
        if np.dot(x[:-k], x[k:]) <= 0:
            return k
    return max(max_lag, 1)


def default_embedding(series, dt: float, dim: int = 4) -> EmbeddingSpec:
    cap = max(1, int(round(MAX_EMBED_DELAY_SECONDS / dt)))
    return EmbeddingSpec(dim, autocorr_first_zero(series, cap))


def _nearest_neighbors(Y: np.ndarray, m: int, theiler: int, chunk: int = 4096) -> np.ndarray:
    """Index of each point's nearest neighbor with |i - j| > theiler, or -1.

    At most 2 theiler + 1 points (self included) sit inside the window, so
    the 2 theiler + 2 nearest always contain an admissible one when m is
    large enough.
    """
    k = min(m, 2 * theiler + 2)
    tree = cKDTree(Y[:m])
    nn = np.full(m, -1)
    for a in range(0, m, chunk):
        b = min(m, a + chunk)
        _, idx = tree.query(Y[a:b], k=k)
        idx = idx.reshape(b - a, k)
        ok = np.abs(idx - np.arange(a, b)[:, None]) > theiler
        first = np.argmax(ok, axis=1)
        hit = ok[np.arange(b - a), first]
        nn[a:b] = np.where(hit, idx[np.arange(b - a), first], -1)
    return nn


def divergence_curve(series, spec: EmbeddingSpec, theiler: int, horizon: int):
    """Mean log distance between initially nearest pairs, vs. steps ahead."""
    Y = delay_embed(series, spec)
    n = len(Y)
    m = n - horizon
    if m < 2:
        raise ValueError("series too short for the requested horizon")
    nn = _nearest_neighbors(Y, m, theiler)
    i = np.flatnonzero(nn >= 0)
    if len(i) == 0:
        raise ValueError("no neighbor outside the Theiler window")
    j = nn[i]
    floor = RESOLUTION * max(float(np.std(series)), np.finfo(float).tiny)
    div = np.empty(horizon)
    for k in range(horizon):
        d = np.sqrt(np.sum((Y[i + k] - Y[j + k]) ** 2, axis=1))
        div[k] = np.mean(np.log(np.maximum(d, floor)))
    return div, len(i)


def linear_region(div: np.ndarray, rise_fraction: float = 0.7) -> tuple[int, int]:
    """Fit window from the start of the curve to where it has covered
    ``rise_fraction`` of its total rise (saturation excluded)."""
    d = np.asarray(div)
    lo, hi = d[0], np.max(d)
    if not hi > lo:
        return 0, len(d)
    target = lo + rise_fraction * (hi - lo)
    end = int(np.argmax(d >= target)) + 1
    return 0, max(end, min(len(d), 3))


def max_lyapunov(series, dt: float, spec: EmbeddingSpec | None = None, theiler: int | None = None,
                 fit_range: tuple[int, int] | None = None, horizon: int | None = None) -> LyapunovEstimate:
    """Largest Lyapunov exponent (1/time unit of ``dt``), Rosenstein style.

    Each embedded point is paired with its nearest neighbor outside the
    Theiler window; the exponent is the least-squares slope of the mean
    log separation over ``fit_range`` (indices into the divergence curve).
    Without ``fit_range`` the window runs from 0 to 70 % of the total rise.
    """
    x = np.asarray(series, dtype=float)
    if spec is None:
        spec = default_embedding(x, dt)
    if theiler is None:
        theiler = int(round(DEFAULT_THEILER_SECONDS / dt))
    if horizon is None:
        horizon = max(10, min(int(round(20.0 / dt)), (len(x) - spec.span()) // 4))
    if len(x) - spec.span() < horizon + 2:
        raise ValueError(f"series of length {len(x)} too short")
    div, pairs = divergence_curve(x, spec, theiler, horizon)
    if fit_range is None:
        fit_range = linear_region(div)
    a, b = fit_range
    if b - a < 2:
        raise ValueError("fit range needs at least two points")
    t = dt * np.arange(a, b)
    slope = float(np.polyfit(t, div[a:b], 1)[0])
    return LyapunovEstimate(slope, (a, b), div, dt, pairs, spec, theiler)


def poincare_section(traj: Trajectory, plane_value: float, direction: int = 1) -> np.ndarray:
    """(theta2, omega2) where theta1 crosses ``plane_value`` with sign(omega1) == direction.

    Crossing states come from linear interpolation between the bracketing
    samples. Returns an array of shape (k, 2).
    """
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    g = traj.theta[:, 0] - plane_value
    a, b = g[:-1], g[1:]
    if direction > 0:
        hit = (a < 0) & (b >= 0)
    else:
        hit = (a > 0) & (b <= 0)
    idx = np.flatnonzero(hit)
    w = traj.omega[:, 0]
    idx = idx[(0.5 * (w[idx] + w[idx + 1])) * direction > 0]
    if len(idx) == 0:
        return np.empty((0, 2))
    frac = -a[idx] / (b[idx] - a[idx])
    th2 = traj.theta[idx, 1] + frac * (traj.theta[idx + 1, 1] - traj.theta[idx, 1])
    om2 = traj.omega[idx, 1] + frac * (traj.omega[idx + 1, 1] - traj.omega[idx, 1])
    return np.column_stack([th2, om2])


def local_maxima(x) -> np.ndarray:
    """Values of strict local maxima; a plateau peak counts once (first sample)."""
    x = np.asarray(x, dtype=float)
    out = []
    n = len(x)
    j = 1
    while j < n - 1:
        if x[j] > x[j - 1]:
            k = j
            while k < n - 1 and x[k + 1] == x[j]:
                k += 1
            if k < n - 1 and x[k + 1] < x[j]:
                out.append(x[j])
            j = k + 1
        else:
            j += 1
    return np.array(out)


def maxima_spread(maxima) -> float:
    m = np.asarray(maxima)
    return float(np.ptp(m)) if len(m) else 0.0


def distinct_values(values, tol: float = 1e-3) -> int:
    """Count of values that differ from their sorted predecessor by > tol."""
    v = np.sort(np.asarray(values))
    if len(v) == 0:
        return 0
    return 1 + int(np.sum(np.diff(v) > tol))


@dataclass
class BifurcationResult:
    maxima: dict[float, np.ndarray] = field(default_factory=dict)

    def rows(self):
        for L in sorted(self.maxima):
            for v in self.maxima[L]:
                yield L, v


def bifurcation_sweep(template: ScenarioConfig, delays, transient: float = 100.0,
                      t_end: float = 300.0, workers: int = 0) -> BifurcationResult:
    """theta2 local maxima after ``transient`` for each dead time in ``delays``."""
    delays = [float(L) for L in delays]
    cfgs = [template.replace(mode="single_pd", delay_slave=L, t_end=t_end) for L in delays]
    trajs = run_many(cfgs, workers)
    res = BifurcationResult()
    for L, tr in zip(delays, trajs):
        res.maxima[L] = local_maxima(tr.theta[tr.window(transient), 1])
    return res


def rms(series, window: slice | None = None) -> float:
    x = np.asarray(series, dtype=float)
    if window is not None:
        x = x[window]
    if len(x) == 0:
        return math.nan
    return float(np.sqrt(np.mean(x * x)))


def total_variation(series, window: slice | None = None) -> float:
    x = np.asarray(series, dtype=float)
    if window is not None:
        x = x[window]
    return float(np.sum(np.abs(np.diff(x, axis=0))))
