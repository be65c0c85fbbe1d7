"""Fixed-step simulation of the dead-time robot loop.

Every plant is advanced with classical RK4 on (theta, theta_dot). The
controller runs once per grid step at time t, its command goes into a
dead-time buffer, and the plant integrates the entry written L/h steps
earlier, held constant over the four RK4 stages.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import MISSING, asdict, dataclass, field, fields
from typing import NamedTuple

import numpy as np

from .controllers import (
    FdsmcController,
    FdsmcGains,
    MasterSnapshot,
    PdGains,
    SmcGains,
    smc_baseline_torque,
    third_derivative_estimate,
)
from .frac_ops import DEFAULT_MEMORY
from .robot_model import Coeffs, JointState, RobotParams, SingularInertiaError, accel_fast, rk4_step

MODES = ("single_pd", "master_slave_pd", "master_slave_fdsmc", "master_slave_smc_baseline")
ACCEL_SOURCES = ("model", "measured")

REF_AMPLITUDE = math.pi / 4
REF_OMEGA = 0.5 * math.pi


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class SimulationDiverged(RuntimeError):
    def __init__(self, step: int, time: float, partial=None):
        super().__init__(f"non-finite state at step {step} (t={time:.6g} s)")
        self.step = step
        self.time = time
        self.partial = partial


def desired_trajectory(t: float):
    """Reference (theta_d, theta_d_dot, theta_d_ddot), same for both joints."""
    w = REF_OMEGA
    sn, cs = math.sin(w * t), math.cos(w * t)
    return REF_AMPLITUDE * sn, REF_AMPLITUDE * w * cs, -REF_AMPLITUDE * w * w * sn


def delay_steps(delay: float, h: float, key: str = "delay") -> int:
    k = round(delay / h)
    if delay < 0 or abs(k * h - delay) > 1e-9 * max(1.0, delay):
        raise ConfigError(key, f"delay {delay} is not a non-negative integer multiple of h={h}")
    return int(k)


class TorqueRingBuffer:
    """Dead-time history of commanded torque.

    ``push`` stores the command for the current step and returns the one
    written ``delay/h`` steps before it (zeros until that many writes exist).
    """

    def __init__(self, h: float, delay: float):
        self.h = h
        self.delay = delay
        self.lag = delay_steps(delay, h)
        self.capacity = self.lag + 1
        self._entries = [(0.0, 0.0)] * self.capacity
        self._writes = 0

    def push(self, u1: float, u2: float):
        j = self._writes
        self._entries[j % self.capacity] = (u1, u2)
        self._writes += 1
        if j < self.lag:
            return (0.0, 0.0)
        return self._entries[(j - self.lag) % self.capacity]

    def lookup(self, steps_back: int):
        """Entry written ``steps_back`` writes ago (0 is the latest)."""
        if not 0 <= steps_back < self.capacity:
            raise IndexError(steps_back)
        j = self._writes - 1 - steps_back
        if j < 0:
            return (0.0, 0.0)
        return self._entries[j % self.capacity]


@dataclass
class ScenarioConfig:
    """One experiment. Times in seconds, torques in N m, angles in rad."""

    mode: str = "single_pd"
    h: float = 5e-4
    t_end: float = 100.0
    delay_master: float = 0.005
    delay_slave: float = 0.015
    pd_kp: float = 4.0
    pd_kd: float = 4.0
    ks: float = 1.0
    kp: float = 2.0
    kd: float = 10.0
    kf: float = 0.1
    lam: float = 0.7
    memory_len: int = DEFAULT_MEMORY
    activation_time: float = 0.1
    uncertainty: bool = False
    delay_applies_to_control: bool = True
    accel_source: str = "model"
    smc_c: float = 10.0
    smc_k: float = 1.0
    theta0: list = field(default_factory=lambda: [0.0, 0.0])
    omega0: list = field(default_factory=lambda: [0.0, 0.0])
    # diagnostics
    transient: float = 0.0
    rms_window: list = field(default_factory=lambda: [10.0, 100.0])
    lyapunov: bool = False
    poincare_plane: float | None = None
    embedding: bool = False
    embedding_dim: int = 4
    embedding_delay: float | None = None
    bifurcation_delays: list = field(default_factory=list)
    workers: int = 0
    plots: bool = False
    output_dir: str = ""

    REQUIRED = ("mode", "h", "t_end")

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError("mode", f"unknown mode {self.mode!r}; expected one of {MODES}")
        if not (isinstance(self.h, (int, float)) and self.h > 0):
            raise ConfigError("h", "grid step must be a positive number")
        if not self.t_end > 0:
            raise ConfigError("t_end", "horizon must be positive")
        delay_steps(self.delay_master, self.h, "delay_master")
        delay_steps(self.delay_slave, self.h, "delay_slave")
        for L in self.bifurcation_delays:
            delay_steps(L, self.h, "bifurcation_delays")
        if self.activation_time < 0:
            raise ConfigError("activation_time", "must be non-negative")
        if self.accel_source not in ACCEL_SOURCES:
            raise ConfigError("accel_source", f"expected one of {ACCEL_SOURCES}")
        if self.memory_len < 1:
            raise ConfigError("memory_len", "must be positive")
        if len(self.theta0) != 2 or len(self.omega0) != 2:
            raise ConfigError("theta0", "initial state needs two joints")
        if len(self.rms_window) != 2 or self.rms_window[0] > self.rms_window[1]:
            raise ConfigError("rms_window", "expected [start, stop] with start <= stop")
        if self.embedding_dim < 2:
            raise ConfigError("embedding_dim", "must be at least 2")
        if self.embedding_delay is not None and not self.embedding_delay > 0:
            raise ConfigError("embedding_delay", "must be positive seconds or null")
        if self.transient < 0 or self.transient >= self.t_end:
            raise ConfigError("transient", "must lie in [0, t_end)")
        try:
            PdGains(self.pd_kp, self.pd_kd)
            FdsmcGains(self.ks, self.kp, self.kd, self.kf, self.lam)
        except ValueError as exc:
            raise ConfigError("gains", str(exc)) from None

    @property
    def steps(self) -> int:
        return int(round(self.t_end / self.h))

    @property
    def pd_gains(self) -> PdGains:
        return PdGains(self.pd_kp, self.pd_kd)

    @property
    def fdsmc_gains(self) -> FdsmcGains:
        return FdsmcGains(self.ks, self.kp, self.kd, self.kf, self.lam)

    @property
    def smc_gains(self) -> SmcGains:
        return SmcGains(self.smc_c, self.smc_k)

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        for key in d:
            if key not in known:
                raise ConfigError(key, "unknown key")
        for key in cls.REQUIRED:
            if key not in d:
                raise ConfigError(key, "missing required key")
        defaults = {f.name: f.default_factory() if f.default_factory is not MISSING else f.default
                    for f in fields(cls)}
        for key, value in d.items():
            _check_type(key, value, defaults[key])
        return cls(**d)

    def replace(self, **changes) -> "ScenarioConfig":
        d = self.to_dict()
        d.update(changes)
        return ScenarioConfig.from_dict(d)


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_type(key: str, value, default) -> None:
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, (int, float)):
        ok = _is_number(value) and (isinstance(value, int) if isinstance(default, int) else True)
    elif isinstance(default, str):
        ok = isinstance(value, str)
    elif isinstance(default, list):
        ok = isinstance(value, (list, tuple)) and all(_is_number(v) for v in value)
    else:  # optional floats default to None
        ok = value is None or _is_number(value)
    if not ok:
        raise ConfigError(key, f"bad value {value!r}")


def inject_uncertainty(cfg: ScenarioConfig) -> RobotParams:
    """Parameters of the simulated slave plant (the controller stays nominal)."""
    return RobotParams.uncertain() if cfg.uncertainty else RobotParams.nominal()


def grid_window(n: int, h: float, t_start: float, t_stop: float | None = None, t0: float = 0.0) -> slice:
    """Index slice of the grid points t0 + j h (j < n) inside [t_start, t_stop]."""
    i0 = int(math.ceil(round((t_start - t0) / h, 9)))
    i1 = n if t_stop is None else int(math.floor(round((t_stop - t0) / h, 9))) + 1
    return slice(max(i0, 0), min(i1, n))


@dataclass
class Trajectory:
    """Per-step records on a uniform grid; record j is time t0 + j h."""

    h: float
    t: np.ndarray
    theta: np.ndarray
    omega: np.ndarray
    tau_applied: np.ndarray
    tau_cmd: np.ndarray
    S: np.ndarray | None = None
    torque_rate: np.ndarray | None = None
    t0: float = 0.0

    def __len__(self) -> int:
        return len(self.t)

    @classmethod
    def allocate(cls, n_records: int, h: float, with_surface: bool = False) -> "Trajectory":
        z = lambda: np.full((n_records, 2), np.nan)  # noqa: E731
        return cls(h=h, t=h * np.arange(n_records), theta=z(), omega=z(), tau_applied=z(),
                   tau_cmd=z(), S=z() if with_surface else None,
                   torque_rate=z() if with_surface else None)

    def truncated(self, n: int) -> "Trajectory":
        cut = lambda a: None if a is None else a[:n].copy()  # noqa: E731
        return Trajectory(self.h, self.t[:n].copy(), cut(self.theta), cut(self.omega),
                          cut(self.tau_applied), cut(self.tau_cmd), cut(self.S),
                          cut(self.torque_rate), self.t0)

    def segment(self, t_start: float, t_stop: float | None = None) -> "Trajectory":
        """Copy of the records with t_start <= t <= t_stop."""
        w = self.window(t_start, t_stop)
        cut = lambda a: None if a is None else a[w].copy()  # noqa: E731
        return Trajectory(self.h, cut(self.t), cut(self.theta), cut(self.omega),
                          cut(self.tau_applied), cut(self.tau_cmd), cut(self.S),
                          cut(self.torque_rate), self.t0)

    def window(self, t_start: float, t_stop: float | None = None) -> slice:
        return grid_window(len(self), self.h, t_start, t_stop, self.t0)


class MasterSlaveRun(NamedTuple):
    master: Trajectory
    slave: Trajectory

    @property
    def error(self) -> np.ndarray:
        """Tracking error theta_m - theta_s, shape (n, 2)."""
        return self.master.theta - self.slave.theta


def _finite(x) -> bool:
    return all(math.isfinite(v) for v in x)


def simulate(cfg: ScenarioConfig):
    """Run one scenario; returns a Trajectory or a MasterSlaveRun."""
    cfg.validate()
    # a diverging run overflows before the watchdog sees a non-finite state
    with np.errstate(over="ignore", invalid="ignore"):
        if cfg.mode == "single_pd":
            return _simulate_single(cfg)
        return _simulate_master_slave(cfg)


def _simulate_single(cfg: ScenarioConfig) -> Trajectory:
    h, n = cfg.h, cfg.steps
    coeffs = Coeffs(RobotParams.nominal())
    kp, kd = cfg.pd_kp, cfg.pd_kd
    buf = TorqueRingBuffer(h, cfg.delay_slave)
    tr = Trajectory.allocate(n + 1, h)
    x = (float(cfg.theta0[0]), float(cfg.theta0[1]), float(cfg.omega0[0]), float(cfg.omega0[1]))
    theta, omega, tau_a, tau_c = tr.theta, tr.omega, tr.tau_applied, tr.tau_cmd
    for j in range(n + 1):
        t = j * h
        ref, ref_dot, _ = desired_trajectory(t)
        c1 = kp * (ref - x[0]) + kd * (ref_dot - x[2])
        c2 = kp * (ref - x[1]) + kd * (ref_dot - x[3])
        u1, u2 = buf.push(c1, c2)
        theta[j] = x[0], x[1]
        omega[j] = x[2], x[3]
        tau_c[j] = c1, c2
        tau_a[j] = u1, u2
        if j == n:
            break
        try:
            x = rk4_step(coeffs, x, u1, u2, h)
        except (ValueError, OverflowError, SingularInertiaError):
            x = (math.nan,) * 4
        if not _finite(x):
            raise SimulationDiverged(j + 1, (j + 1) * h, tr.truncated(j + 1))
    return tr


def _simulate_master_slave(cfg: ScenarioConfig) -> MasterSlaveRun:
    h, n = cfg.h, cfg.steps
    nominal = RobotParams.nominal()
    cm = Coeffs(nominal)
    cs = Coeffs(inject_uncertainty(cfg))
    kp, kd = cfg.pd_kp, cfg.pd_kd
    buf_m = TorqueRingBuffer(h, cfg.delay_master)
    buf_s = TorqueRingBuffer(h, cfg.delay_slave)
    with_surface = cfg.mode == "master_slave_fdsmc"
    mtr = Trajectory.allocate(n + 1, h)
    str_ = Trajectory.allocate(n + 1, h, with_surface=with_surface)

    ctrl = None
    if with_surface:
        ctrl = FdsmcController(cfg.fdsmc_gains, nominal, h, cfg.memory_len, cfg.accel_source)
    smc = cfg.smc_gains

    xm = (0.0, 0.0, 0.0, 0.0)
    xs = (float(cfg.theta0[0]), float(cfg.theta0[1]), float(cfg.omega0[0]), float(cfg.omega0[1]))
    prev_am = None
    prev_ws = None
    # half a step of slack so that activation lands on the intended grid point
    act = cfg.activation_time - 0.5 * h
    controlled = cfg.mode != "master_slave_pd"

    for j in range(n + 1):
        t = j * h
        ref, ref_dot, _ = desired_trajectory(t)

        cm1 = kp * (ref - xm[0]) + kd * (ref_dot - xm[2])
        cm2 = kp * (ref - xm[1]) + kd * (ref_dot - xm[3])
        um1, um2 = buf_m.push(cm1, cm2)
        try:
            am = np.array(accel_fast(cm, xm[1], xm[2], xm[3], um1, um2))
        except SingularInertiaError:
            raise SimulationDiverged(j, t, None) from None
        jerk = third_derivative_estimate(prev_am, am, h)
        prev_am = am

        slave = JointState((xs[0], xs[1]), (xs[2], xs[3]))
        e = np.array([xm[0] - xs[0], xm[1] - xs[1]])
        e_dot = np.array([xm[2] - xs[2], xm[3] - xs[3]])
        ws = np.array([xs[2], xs[3]])
        meas_acc = None if prev_ws is None else (ws - prev_ws) / h
        prev_ws = ws

        active = controlled and t >= act
        if not active:
            c = (kp * (ref - xs[0]) + kd * (ref_dot - xs[2]),
                 kp * (ref - xs[1]) + kd * (ref_dot - xs[3]))
            if ctrl is not None:
                str_.S[j] = ctrl.observe(e, e_dot)
                str_.torque_rate[j] = 0.0
                ctrl.reset_torque(c)
        elif ctrl is not None:
            acting = None
            if cfg.delay_applies_to_control and buf_s.lag > 0:
                acting = np.array(buf_s.lookup(buf_s.lag - 1))
            c = tuple(ctrl.step(slave, MasterSnapshot(am, jerk), e, e_dot, meas_acc, acting))
            str_.S[j] = ctrl.state.last_surface
            str_.torque_rate[j] = ctrl.state.last_rate
        else:
            c = tuple(smc_baseline_torque(smc, e, e_dot, am, nominal, slave))

        delayed = buf_s.push(c[0], c[1])
        if active and not cfg.delay_applies_to_control:
            us1, us2 = c
        else:
            us1, us2 = delayed

        mtr.theta[j] = xm[0], xm[1]
        mtr.omega[j] = xm[2], xm[3]
        mtr.tau_cmd[j] = cm1, cm2
        mtr.tau_applied[j] = um1, um2
        str_.theta[j] = xs[0], xs[1]
        str_.omega[j] = xs[2], xs[3]
        str_.tau_cmd[j] = c
        str_.tau_applied[j] = us1, us2
        if j == n:
            break
        try:
            xm = rk4_step(cm, xm, um1, um2, h)
            xs = rk4_step(cs, xs, us1, us2, h)
        except (ValueError, OverflowError, SingularInertiaError):
            xs = (math.nan,) * 4
        if not (_finite(xm) and _finite(xs) and math.isfinite(c[0]) and math.isfinite(c[1])):
            raise SimulationDiverged(j + 1, (j + 1) * h,
                                     MasterSlaveRun(mtr.truncated(j + 1), str_.truncated(j + 1)))
    return MasterSlaveRun(mtr, str_)


def _run_one(cfg_dict: dict):
    return simulate(ScenarioConfig.from_dict(cfg_dict))


def run_many(cfgs: list[ScenarioConfig], workers: int = 0) -> list:
    """Simulate independent scenarios, in parallel when ``workers`` allows.

    ``workers=0`` picks ``os.cpu_count()``; results come back in input order.
    """
    if not cfgs:
        return []
    workers = workers or os.cpu_count() or 1
    workers = min(workers, len(cfgs))
    if workers == 1:
        return [simulate(c) for c in cfgs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_run_one, [c.to_dict() for c in cfgs]))
