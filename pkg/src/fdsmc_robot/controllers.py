"""Joint controllers: PD, fractional dynamic sliding mode, classical SMC.

Tracking error convention for the master-slave laws is ``e = theta_m -
theta_s`` (master minus slave). With that sign the torque-rate law below is
stabilizing as written; see :meth:`FdsmcController.torque_rate`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .frac_ops import DEFAULT_MEMORY, GLKernel, GLStream
from .robot_model import (
    JointState,
    RobotParams,
    bias_torque,
    bias_torque_dot,
    forward_dynamics,
    inertia,
    inverse_2x2,
    inverse_inertia_dot,
)


def sgn(x: float) -> float:
    if x > 0:
        return 1.0
    if x < 0:
        return -1.0
    return 0.0


def sgn_vec(x) -> np.ndarray:
    return np.sign(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class PdGains:
    kp: float = 4.0
    kd: float = 4.0

    def __post_init__(self):
        if not (self.kp > 0 and self.kd > 0):
            raise ValueError("PD gains must be positive")


def pd_torque(g: PdGains, theta_d, theta_d_dot, state: JointState) -> np.ndarray:
    """tau = Kp (theta_d - theta) + Kd (theta_d_dot - theta_dot), per joint."""
    return g.kp * (np.asarray(theta_d) - state.theta) + g.kd * (np.asarray(theta_d_dot) - state.theta_dot)


@dataclass(frozen=True)
class FdsmcGains:
    ks: float = 1.0
    kp: float = 2.0
    kd: float = 10.0
    kf: float = 0.1
    lam: float = 0.7

    def __post_init__(self):
        if self.ks < 0 or not (self.kp > 0 and self.kd > 0 and self.kf > 0):
            raise ValueError("FDSMC gains must be positive (ks may be zero)")
        if not 0 < self.lam < 1:
            raise ValueError(f"fractional order must lie in (0, 1), got {self.lam}")


def third_derivative_estimate(prev_accel, accel, h: float) -> np.ndarray:
    """Backward difference of the master acceleration; zero on the first call."""
    if prev_accel is None:
        return np.zeros_like(np.asarray(accel, dtype=float))
    return (np.asarray(accel) - np.asarray(prev_accel)) / h


@dataclass
class FdsmcState:
    """Controller memory advanced once per grid step."""

    torque: np.ndarray
    d_lam_e: GLStream
    d_lam_edot: GLStream
    d_rest_edot: GLStream
    d_rest_sgn: GLStream
    prev_master_accel: np.ndarray | None = None
    last_surface: np.ndarray = field(default_factory=lambda: np.zeros(2))
    last_rate: np.ndarray = field(default_factory=lambda: np.zeros(2))

    @classmethod
    def fresh(cls, gains: FdsmcGains, h: float, memory_len: int = DEFAULT_MEMORY) -> "FdsmcState":
        lam = GLKernel(gains.lam, h, memory_len)
        rest = GLKernel(1.0 - gains.lam, h, memory_len)
        return cls(
            torque=np.zeros(2),
            d_lam_e=GLStream(lam),
            d_lam_edot=GLStream(lam),
            d_rest_edot=GLStream(rest),
            d_rest_sgn=GLStream(rest),
        )


@dataclass
class MasterSnapshot:
    accel: np.ndarray
    jerk: np.ndarray


class FdsmcController:
    """Fractional dynamic sliding mode controller for the slave arm.

    Surface (per joint)::

        S = Kp e + Kd D^lam e + Kf D^lam e_dot

    where the last term stands for D^(lam+1) e at zero initial history.
    Applying D^(1-lam) to dS/dt = -Ks sgn(S) isolates the error jerk, and
    solving the slave dynamics for it gives the torque-rate law::

        dT/dt = M {(Kp/Kf) D^(1-lam) e_dot + (Kd/Kf) e_ddot + theta_m'''
                   - d(M^-1)/dt (T - h) + M^-1 dh/dt} + Ks D^(1-lam) sgn(S)

    with h = H + D theta_dot evaluated on the controller's (nominal) model.
    The applied torque is the Euler integral of dT/dt, hence continuous.
    """

    def __init__(self, gains: FdsmcGains, model: RobotParams, h: float,
                 memory_len: int = DEFAULT_MEMORY, accel_source: str = "model"):
        if accel_source not in ("model", "measured"):
            raise ValueError(f"unknown accel_source {accel_source!r}")
        self.gains = gains
        self.model = model
        self.h = h
        self.memory_len = memory_len
        self.accel_source = accel_source
        self.state = FdsmcState.fresh(gains, h, memory_len)

    def reset_torque(self, torque) -> None:
        self.state.torque = np.array(torque, dtype=float)

    def surface(self, e, e_dot) -> np.ndarray:
        """Advance the D^lam evaluators with (e, e_dot) and return S."""
        g = self.gains
        st = self.state
        S = g.kp * np.asarray(e) + g.kd * st.d_lam_e.push(e) + g.kf * st.d_lam_edot.push(e_dot)
        st.last_surface = S
        return S

    def slave_accel(self, slave: JointState, measured_accel=None, acting_torque=None) -> np.ndarray:
        """Slave acceleration used in e_ddot.

        ``model``: nominal forward dynamics under the torque currently acting
        on the plant (``acting_torque``, defaulting to T_s). ``measured``:
        the supplied sensor estimate, when there is one.
        """
        if self.accel_source == "measured" and measured_accel is not None:
            return np.asarray(measured_accel, dtype=float)
        torque = self.state.torque if acting_torque is None else acting_torque
        return forward_dynamics(self.model, slave, torque)

    def torque_rate(self, slave: JointState, master: MasterSnapshot, e_dot, S,
                    measured_accel=None, acting_torque=None, ks: float | None = None) -> np.ndarray:
        """dT/dt for the current step; advances the D^(1-lam) evaluators."""
        g = self.gains
        st = self.state
        ks = g.ks if ks is None else ks
        acc_s = self.slave_accel(slave, measured_accel, acting_torque)
        e_ddot = master.accel - acc_s
        frac_edot = st.d_rest_edot.push(e_dot)
        frac_sgn = st.d_rest_sgn.push(sgn_vec(S))
        M = inertia(self.model, slave.theta[1])
        Minv = inverse_2x2(M)
        Minv_dot = inverse_inertia_dot(self.model, slave.theta[1], slave.theta_dot[1])
        bias = bias_torque(self.model, slave)
        bias_dot = bias_torque_dot(self.model, slave, acc_s)
        inner = ((g.kp / g.kf) * frac_edot + (g.kd / g.kf) * e_ddot + master.jerk
                 - Minv_dot @ (st.torque - bias) + Minv @ bias_dot)
        rate = M @ inner + ks * frac_sgn
        st.last_rate = rate
        return rate

    def step(self, slave: JointState, master: MasterSnapshot, e, e_dot,
             measured_accel=None, acting_torque=None) -> np.ndarray:
        """One grid step: surface, torque rate, Euler update. Returns T_s."""
        S = self.surface(e, e_dot)
        rate = self.torque_rate(slave, master, e_dot, S, measured_accel, acting_torque)
        return fdsmc_step(self.state, rate, self.h)

    def observe(self, e, e_dot) -> np.ndarray:
        """Feed the fractional memories while another law drives the slave."""
        S = self.surface(e, e_dot)
        self.state.d_rest_edot.push(e_dot)
        self.state.d_rest_sgn.push(sgn_vec(S))
        return S


def fdsmc_step(st: FdsmcState, rate, h: float) -> np.ndarray:
    """Explicit Euler accumulation T <- T + h dT/dt."""
    st.torque = st.torque + h * np.asarray(rate)
    return st.torque.copy()


@dataclass(frozen=True)
class SmcGains:
    """Classical SMC comparator: sigma = e_dot + c e, switching gain k."""

    c: float = 10.0
    k: float = 1.0


def smc_baseline_torque(g: SmcGains, e, e_dot, master_accel, model: RobotParams,
                        slave: JointState) -> np.ndarray:
    """Computed-torque equivalent control plus a discontinuous switching term.

    With e = theta_m - theta_s the closed loop gives d(sigma)/dt = -k sgn(sigma)
    on the nominal model.
    """
    sigma = np.asarray(e_dot) + g.c * np.asarray(e)
    M = inertia(model, slave.theta[1])
    v = np.asarray(master_accel) + g.c * np.asarray(e_dot) + g.k * sgn_vec(sigma)
    return M @ v + bias_torque(model, slave)


def smc_jump_scale(model: RobotParams, theta2: float) -> float:
    """Smallest eigenvalue of M: lower bound on |M dv| per unit |dv|."""
    return float(np.linalg.eigvalsh(inertia(model, theta2))[0])


__all__ = [
    "sgn", "sgn_vec", "PdGains", "pd_torque", "FdsmcGains", "FdsmcState", "FdsmcController",
    "MasterSnapshot", "fdsmc_step", "third_derivative_estimate", "SmcGains",
    "smc_baseline_torque", "smc_jump_scale",
]
