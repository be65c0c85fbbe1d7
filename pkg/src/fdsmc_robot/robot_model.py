"""Planar two-link manipulator with viscous joint friction.

    M(theta) theta_ddot + H(theta, theta_dot) + D theta_dot = tau

with no gravity term (the arm moves in a horizontal plane). The inertia
terms follow the pneumatic-arm parametrization

    I_i = m_i l_i^2 / 3,  J1 = I1 + (m1 + 4 m2) l1^2,  J2 = I2 + m2 l2^2,
    s = 2 m2 l1 l2

which is kept as-is even where it departs from textbook conventions.

The ``_fast`` helpers work on plain floats and are what the simulator calls
in its inner loop; the public functions wrap them with numpy in/out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DET_EPS = 1e-9


class SingularInertiaError(ArithmeticError):
    pass


@dataclass(frozen=True)
class RobotParams:
    l1: float = 0.25
    l2: float = 0.25
    m1: float = 1.0
    m2: float = 1.0
    D1: float = 0.5
    D2: float = 0.5

    def __post_init__(self):
        for name in ("l1", "l2", "m1", "m2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("D1", "D2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def I1(self) -> float:
        return self.m1 * self.l1**2 / 3.0

    @property
    def I2(self) -> float:
        return self.m2 * self.l2**2 / 3.0

    @property
    def J1(self) -> float:
        return self.I1 + (self.m1 + 4.0 * self.m2) * self.l1**2

    @property
    def J2(self) -> float:
        return self.I2 + self.m2 * self.l2**2

    @property
    def s(self) -> float:
        return 2.0 * self.m2 * self.l1 * self.l2

    @classmethod
    def nominal(cls) -> "RobotParams":
        return cls()

    @classmethod
    def uncertain(cls) -> "RobotParams":
        """Slave plant with the 60 % parameter perturbation."""
        return cls(l1=0.15, l2=0.15, m1=0.7, m2=0.4)


@dataclass(frozen=True)
class JointState:
    theta: np.ndarray
    theta_dot: np.ndarray

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float).reshape(2)
        om = np.asarray(self.theta_dot, dtype=float).reshape(2)
        if not (np.all(np.isfinite(th)) and np.all(np.isfinite(om))):
            raise ValueError("joint state must be finite")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "theta_dot", om)

    @classmethod
    def rest(cls) -> "JointState":
        return cls(np.zeros(2), np.zeros(2))


# -- float kernels ---------------------------------------------------------


class Coeffs:
    """Precomputed scalars for the float kernels."""

    __slots__ = ("J1", "J2", "s", "D1", "D2")

    def __init__(self, p: RobotParams):
        self.J1 = p.J1
        self.J2 = p.J2
        self.s = p.s
        self.D1 = p.D1
        self.D2 = p.D2


def inertia_fast(c: Coeffs, th2: float):
    sc = c.s * math.cos(th2)
    return c.J1 + c.J2 + 2.0 * sc, c.J2 + sc, c.J2


def accel_fast(c: Coeffs, th2: float, w1: float, w2: float, u1: float, u2: float):
    """theta_ddot for one state and torque; returns a 2-tuple."""
    cs = math.cos(th2)
    sn = math.sin(th2)
    s = c.s
    a = c.J1 + c.J2 + 2.0 * s * cs
    b = c.J2 + s * cs
    d = c.J2
    r1 = u1 + s * (2.0 * w1 * w2 + w2 * w2) * sn - c.D1 * w1
    r2 = u2 - s * w1 * w1 * sn - c.D2 * w2
    det = a * d - b * b
    if det <= DET_EPS:
        raise SingularInertiaError(f"inertia determinant {det:.3e} at theta2={th2}")
    return (d * r1 - b * r2) / det, (a * r2 - b * r1) / det


def rk4_step(c: Coeffs, x, u1: float, u2: float, h: float):
    """One classical RK4 step of (th1, th2, w1, w2) under constant torque."""
    th1, th2, w1, w2 = x
    a1, b1 = accel_fast(c, th2, w1, w2, u1, u2)
    hh = 0.5 * h
    a2, b2 = accel_fast(c, th2 + hh * w2, w1 + hh * a1, w2 + hh * b1, u1, u2)
    k2w1, k2w2 = w1 + hh * a1, w2 + hh * b1
    a3, b3 = accel_fast(c, th2 + hh * k2w2, w1 + hh * a2, w2 + hh * b2, u1, u2)
    k3w1, k3w2 = w1 + hh * a2, w2 + hh * b2
    a4, b4 = accel_fast(c, th2 + h * k3w2, w1 + h * a3, w2 + h * b3, u1, u2)
    k4w1, k4w2 = w1 + h * a3, w2 + h * b3
    h6 = h / 6.0
    return (
        th1 + h6 * (w1 + 2.0 * k2w1 + 2.0 * k3w1 + k4w1),
        th2 + h6 * (w2 + 2.0 * k2w2 + 2.0 * k3w2 + k4w2),
        w1 + h6 * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
        w2 + h6 * (b1 + 2.0 * b2 + 2.0 * b3 + b4),
    )


# -- public API ------------------------------------------------------------


def inertia(p: RobotParams, theta2: float) -> np.ndarray:
    m11, m12, m22 = inertia_fast(Coeffs(p), float(theta2))
    return np.array([[m11, m12], [m12, m22]])


def coriolis(p: RobotParams, state: JointState) -> np.ndarray:
    """Centripetal and Coriolis torque H(theta, theta_dot)."""
    s = p.s
    sn = math.sin(state.theta[1])
    w1, w2 = state.theta_dot
    return np.array([-s * (2.0 * w1 * w2 + w2 * w2) * sn, s * w1 * w1 * sn])


def bias_torque(p: RobotParams, state: JointState) -> np.ndarray:
    """H + D theta_dot: everything on the left-hand side except M theta_ddot."""
    return coriolis(p, state) + np.array([p.D1, p.D2]) * state.theta_dot


def forward_dynamics(p: RobotParams, state: JointState, torque) -> np.ndarray:
    u1, u2 = (float(v) for v in torque)
    return np.array(accel_fast(Coeffs(p), float(state.theta[1]), *map(float, state.theta_dot), u1, u2))


def inverse_2x2(m: np.ndarray) -> np.ndarray:
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if det <= DET_EPS:
        raise SingularInertiaError(f"inertia determinant {det:.3e}")
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / det


def inertia_dot(p: RobotParams, theta2: float, theta2_dot: float) -> np.ndarray:
    """Time derivative of the inertia matrix."""
    k = -p.s * math.sin(theta2) * theta2_dot
    return np.array([[2.0 * k, k], [k, 0.0]])


def inverse_inertia_dot(p: RobotParams, theta2: float, theta2_dot: float) -> np.ndarray:
    """d(M^-1)/dt = -M^-1 Mdot M^-1."""
    mi = inverse_2x2(inertia(p, theta2))
    return -mi @ inertia_dot(p, theta2, theta2_dot) @ mi


def coriolis_dot(p: RobotParams, state: JointState, theta_ddot) -> np.ndarray:
    """Chain-rule time derivative of :func:`coriolis`."""
    s = p.s
    th2 = state.theta[1]
    w1, w2 = state.theta_dot
    a1, a2 = theta_ddot
    sn, cs = math.sin(th2), math.cos(th2)
    d1 = -s * ((2.0 * a1 * w2 + 2.0 * w1 * a2 + 2.0 * w2 * a2) * sn + (2.0 * w1 * w2 + w2 * w2) * cs * w2)
    d2 = s * (2.0 * w1 * a1 * sn + w1 * w1 * cs * w2)
    return np.array([d1, d2])


def bias_torque_dot(p: RobotParams, state: JointState, theta_ddot) -> np.ndarray:
    return coriolis_dot(p, state, theta_ddot) + np.array([p.D1, p.D2]) * np.asarray(theta_ddot)


def fk_endeffector(p: RobotParams, theta):
    """End-effector (x, y); ``theta`` may be shape (2,) or (n, 2)."""
    th = np.asarray(theta, dtype=float)
    t1, t2 = th[..., 0], th[..., 1]
    x = p.l1 * np.cos(t1) + p.l2 * np.cos(t1 + t2)
    y = p.l1 * np.sin(t1) + p.l2 * np.sin(t1 + t2)
    return x, y


def mech_energy(p: RobotParams, state: JointState) -> float:
    """Kinetic energy 0.5 * w^T M w (the model has no potential term)."""
    w = state.theta_dot
    return 0.5 * float(w @ inertia(p, state.theta[1]) @ w)
