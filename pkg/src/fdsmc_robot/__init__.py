"""Delayed two-link robot: chaos under PD control, FDSMC synchronization."""

from .chaos_kit import EmbeddingSpec, LyapunovEstimate, delay_embed, max_lyapunov, poincare_section
from .controllers import FdsmcController, FdsmcGains, PdGains, sgn
from .dde_sim import ConfigError, ScenarioConfig, SimulationDiverged, Trajectory, simulate
from .frac_ops import GLKernel, SampledSignal, caputo_gl, frac_integral, gl_weights
from .robot_model import JointState, RobotParams

__version__ = "0.1.0"

__all__ = [
    "EmbeddingSpec", "LyapunovEstimate", "delay_embed", "max_lyapunov", "poincare_section",
    "FdsmcController", "FdsmcGains", "PdGains", "sgn",
    "ConfigError", "ScenarioConfig", "SimulationDiverged", "Trajectory", "simulate",
    "GLKernel", "SampledSignal", "caputo_gl", "frac_integral", "gl_weights",
    "JointState", "RobotParams",
]
