"""Event-triggered backstepping boundary control of a 1-D reaction-diffusion PDE.

The subpackages cover the special functions behind the kernels, the kernels
and Volterra transforms themselves, an implicit Euler plant simulator, the
event-triggered closed loop, certified constants and a CLI harness.
"""

from .analysis import CertificateReport, certify, compute_gamma, compute_p_Q, compute_phi_e, dwell_time, ges_envelope
from .errors import (
    ConfigError,
    DomainError,
    EtbcError,
    GridMismatchError,
    InvalidCertificateError,
    InvalidRegimeError,
    ResolutionError,
    SingularSystemError,
)
from .event_trigger import ClosedLoopRun, EventLog, Trajectory, TriggerState, simulate_closed_loop
from .kernels import KernelConfig, KernelTables, build_tables, choose_N, eval_K, eval_L, modal_truncation
from .kernels import transform_from_target, transform_to_target
from .pde_core import Grid, StateProfile, StepScheme, implicit_euler_step, l2_norm, make_initial_profile
from .special_functions import bessel_i1, bessel_j1, lambert_w0

__version__ = "0.1.0"

__all__ = [
    "CertificateReport",
    "ClosedLoopRun",
    "ConfigError",
    "DomainError",
    "EtbcError",
    "EventLog",
    "Grid",
    "GridMismatchError",
    "InvalidCertificateError",
    "InvalidRegimeError",
    "KernelConfig",
    "KernelTables",
    "ResolutionError",
    "SingularSystemError",
    "StateProfile",
    "StepScheme",
    "Trajectory",
    "TriggerState",
    "bessel_i1",
    "bessel_j1",
    "build_tables",
    "certify",
    "choose_N",
    "compute_gamma",
    "compute_p_Q",
    "compute_phi_e",
    "dwell_time",
    "eval_K",
    "eval_L",
    "ges_envelope",
    "implicit_euler_step",
    "l2_norm",
    "lambert_w0",
    "make_initial_profile",
    "modal_truncation",
    "simulate_closed_loop",
    "transform_from_target",
    "transform_to_target",
]
