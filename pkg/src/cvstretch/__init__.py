"""Gaussian channel algebra and finite-energy teleportation-stretching numerics."""

from .channels import (
    ChannelKind,
    GaussianChannelTriplet,
    apply,
    choi,
    classify,
    compose,
    covariance_gain,
    is_physical,
    make_channel,
)
from .errors import ConvergenceError, ValidationError
from .fock_sim import (
    FockOperator,
    apply_channel_fock,
    bell_project,
    distance,
    integrate_stretch,
    make_ket,
)
from .gaussian_core import GaussianState, displace, log_negativity, make_state, symplectic_spectrum
from .stretching import StretchPlan, achieved_channel, make_plan, simulate_locc_gaussian

__all__ = [
    "ChannelKind",
    "ConvergenceError",
    "FockOperator",
    "GaussianChannelTriplet",
    "GaussianState",
    "StretchPlan",
    "ValidationError",
    "achieved_channel",
    "apply",
    "apply_channel_fock",
    "bell_project",
    "choi",
    "classify",
    "compose",
    "covariance_gain",
    "displace",
    "distance",
    "integrate_stretch",
    "is_physical",
    "log_negativity",
    "make_channel",
    "make_ket",
    "make_plan",
    "make_state",
    "simulate_locc_gaussian",
    "symplectic_spectrum",
]
