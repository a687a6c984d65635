"""Two-way coherent-state quantum key distribution under Gaussian-cloner attacks.

Closed-form noise variances, mutual informations and the security threshold,
cross-checked by a trajectory-level Monte Carlo simulation of the protocol
and by a small Gaussian covariance-matrix engine.
"""

__version__ = "0.1.0"

from .core_math import ComplexAmplitude, InsufficientDataError, SampleStats
from .phase_space import BeamSplitter, GaussianState
from .cloner import GqcmParams, UncertaintyViolationError
from .protocol import ChannelModel, ProtocolConfig, Transcript, run_session
from .attack import AttackConfig, EveRecord, Strategy, as_channel_hook
from .security import SecurityReport, build_report, threshold_closed_form, threshold_numeric

__all__ = [
    "AttackConfig",
    "BeamSplitter",
    "ChannelModel",
    "ComplexAmplitude",
    "EveRecord",
    "GaussianState",
    "GqcmParams",
    "InsufficientDataError",
    "ProtocolConfig",
    "SampleStats",
    "SecurityReport",
    "Strategy",
    "Transcript",
    "UncertaintyViolationError",
    "as_channel_hook",
    "build_report",
    "run_session",
    "threshold_closed_form",
    "threshold_numeric",
]
