"""Simulation toolkit for a driven qubit-resonator system whose qubit
frequency is sinusoidally modulated, with closed- and open-system
propagators, effective sideband models, and a reproduction harness."""

__version__ = "0.1.0"

from .errors import (
    AccuracyError,
    ContractViolation,
    CutoffConvergenceWarning,
    DomainError,
    RabimodError,
    RotatingWaveWarning,
    SteadyStateWarning,
    StiffnessError,
)

__all__ = [
    "AccuracyError",
    "ContractViolation",
    "CutoffConvergenceWarning",
    "DomainError",
    "RabimodError",
    "RotatingWaveWarning",
    "SteadyStateWarning",
    "StiffnessError",
    "__version__",
]
