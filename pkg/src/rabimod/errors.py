"""Exception and warning types shared across the package."""


class RabimodError(Exception):
    """Base class for package errors."""


class DomainError(RabimodError, ValueError):
    """Argument outside the supported domain of a numerical routine."""


class ContractViolation(RabimodError, ValueError):
    """Input violates a documented precondition (e.g. non-Hermitian matrix)."""


class StiffnessError(RabimodError, RuntimeError):
    """Adaptive integrator drove the step size below the underflow floor."""


class AccuracyError(RabimodError, RuntimeError):
    """A guaranteed post-condition (norm/trace drift bound) was violated."""


class RotatingWaveWarning(UserWarning):
    """Effective Hamiltonian requested outside its validity window."""


class CutoffConvergenceWarning(UserWarning):
    """Observable shifted by more than the gate when the cutoff was raised."""


class SteadyStateWarning(UserWarning):
    """Trailing-window statistics still drifting at the end of the horizon."""
