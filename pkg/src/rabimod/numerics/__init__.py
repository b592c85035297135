"""Self-contained numerical kernel: Bessel J, Hermitian eigensolver wrapper,
and adaptive embedded RK4(5) propagators for state vectors and density
matrices."""

from .bessel import bessel_j
from .linalg import EigenDecomposition, eigh
from .timedep import ExpSum, OperatorSum, constant_term, hermitian_pair
from .integrate import (
    IntegrationResult,
    Liouvillian,
    integrate_master,
    integrate_schrodinger,
)

__all__ = [
    "bessel_j",
    "eigh",
    "EigenDecomposition",
    "ExpSum",
    "OperatorSum",
    "constant_term",
    "hermitian_pair",
    "Liouvillian",
    "IntegrationResult",
    "integrate_schrodinger",
    "integrate_master",
]
