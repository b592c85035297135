"""Hermitian eigendecomposition with contract validation."""

from dataclasses import dataclass

import numpy as np

from ..errors import ContractViolation, DomainError

MAX_DIM = 512
HERMITICITY_RTOL = 1e-12


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues ascending; ``vectors[:, k]`` is the k-th eigenvector."""

    values: np.ndarray
    vectors: np.ndarray


def eigh(matrix: np.ndarray) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix (dimension <= 512).

    Validates Hermiticity against ``max|A - A^dag| <= 1e-12 * max|A|`` and
    returns ascending eigenvalues with an orthonormal set of eigenvectors
    (orthonormal also inside degenerate clusters; the intra-cluster basis
    choice is arbitrary and nothing downstream may depend on it).
    """
    a = np.asarray(matrix)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {a.shape}")
    d = a.shape[0]
    if d == 0 or d > MAX_DIM:
        raise DomainError(f"dimension must be in [1, {MAX_DIM}], got {d}")

    scale = np.max(np.abs(a))
    dev = np.max(np.abs(a - a.conj().T))
    if scale > 0.0 and dev > HERMITICITY_RTOL * scale:
        raise ContractViolation(
            f"matrix is not Hermitian: max|A - A^dag| = {dev:.3e} "
            f"exceeds {HERMITICITY_RTOL:.0e} * max|A| = {HERMITICITY_RTOL * scale:.3e}"
        )

    if np.isrealobj(a) or np.max(np.abs(a.imag)) == 0.0:
        values, vectors = np.linalg.eigh(a.real)
    else:
        values, vectors = np.linalg.eigh(a)
    return EigenDecomposition(values=values, vectors=vectors)
