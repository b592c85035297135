"""Structured time-dependent operators.

Every generator in this package is a sum ``H(t) = sum_k f_k(t) * M_k`` whose
scalar coefficients are finite exponential sums
``f_k(t) = sum_j A_j exp(i w_j t)``.  Keeping that structure explicit (instead
of hiding it in a callable) is what lets the propagation kernels run compiled
and lets the step-size cap read the retained frequencies directly.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractViolation


@dataclass(frozen=True)
class ExpSum:
    """f(t) = sum_j amps[j] * exp(1j * freqs[j] * t)."""

    amps: np.ndarray
    freqs: np.ndarray

    def __post_init__(self):
        amps = np.atleast_1d(np.asarray(self.amps, dtype=np.complex128))
        freqs = np.atleast_1d(np.asarray(self.freqs, dtype=np.float64))
        if amps.shape != freqs.shape or amps.ndim != 1:
            raise ContractViolation("amps and freqs must be 1-d arrays of equal length")
        object.__setattr__(self, "amps", amps)
        object.__setattr__(self, "freqs", freqs)

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        return np.exp(1j * np.multiply.outer(t, self.freqs)) @ self.amps

    def conjugate(self) -> "ExpSum":
        return ExpSum(np.conj(self.amps), -self.freqs)

    def shifted(self, t0: float) -> "ExpSum":
        """Time-translated coefficient: shifted(t0)(t) == self(t0 + t)."""
        return ExpSum(self.amps * np.exp(1j * self.freqs * t0), self.freqs)

    @property
    def max_frequency(self) -> float:
        return float(np.max(np.abs(self.freqs))) if self.freqs.size else 0.0

    @property
    def amplitude_bound(self) -> float:
        return float(np.sum(np.abs(self.amps)))


def constant(value=1.0) -> ExpSum:
    return ExpSum(np.array([value]), np.array([0.0]))


def cosine(amplitude: float, frequency: float) -> ExpSum:
    if frequency == 0.0:
        return constant(amplitude)
    half = 0.5 * amplitude
    return ExpSum(np.array([half, half]), np.array([frequency, -frequency]))


@dataclass(frozen=True)
class OperatorSum:
    """Time-dependent operator ``sum_k coeffs[k](t) * matrices[k]``.

    ``freq_hint`` lets a builder declare a characteristic drive frequency that
    must enter the integrator's step cap even when it does not appear verbatim
    among the coefficient frequencies.
    """

    matrices: tuple
    coeffs: tuple
    freq_hint: float = 0.0

    def __post_init__(self):
        if len(self.matrices) != len(self.coeffs):
            raise ContractViolation("one coefficient per matrix required")
        mats = tuple(np.ascontiguousarray(m, dtype=np.complex128) for m in self.matrices)
        d = mats[0].shape[0] if mats else 0
        for m in mats:
            if m.ndim != 2 or m.shape != (d, d):
                raise ContractViolation("all matrices must be square with equal shape")
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "coeffs", tuple(self.coeffs))

    @property
    def dim(self) -> int:
        return self.matrices[0].shape[0] if self.matrices else 0

    def __call__(self, t: float) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for m, f in zip(self.matrices, self.coeffs):
            out += complex(f(t)) * m
        return out

    @property
    def max_frequency(self) -> float:
        freqs = [f.max_frequency for f in self.coeffs] + [abs(self.freq_hint)]
        return max(freqs) if freqs else 0.0

    def hermiticity_defect(self, t: float = 0.0) -> float:
        h = self(t)
        return float(np.max(np.abs(h - h.conj().T))) if self.dim else 0.0

    def shifted(self, t0: float) -> "OperatorSum":
        """Time-translated generator: shifted(t0)(t) == self(t0 + t)."""
        return OperatorSum(
            self.matrices,
            tuple(f.shifted(t0) for f in self.coeffs),
            freq_hint=self.freq_hint,
        )

    def packed(self, drop_tol: float = 0.0):
        """Concatenated-CSR arrays consumed by the compiled kernels."""
        return _pack_csr(self.matrices, self.coeffs, drop_tol)


def hermitian_pair(matrix: np.ndarray, coeff: ExpSum):
    """Terms for ``coeff(t)*M + conj(coeff)(t)*M^dag``."""
    return [(matrix, coeff), (np.conj(matrix.T), coeff.conjugate())]


def constant_term(matrix: np.ndarray):
    """Term list for a time-independent Hermitian matrix."""
    return [(matrix, constant(1.0))]


def operator_sum(terms, freq_hint: float = 0.0) -> OperatorSum:
    mats, coeffs = zip(*terms) if terms else ((), ())
    return OperatorSum(tuple(mats), tuple(coeffs), freq_hint=freq_hint)


@dataclass(frozen=True)
class PackedOperator:
    """CSR-concatenated form of an OperatorSum (kernel input)."""

    data: np.ndarray      # complex nonzeros, all terms concatenated
    indices: np.ndarray   # column indices, aligned with data
    indptr: np.ndarray    # (n_terms, dim+1) absolute offsets into data
    amps: np.ndarray      # complex coefficient amplitudes, concatenated
    freqs: np.ndarray     # coefficient frequencies, concatenated
    cptr: np.ndarray      # (n_terms+1,) offsets into amps/freqs
    dim: int = field(default=0)


def _pack_csr(matrices, coeffs, drop_tol: float) -> PackedOperator:
    dim = matrices[0].shape[0] if matrices else 0
    data, indices = [], []
    indptr = np.zeros((len(matrices), dim + 1), dtype=np.int64)
    pos = 0
    for k, m in enumerate(matrices):
        thresh = drop_tol * np.max(np.abs(m)) if drop_tol else 0.0
        for i in range(dim):
            indptr[k, i] = pos
            row = m[i]
            nz = np.nonzero(np.abs(row) > thresh)[0]
            for j in nz:
                data.append(row[j])
                indices.append(j)
                pos += 1
        indptr[k, dim] = pos
    amps = np.concatenate([c.amps for c in coeffs]) if coeffs else np.zeros(0, np.complex128)
    freqs = np.concatenate([c.freqs for c in coeffs]) if coeffs else np.zeros(0, np.float64)
    cptr = np.zeros(len(coeffs) + 1, dtype=np.int64)
    for k, c in enumerate(coeffs):
        cptr[k + 1] = cptr[k] + c.amps.size
    return PackedOperator(
        data=np.asarray(data, dtype=np.complex128),
        indices=np.asarray(indices, dtype=np.int64),
        indptr=indptr,
        amps=np.asarray(amps, dtype=np.complex128),
        freqs=np.asarray(freqs, dtype=np.float64),
        cptr=cptr,
        dim=dim,
    )
