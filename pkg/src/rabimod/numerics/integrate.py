"""Adaptive propagation wrappers around the compiled RK4(5) kernels."""

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import AccuracyError, ContractViolation, StiffnessError
from . import _kernels
from .timedep import OperatorSum

DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-10
CAP_PERIOD_FRACTION = 20.0  # step cap = (2*pi/omega_fast) / 20
NORM_DRIFT_PER_STEP = 1e-8
TRACE_DRIFT_FLOOR = 1e-7  # actual bound scales with rtol
HERMITICITY_BOUND = 1e-9
POSITIVITY_FLOOR = 1e-7  # actual floor scales with rtol
MAX_STEPS_DEFAULT = 20_000_000


@dataclass
class IntegrationStats:
    n_accepted: int
    n_rejected: int
    max_step_used: float
    max_step_cap: float


@dataclass
class IntegrationResult:
    times: np.ndarray
    states: np.ndarray  # (n_times, dim) or (n_times, dim, dim)
    stats: IntegrationStats
    tracked_max: float = 0.0


@dataclass(frozen=True)
class Liouvillian:
    """Lindblad generator: Hermitian part plus dissipators.

    ``gain[k, j]`` is the incoherent rate from eigenstate k to eigenstate j
    when the density matrix is expressed in the same eigenbasis (the
    elementwise form of jump operators |j><k|); ``jumps`` holds general
    (rate, operator) collapse pairs for arbitrary bases.
    """

    hamiltonian: OperatorSum
    gain: np.ndarray | None = None
    jumps: tuple = ()
    damp: np.ndarray = field(init=False)

    def __post_init__(self):
        d = self.hamiltonian.dim
        if self.gain is not None:
            g = np.ascontiguousarray(self.gain, dtype=np.float64)
            if g.shape != (d, d):
                raise ContractViolation("gain matrix shape must match the Hamiltonian")
            if np.any(g < 0.0):
                raise ContractViolation("negative dissipation rate")
            object.__setattr__(self, "gain", g)
            object.__setattr__(self, "damp", np.sum(g, axis=1))
        else:
            object.__setattr__(self, "damp", np.zeros(0))
        for rate, op in self.jumps:
            if rate < 0.0:
                raise ContractViolation("negative dissipation rate")
            if np.asarray(op).shape != (d, d):
                raise ContractViolation("jump operator shape must match the Hamiltonian")

    def apply(self, t: float, rho: np.ndarray) -> np.ndarray:
        """Reference (uncompiled) right-hand side; mirrors the kernel."""
        h = self.hamiltonian(t)
        out = -1j * (h @ rho - rho @ h)
        if self.gain is not None:
            pops = np.real(np.diag(rho))
            out[np.diag_indices_from(out)] += self.gain.T @ pops
            out -= 0.5 * (self.damp[:, None] + self.damp[None, :]) * rho
        for rate, op in self.jumps:
            op = np.asarray(op, dtype=np.complex128)
            anti = (op.conj().T @ op) @ rho
            out += rate * (op @ rho @ op.conj().T) - 0.5 * rate * (anti + anti.conj().T)
        return out


def _validate_grid(t_grid):
    t = np.ascontiguousarray(t_grid, dtype=np.float64)
    if t.ndim != 1 or t.size < 1:
        raise ContractViolation("t_grid must be a 1-d array")
    if t[0] != 0.0:
        raise ContractViolation("t_grid must start at 0")
    if t.size > 1 and np.any(np.diff(t) <= 0.0):
        raise ContractViolation("t_grid must be strictly increasing")
    return t


def step_cap(ham: OperatorSum, span: float) -> float:
    """Upper step bound: a 20th of the fastest retained oscillation period."""
    w = ham.max_frequency
    return (2.0 * math.pi / w) / CAP_PERIOD_FRACTION if w > 0.0 else span


def integrate_schrodinger(
    hamiltonian: OperatorSum,
    psi0: np.ndarray,
    t_grid,
    *,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    max_step: float | None = None,
    track_population_of: int = -1,
    max_steps: int = MAX_STEPS_DEFAULT,
) -> IntegrationResult:
    """Propagate ``d psi/dt = -i H(t) psi`` and sample on ``t_grid``.

    The adaptive step is capped by a 20th of the fastest oscillation period
    present among the retained generator frequencies.  Post-conditions
    (checked): per-sample norm drift <= 1e-8 * accepted steps.
    """
    t = _validate_grid(t_grid)
    psi = np.ascontiguousarray(psi0, dtype=np.complex128)
    if psi.ndim != 1 or psi.size != hamiltonian.dim:
        raise ContractViolation("psi0 dimension does not match the Hamiltonian")
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > 1e-9:
        raise ContractViolation(f"psi0 must be normalized, |psi| = {nrm:.12g}")

    defect = hamiltonian.hermiticity_defect(0.5 * t[-1] if t[-1] > 0 else 0.0)
    scale = max((np.max(np.abs(m)) * c.amplitude_bound
                 for m, c in zip(hamiltonian.matrices, hamiltonian.coeffs)), default=0.0)
    if scale > 0.0 and defect > 1e-10 * scale:
        raise ContractViolation("time-dependent generator is not Hermitian")

    span = t[-1] - t[0] if t.size > 1 else 0.0
    cap = max_step if max_step is not None else step_cap(hamiltonian, span)
    if cap <= 0.0:
        raise ContractViolation("max_step must be positive")
    if cap < 1e-12 and span > 0.0:
        raise StiffnessError(
            f"required step {cap:.3e} below the 1e-12 floor "
            "(fastest retained frequency is too high for this horizon)"
        )

    packed = hamiltonian.packed()
    out, track_max, n_acc, n_rej, h_used, status = _kernels.propagate_state(
        packed.data,
        packed.indices,
        packed.indptr,
        packed.amps,
        packed.freqs,
        packed.cptr,
        psi,
        t,
        float(rtol),
        float(atol),
        float(cap),
        int(track_population_of),
        int(max_steps),
    )
    if status == _kernels.STATUS_UNDERFLOW:
        raise StiffnessError("adaptive step fell below the 1e-12 floor")
    if status == _kernels.STATUS_BUDGET:
        raise AccuracyError(f"step budget {max_steps} exhausted")

    drift = np.max(np.abs(np.linalg.norm(out, axis=1) - 1.0)) if t.size else 0.0
    bound = NORM_DRIFT_PER_STEP * max(n_acc, 1)
    if drift > bound:
        raise AccuracyError(
            f"norm drift {drift:.3e} exceeds {bound:.3e} ({n_acc} steps)"
        )

    return IntegrationResult(
        times=t,
        states=out,
        stats=IntegrationStats(n_acc, n_rej, h_used, cap),
        tracked_max=track_max,
    )


_EMPTY_GAIN = np.zeros((0, 0), dtype=np.float64)
_EMPTY_DAMP = np.zeros(0, dtype=np.float64)
_EMPTY_JUMPS = np.zeros((0, 1, 1), dtype=np.complex128)
_EMPTY_RATES = np.zeros(0, dtype=np.float64)


def integrate_master(
    liouvillian: Liouvillian,
    rho0: np.ndarray,
    t_grid,
    *,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    max_step: float | None = None,
    max_steps: int = MAX_STEPS_DEFAULT,
    check_positivity: bool = True,
    _skip_input_validation: bool = False,
) -> IntegrationResult:
    """Propagate a Lindblad master equation and sample on ``t_grid``.

    Post-conditions (checked): trace drift and the negative-eigenvalue
    floor within ``max(1e-7, 20*rtol)``, Hermiticity defect <= 1e-9.
    """
    t = _validate_grid(t_grid)
    d = liouvillian.hamiltonian.dim
    rho = np.ascontiguousarray(rho0, dtype=np.complex128)
    if rho.shape != (d, d):
        raise ContractViolation("rho0 shape does not match the Hamiltonian")
    if not _skip_input_validation:
        if np.max(np.abs(rho - rho.conj().T)) > 1e-10 * max(np.max(np.abs(rho)), 1e-300):
            raise ContractViolation("rho0 must be Hermitian")
        if abs(np.trace(rho).real - 1.0) > 1e-9:
            raise ContractViolation("rho0 must have unit trace")
        if np.min(np.linalg.eigvalsh(rho)) < -1e-10:
            raise ContractViolation("rho0 must be positive semidefinite")

    span = t[-1] - t[0] if t.size > 1 else 0.0
    cap = max_step if max_step is not None else step_cap(liouvillian.hamiltonian, span)

    if liouvillian.gain is not None:
        gain = liouvillian.gain
        damp = liouvillian.damp
    else:
        gain = _EMPTY_GAIN
        damp = _EMPTY_DAMP
    if liouvillian.jumps:
        jumps = np.ascontiguousarray(
            np.stack([np.asarray(op, dtype=np.complex128) for _, op in liouvillian.jumps])
        )
        jdag = np.ascontiguousarray(np.conj(np.swapaxes(jumps, 1, 2)))
        jcdc = np.ascontiguousarray(np.einsum("mij,mjk->mik", jdag, jumps))
        jrates = np.array([r for r, _ in liouvillian.jumps], dtype=np.float64)
    else:
        jumps, jdag, jcdc, jrates = _EMPTY_JUMPS, _EMPTY_JUMPS, _EMPTY_JUMPS, _EMPTY_RATES

    packed = liouvillian.hamiltonian.packed()
    out, n_acc, n_rej, h_used, status = _kernels.propagate_master(
        packed.data,
        packed.indices,
        packed.indptr,
        packed.amps,
        packed.freqs,
        packed.cptr,
        gain,
        damp,
        jumps,
        jdag,
        jcdc,
        jrates,
        rho,
        t,
        float(rtol),
        float(atol),
        float(cap),
        int(max_steps),
    )
    if status == _kernels.STATUS_UNDERFLOW:
        raise StiffnessError("adaptive step fell below the 1e-12 floor")
    if status == _kernels.STATUS_BUDGET:
        raise AccuracyError(f"step budget {max_steps} exhausted")

    trace_bound = max(TRACE_DRIFT_FLOOR, 20.0 * rtol)
    traces = np.einsum("kii->k", out).real
    tr_drift = float(np.max(np.abs(traces - traces[0])))
    if tr_drift > trace_bound:
        raise AccuracyError(f"trace drift {tr_drift:.3e} exceeds {trace_bound:.0e}")
    herm = float(np.max(np.abs(out - np.conj(np.swapaxes(out, 1, 2)))))
    if herm > HERMITICITY_BOUND:
        raise AccuracyError(f"Hermiticity defect {herm:.3e} exceeds {HERMITICITY_BOUND:.0e}")
    if check_positivity:
        floor = -max(POSITIVITY_FLOOR, 20.0 * rtol)
        idx = np.unique(np.linspace(0, t.size - 1, min(t.size, 33)).astype(int))
        min_eig = min(float(np.min(np.linalg.eigvalsh(out[i]))) for i in idx)
        if min_eig < floor:
            raise AccuracyError(f"negative population {min_eig:.3e} below {floor:.0e}")

    return IntegrationResult(
        times=t,
        states=out,
        stats=IntegrationStats(n_acc, n_rej, h_used, cap),
    )
