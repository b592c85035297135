"""Truncated qubit-resonator model with sinusoidal qubit-frequency modulation.

Basis ordering is qubit-major: index = q*(n_fock+1) + n, with q=0 the qubit
ground state and q=1 the excited state, n the photon number.  All matrices
returned here use this ordering.
"""

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError, RotatingWaveWarning
from .numerics import ExpSum, OperatorSum, bessel_j
from .numerics.timedep import constant, cosine, operator_sum

DEFAULT_SIDEBAND_CUTOFF = 40
DEFAULT_DROP_TOL = 1e-12
RWA_WARN_FACTOR = 10.0


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters; frequencies in units of the qubit frequency.

    ``mod_amplitude`` is the dimensionless modulation index (peak phase
    excursion of the qubit), ``mod_freq`` the modulation frequency.
    """

    qubit_freq: float = 1.0
    cavity_freq: float = 1.0
    coupling: float = 0.05
    mod_amplitude: float = 0.0
    mod_freq: float = 0.0
    n_fock: int = 15

    def __post_init__(self):
        if not (self.qubit_freq > 0.0 and math.isfinite(self.qubit_freq)):
            raise DomainError("qubit_freq must be positive and finite")
        if not (self.cavity_freq > 0.0 and math.isfinite(self.cavity_freq)):
            raise DomainError("cavity_freq must be positive and finite")
        if not (self.coupling >= 0.0 and math.isfinite(self.coupling)):
            raise DomainError("coupling must be nonnegative and finite")
        if not (self.mod_amplitude >= 0.0 and math.isfinite(self.mod_amplitude)):
            raise DomainError("mod_amplitude must be nonnegative and finite")
        if not (self.mod_freq >= 0.0 and math.isfinite(self.mod_freq)):
            raise DomainError("mod_freq must be nonnegative and finite")
        if not (isinstance(self.n_fock, int) and self.n_fock >= 1):
            raise DomainError("n_fock must be an integer >= 1")

    @property
    def detuning(self) -> float:
        """Qubit-cavity detuning (frequency of the rotating coupling)."""
        return self.qubit_freq - self.cavity_freq

    @property
    def sum_freq(self) -> float:
        """Qubit + cavity frequency (carrier of the counter-rotating coupling)."""
        return self.qubit_freq + self.cavity_freq

    @property
    def dim(self) -> int:
        return 2 * (self.n_fock + 1)

    @cached_property
    def operators(self) -> "OperatorSet":
        return build_operators(self)


@dataclass(frozen=True)
class OperatorSet:
    """Dense operators on the truncated qubit (x) Fock space."""

    annihilate: np.ndarray
    create: np.ndarray
    number: np.ndarray
    quadrature: np.ndarray  # a + a†
    qubit_raise: np.ndarray  # |e><g|
    qubit_lower: np.ndarray  # |g><e|
    qubit_z: np.ndarray  # |e><e| - |g><g|
    qubit_x: np.ndarray
    parity: np.ndarray  # qubit_z * (-1)^number
    identity: np.ndarray


def basis_index(params: ModelParams, excited: bool, n_photons: int) -> int:
    """Index of the product state (qubit level, photon number)."""
    if not (0 <= n_photons <= params.n_fock):
        raise DomainError(
            f"photon number {n_photons} outside truncation 0..{params.n_fock}"
        )
    return (1 if excited else 0) * (params.n_fock + 1) + n_photons


def basis_state(params: ModelParams, excited: bool, n_photons: int) -> np.ndarray:
    psi = np.zeros(params.dim, dtype=np.complex128)
    psi[basis_index(params, excited, n_photons)] = 1.0
    return psi


def build_operators(params: ModelParams) -> OperatorSet:
    nf = params.n_fock
    eye_fock = np.eye(nf + 1, dtype=np.complex128)
    a_fock = np.diag(np.sqrt(np.arange(1.0, nf + 1)), k=1).astype(np.complex128)
    eye_q = np.eye(2, dtype=np.complex128)
    sp = np.array([[0, 0], [1, 0]], dtype=np.complex128)  # |e><g|, g index 0
    sz = np.array([[-1, 0], [0, 1]], dtype=np.complex128)

    a = np.kron(eye_q, a_fock)
    adag = a.conj().T
    qr = np.kron(sp, eye_fock)
    ql = qr.conj().T
    qz = np.kron(sz, eye_fock)
    number = adag @ a
    alt = np.diag((-1.0) ** np.arange(nf + 1)).astype(np.complex128)
    parity = np.kron(sz, alt)
    return OperatorSet(
        annihilate=a,
        create=adag,
        number=number,
        quadrature=a + adag,
        qubit_raise=qr,
        qubit_lower=ql,
        qubit_z=qz,
        qubit_x=qr + ql,
        parity=parity,
        identity=np.eye(params.dim, dtype=np.complex128),
    )


# ---------------------------------------------------------------- static parts


def h_jc(params: ModelParams) -> np.ndarray:
    """Bare terms plus the excitation-conserving (rotating) coupling."""
    ops = params.operators
    return (
        params.cavity_freq * ops.number
        + 0.5 * params.qubit_freq * ops.qubit_z
        + params.coupling * (ops.qubit_raise @ ops.annihilate
                             + ops.qubit_lower @ ops.create)
    )


def h_cr(params: ModelParams) -> np.ndarray:
    """Counter-rotating coupling (creates/destroys excitations in pairs)."""
    ops = params.operators
    return params.coupling * (
        ops.qubit_raise @ ops.create + ops.qubit_lower @ ops.annihilate
    )


def h_rabi(params: ModelParams) -> np.ndarray:
    return h_jc(params) + h_cr(params)


def h_lab_frame(params: ModelParams, t: float) -> np.ndarray:
    """Full generator including the qubit-frequency modulation term."""
    drive = 0.5 * params.mod_amplitude * params.mod_freq
    ops = params.operators
    return h_rabi(params) + drive * math.cos(params.mod_freq * t) * ops.qubit_z


def lab_frame_hamiltonian(params: ModelParams) -> OperatorSum:
    """Structured lab-frame generator for the propagators."""
    terms = [(h_rabi(params), constant(1.0))]
    drive = 0.5 * params.mod_amplitude * params.mod_freq
    if drive != 0.0:
        terms.append((params.operators.qubit_z, cosine(drive, params.mod_freq)))
    return operator_sum(terms, freq_hint=params.mod_freq)


def rotating_frame_transform(params: ModelParams, t: float) -> np.ndarray:
    """Diagonal unitary mapping lab-frame states into the modulated frame.

    psi_rot(t) = V(t) @ psi_lab(t), with V(0) = identity.
    """
    nf = params.n_fock
    phase_fock = params.cavity_freq * t * np.arange(nf + 1)
    half_qubit = 0.5 * (
        params.qubit_freq * t
        + params.mod_amplitude * math.sin(params.mod_freq * t)
    )
    diag = np.concatenate([
        np.exp(1j * (phase_fock - half_qubit)),  # qubit ground block
        np.exp(1j * (phase_fock + half_qubit)),  # qubit excited block
    ])
    return np.diag(diag)


# ------------------------------------------------------------------- sidebands


@dataclass(frozen=True)
class Sideband:
    """One harmonic of the phase-modulated coupling.

    channel "rotating": excitation-conserving, detuning = qubit - cavity
    + order * mod_freq.  channel "counter": pair-creating, detuning =
    qubit + cavity + order * mod_freq.
    """

    order: int
    channel: str
    coupling: float
    detuning: float


def _weights(params: ModelParams, n_max: int) -> np.ndarray:
    """Bessel weights J_order(mod_amplitude) for order in [-n_max, n_max]."""
    return np.array(
        [bessel_j(n, params.mod_amplitude) for n in range(-n_max, n_max + 1)]
    )


def sidebands(params: ModelParams, n_max: int = DEFAULT_SIDEBAND_CUTOFF):
    """All 2(2 n_max + 1) harmonic terms, sorted by |detuning| ascending."""
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    g = params.coupling
    w = _weights(params, n_max)
    out = []
    for i, n in enumerate(range(-n_max, n_max + 1)):
        out.append(Sideband(n, "rotating", g * w[i],
                            params.detuning + n * params.mod_freq))
        out.append(Sideband(n, "counter", g * w[i],
                            params.sum_freq + n * params.mod_freq))
    out.sort(key=lambda s: (abs(s.detuning), s.channel, s.order))
    return tuple(out)


def resonant_cr_order(params: ModelParams) -> int:
    """Harmonic order whose counter-rotating detuning is nearest zero.

    Nearest integer to -(qubit_freq + cavity_freq)/mod_freq, half-integer
    ties rounded away from zero.
    """
    if params.mod_freq <= 0.0:
        raise DomainError("resonant order undefined without modulation")
    x = -params.sum_freq / params.mod_freq
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def rotating_coupling(params: ModelParams) -> float:
    """Effective excitation-conserving coupling: g * J_0(mod_amplitude)."""
    return params.coupling * bessel_j(0, params.mod_amplitude)


def counter_coupling(params: ModelParams) -> float:
    """Effective resonant pair coupling: g * J_m0(mod_amplitude)."""
    return params.coupling * bessel_j(resonant_cr_order(params),
                                      params.mod_amplitude)


def resonant_cr_detuning(params: ModelParams) -> float:
    """Residual detuning of the nearest-resonant counter-rotating harmonic."""
    return params.sum_freq + resonant_cr_order(params) * params.mod_freq


def effective_frequencies(params: ModelParams) -> tuple[float, float]:
    """(cavity, qubit) frequencies of the static two-coupling effective model.

    Chosen so the rotating channel oscillates at the qubit-cavity detuning
    and the counter-rotating channel at the residual resonance detuning.
    Derived read-only quantities.
    """
    res = resonant_cr_detuning(params)
    det = params.detuning
    return (res - det) / 2.0, (res + det) / 2.0


# ----------------------------------------------------- rotating-frame generator


def _channel_expsum(params, n_max, drop_tol, base_detuning):
    g = params.coupling
    w = _weights(params, n_max)
    amps, freqs = [], []
    for i, n in enumerate(range(-n_max, n_max + 1)):
        if abs(w[i]) > drop_tol:
            amps.append(g * w[i])
            freqs.append(base_detuning + n * params.mod_freq)
    return ExpSum(np.array(amps, dtype=np.complex128),
                  np.array(freqs, dtype=np.float64))


def rotating_frame_hamiltonian(
    params: ModelParams,
    n_max: int = DEFAULT_SIDEBAND_CUTOFF,
    drop_tol: float = DEFAULT_DROP_TOL,
) -> OperatorSum:
    """Full harmonic-expanded generator in the modulated rotating frame.

    Without modulation the expansion degenerates to single lines at the
    qubit-cavity detuning and sum frequency (full weight, no harmonics).
    """
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    ops = params.operators
    rot = ops.qubit_raise @ ops.annihilate
    cnt = ops.qubit_raise @ ops.create
    g = params.coupling
    if params.mod_freq == 0.0:
        rot_coeff = ExpSum(np.array([g + 0j]), np.array([params.detuning]))
        cnt_coeff = ExpSum(np.array([g + 0j]), np.array([params.sum_freq]))
    else:
        rot_coeff = _channel_expsum(params, n_max, drop_tol, params.detuning)
        cnt_coeff = _channel_expsum(params, n_max, drop_tol, params.sum_freq)
    terms = [
        (rot, rot_coeff),
        (rot.conj().T, rot_coeff.conjugate()),
        (cnt, cnt_coeff),
        (cnt.conj().T, cnt_coeff.conjugate()),
    ]
    return operator_sum(terms, freq_hint=params.mod_freq)


def h_rotating_frame(params: ModelParams, t: float,
                     n_max: int = DEFAULT_SIDEBAND_CUTOFF) -> np.ndarray:
    """Dense snapshot of the harmonic-expanded rotating-frame generator."""
    return rotating_frame_hamiltonian(params, n_max=n_max)(t)


def h_rotating_frame_closed(params: ModelParams, t: float) -> np.ndarray:
    """Closed-form rotating-frame generator (no harmonic expansion)."""
    ops = params.operators
    g = params.coupling
    phase = params.qubit_freq * t + params.mod_amplitude * math.sin(
        params.mod_freq * t
    )
    up = g * np.exp(1j * phase) * ops.qubit_raise
    field = (ops.annihilate * np.exp(-1j * params.cavity_freq * t)
             + ops.create * np.exp(1j * params.cavity_freq * t))
    half = up @ field
    return half + half.conj().T


# ------------------------------------------------------------ effective models


def enhanced_hamiltonian(
    params: ModelParams, warn_factor: float = RWA_WARN_FACTOR
) -> OperatorSum:
    """Two-coupling effective model keeping the carrier rotating harmonic
    and the nearest-resonant counter-rotating harmonic only.

    Warns when the modulation frequency fails to dominate the coupling or
    the residual resonance detuning (harmonic separation marginal).
    """
    nu = params.mod_freq
    res = resonant_cr_detuning(params)
    if nu <= warn_factor * params.coupling or nu <= warn_factor * abs(res):
        warnings.warn(
            "retained harmonics are not well separated from the discarded "
            f"ones (mod_freq={nu:g}, coupling={params.coupling:g}, "
            f"residual detuning={res:g})",
            RotatingWaveWarning,
            stacklevel=2,
        )
    ops = params.operators
    rot = ops.qubit_raise @ ops.annihilate
    cnt = ops.qubit_raise @ ops.create
    g_rot = rotating_coupling(params)
    g_cnt = counter_coupling(params)
    rot_coeff = ExpSum(np.array([g_rot + 0j]), np.array([params.detuning]))
    cnt_coeff = ExpSum(np.array([g_cnt + 0j]), np.array([res]))
    terms = [
        (rot, rot_coeff),
        (rot.conj().T, rot_coeff.conjugate()),
        (cnt, cnt_coeff),
        (cnt.conj().T, cnt_coeff.conjugate()),
    ]
    return operator_sum(terms, freq_hint=params.mod_freq)


def h_eff_enhanced(params: ModelParams, t: float,
                   warn_factor: float = RWA_WARN_FACTOR) -> np.ndarray:
    return enhanced_hamiltonian(params, warn_factor=warn_factor)(t)


def suppressed_hamiltonian(params: ModelParams) -> OperatorSum:
    """Excitation-conserving effective model with rescaled coupling
    g * J_0(mod_amplitude); valid for modulation faster than the sum
    frequency (warns otherwise)."""
    if params.mod_freq <= params.sum_freq:
        warnings.warn(
            "pair-creating harmonics are not far off-resonant "
            f"(mod_freq={params.mod_freq:g} <= sum_freq={params.sum_freq:g})",
            RotatingWaveWarning,
            stacklevel=2,
        )
    ops = params.operators
    rot = ops.qubit_raise @ ops.annihilate
    g_rot = rotating_coupling(params)
    rot_coeff = ExpSum(np.array([g_rot + 0j]), np.array([params.detuning]))
    terms = [(rot, rot_coeff), (rot.conj().T, rot_coeff.conjugate())]
    return operator_sum(terms, freq_hint=params.mod_freq)


def h_eff_suppressed(params: ModelParams, t: float) -> np.ndarray:
    return suppressed_hamiltonian(params)(t)
