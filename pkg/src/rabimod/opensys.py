"""Open-system dynamics: dressed-state relaxation and cavity output flux.

Loss is modeled in the eigenbasis of the static coupled Hamiltonian.  For
every ordered pair of retained, non-degenerate eigenstates the downward jump
``|low><high|`` acts at a rate proportional to the squared qubit / cavity
transition matrix element between the two states, so the dissipator drives
the system toward the true interacting ground state instead of the bare
one.  Eigenstates inside the top ``DISCARD_FRACTION`` of the spectrum sit
against the Fock-space truncation edge and are excluded from all loss
channels.  The modulated evolution itself is carried out exactly in the
same eigenbasis (the basis change is time-independent).

The emitted photon flux is ``cavity_rate * <X+ X->`` where ``X-`` collects
the downward cavity transition elements; its long-time behaviour is
summarised by the trailing-window statistics of :func:`steady_flux`.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .dynamics import InitialState, SweepResult, parse_state_label
from .errors import ContractViolation, DomainError, SteadyStateWarning
from .model import ModelParams, h_rabi
from .numerics import Liouvillian, eigh, integrate_master
from .numerics.timedep import OperatorSum, constant, cosine, operator_sum

DISCARD_FRACTION = 0.3  # top share of eigenstates dropped from loss channels
DEGENERACY_GAP_FACTOR = 1e-9  # pairs closer than this * qubit_freq carry no loss
ELEMENT_CLIP = 1e-13  # zero transition elements below this (parity noise)
FLUX_NEGATIVE_TOL = 1e-12
DEFAULT_FLUX_RTOL = 1e-6
DEFAULT_FLUX_ATOL = 1e-10
STEADY_HORIZON_PERIODS = 8.0  # horizon = this * pi / cavity_rate
STEADY_WINDOW_PERIODS = 10.0  # trailing window = this * (2 pi / mod_freq)
STEADY_SETTLE_TOL = 2.5e-3  # three-window spread allowing an early stop
STEADY_DRIFT_TOL = 0.05  # last-to-previous window drift that flags the result
STEADY_DRIFT_FLOOR = 1e-12  # absolute drift below this never flags
SAMPLES_PER_WINDOW = 240


@dataclass(frozen=True)
class DissipationRates:
    """Qubit and cavity loss rates (both >= 0, same units as frequencies)."""

    qubit: float = 0.02
    cavity: float = 0.02

    def __post_init__(self):
        if not (self.qubit >= 0.0 and math.isfinite(self.qubit)):
            raise DomainError(f"qubit rate must be finite and >= 0, got {self.qubit}")
        if not (self.cavity >= 0.0 and math.isfinite(self.cavity)):
            raise DomainError(f"cavity rate must be finite and >= 0, got {self.cavity}")


@dataclass(frozen=True)
class DressedBasis:
    """Eigenbasis of the static coupled Hamiltonian plus loss-channel data.

    ``states[:, k]`` is the k-th eigenvector (ascending energy, real, sign
    fixed so its largest-magnitude component is positive).  The transition
    element tables are real and symmetric; ``pair_mask[j, k]`` (j < k) marks
    the pairs that participate in loss channels: both states retained and
    split by more than the degeneracy gap.  ``emission`` is the downward
    cavity transition operator used for the output flux.
    """

    params: ModelParams
    energies: np.ndarray  # (dim,) ascending
    states: np.ndarray  # (dim, dim) orthonormal columns
    parity: np.ndarray  # (dim,) +1 / -1 per eigenstate
    n_keep: int
    qubit_elements: np.ndarray  # (dim, dim) qubit-flip elements
    cavity_elements: np.ndarray  # (dim, dim) field-quadrature elements
    pair_mask: np.ndarray  # (dim, dim) bool, upper triangle
    emission: np.ndarray  # (dim, dim) sum of masked downward cavity elements

    @cached_property
    def flux_weight(self) -> np.ndarray:
        """Positive-semidefinite weight ``emission^dag emission``."""
        return self.emission.conj().T @ self.emission

    @property
    def dim(self) -> int:
        return self.energies.size


def dressed_basis(params: ModelParams, n_keep: int | None = None) -> DressedBasis:
    """Diagonalize the static Hamiltonian and assemble loss-channel tables.

    ``n_keep`` defaults to the dimension minus the top ``DISCARD_FRACTION``
    share (rounded up); it must satisfy ``2 <= n_keep <= dim``.
    """
    dim = params.dim
    if n_keep is None:
        n_keep = dim - math.ceil(DISCARD_FRACTION * dim)
    if not 2 <= n_keep <= dim:
        raise DomainError(f"n_keep must be in [2, {dim}], got {n_keep}")

    ops = params.operators
    dec = eigh(h_rabi(params))
    energies = dec.values
    vecs = dec.vectors
    # Fix each eigenvector's sign: largest-magnitude component positive.
    anchor = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[anchor, np.arange(dim)])
    vecs = vecs * signs[np.newaxis, :]

    parity_diag = np.real(np.diag(ops.parity))
    parity = np.einsum("i,ij->j", parity_diag, vecs**2)
    parity = np.where(parity >= 0.0, 1.0, -1.0)

    qubit_elements = vecs.T @ np.real(ops.qubit_x) @ vecs
    cavity_elements = vecs.T @ np.real(ops.quadrature) @ vecs
    qubit_elements[np.abs(qubit_elements) < ELEMENT_CLIP] = 0.0
    cavity_elements[np.abs(cavity_elements) < ELEMENT_CLIP] = 0.0

    gap_floor = DEGENERACY_GAP_FACTOR * params.qubit_freq
    upper = np.triu(np.ones((dim, dim), dtype=bool), k=1)
    retained = np.zeros(dim, dtype=bool)
    retained[:n_keep] = True
    split = (energies[np.newaxis, :] - energies[:, np.newaxis]) >= gap_floor
    pair_mask = upper & split & retained[:, np.newaxis] & retained[np.newaxis, :]

    emission = np.where(pair_mask, cavity_elements, 0.0)

    return DressedBasis(
        params=params,
        energies=energies,
        states=vecs,
        parity=parity,
        n_keep=n_keep,
        qubit_elements=qubit_elements,
        cavity_elements=cavity_elements,
        pair_mask=pair_mask,
        emission=emission,
    )


def lindblad_generator(
    params: ModelParams, basis: DressedBasis, rates: DissipationRates
) -> Liouvillian:
    """Master-equation generator in the dressed basis.

    The Hamiltonian part is the diagonal of eigenvalues plus the modulation
    drive transformed into the eigenbasis; the dissipator collects one
    downward jump per masked eigenstate pair with rate
    ``qubit_rate * qubit_element^2 + cavity_rate * cavity_element^2``.
    """
    dim = basis.dim
    rate_table = (
        rates.qubit * basis.qubit_elements**2
        + rates.cavity * basis.cavity_elements**2
    )
    # gain[k, j]: population flow from eigenstate k into eigenstate j.
    gain = np.where(basis.pair_mask, rate_table, 0.0).T.copy()

    terms = [(np.diag(basis.energies.astype(np.complex128)), constant(1.0))]
    drive_amp = 0.5 * params.mod_amplitude * params.mod_freq
    if drive_amp != 0.0:
        sz_dressed = basis.states.T @ np.real(params.operators.qubit_z) @ basis.states
        sz_dressed[np.abs(sz_dressed) < ELEMENT_CLIP] = 0.0
        terms.append((sz_dressed.astype(np.complex128), cosine(drive_amp, params.mod_freq)))
    ham = operator_sum(terms, freq_hint=params.mod_freq)
    return Liouvillian(hamiltonian=ham, gain=gain)


def lindblad_rhs(
    params: ModelParams,
    rho: np.ndarray,
    t: float,
    rates: DissipationRates,
    *,
    basis: DressedBasis | None = None,
) -> np.ndarray:
    """Reference right-hand side of the master equation in the bare basis.

    Transforms ``rho`` to the dressed basis, applies the generator, and
    transforms back.  Rebuilds the generator on every call unless a
    pre-computed ``basis`` is supplied; intended for validation, not for
    time stepping (use :func:`evolve`).
    """
    if basis is None:
        basis = dressed_basis(params)
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (basis.dim, basis.dim):
        raise ContractViolation(f"rho must have shape {(basis.dim, basis.dim)}")
    liou = lindblad_generator(params, basis, rates)
    u = basis.states
    rho_d = u.T @ rho @ u
    out_d = liou.apply(float(t), rho_d)
    return u @ out_d @ u.T


@dataclass(frozen=True)
class MasterResult:
    """Density matrices sampled on a grid, stored in the dressed basis."""

    times: np.ndarray
    states: np.ndarray  # (n, dim, dim) dressed-basis density matrices
    basis: DressedBasis
    rates: DissipationRates
    notices: tuple = ()

    def bare_state(self, index: int) -> np.ndarray:
        """Density matrix at sample ``index`` rotated back to the bare basis."""
        u = self.basis.states
        return u @ self.states[index] @ u.T

    def bare_population(self, label: str) -> np.ndarray:
        """Population trace of a bare basis state given as 'g0', 'e1', ..."""
        idx = parse_state_label(self.basis.params, label)
        row = self.basis.states[idx, :]
        return np.einsum("j,tjk,k->t", row, self.states, row).real

    def dressed_populations(self) -> np.ndarray:
        """(n, dim) array of eigenstate populations."""
        return np.einsum("tjj->tj", self.states).real

    def purity(self) -> np.ndarray:
        return np.einsum("tjk,tkj->t", self.states, self.states).real


@dataclass(frozen=True)
class FluxSeries:
    """Emitted photon flux over time with optional trailing-window summary."""

    times: np.ndarray
    values: np.ndarray
    steady_value: float | None = None
    steady_std: float | None = None
    notices: tuple = ()

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != np.asarray(self.times).shape:
            raise ContractViolation("flux values length mismatch")
        if v.size and float(np.min(v)) < -FLUX_NEGATIVE_TOL:
            raise ContractViolation(
                f"negative photon flux {float(np.min(v)):.3e} below -{FLUX_NEGATIVE_TOL:.0e}"
            )
        object.__setattr__(self, "values", np.maximum(v, 0.0))


def _flux_values(states: np.ndarray, basis: DressedBasis, rates: DissipationRates):
    return rates.cavity * np.einsum("tjk,kj->t", states, basis.flux_weight).real


def evolve(
    params: ModelParams,
    rates: DissipationRates,
    t_grid,
    *,
    init: InitialState = InitialState.ground(),
    n_keep: int | None = None,
    rtol: float = DEFAULT_FLUX_RTOL,
    atol: float = DEFAULT_FLUX_ATOL,
    max_steps: int | None = None,
) -> MasterResult:
    """Integrate the master equation from a pure bare-basis initial state."""
    basis = dressed_basis(params, n_keep)
    liou = lindblad_generator(params, basis, rates)
    psi = init.build(params)
    v = basis.states.T @ psi
    rho0 = np.outer(v, v.conj())
    kwargs = {"rtol": rtol, "atol": atol}
    if max_steps is not None:
        kwargs["max_steps"] = max_steps
    res = integrate_master(liou, rho0, t_grid, **kwargs)
    return MasterResult(times=res.times, states=res.states, basis=basis, rates=rates)


def photon_flux(result: MasterResult) -> FluxSeries:
    """Photon flux ``cavity_rate * <X+ X->`` along an evolved trajectory."""
    values = _flux_values(result.states, result.basis, result.rates)
    return FluxSeries(times=result.times, values=values, notices=result.notices)


def steady_flux(
    params: ModelParams,
    rates: DissipationRates,
    *,
    init: InitialState = InitialState.ground(),
    n_keep: int | None = None,
    horizon: float | None = None,
    window: float | None = None,
    samples_per_window: int = SAMPLES_PER_WINDOW,
    early_stop: bool = True,
    rtol: float = DEFAULT_FLUX_RTOL,
    atol: float = DEFAULT_FLUX_ATOL,
) -> FluxSeries:
    """March the master equation window by window and report the trailing
    window's flux statistics.

    The horizon defaults to ``8 pi / cavity_rate`` and the window to ten
    modulation periods (ten qubit periods when the modulation is off).  Each
    window restarts the integrator at a time-shifted generator, which is an
    exact translation, so the march is equivalent to one long integration.
    With ``early_stop`` the march ends once three consecutive window means
    agree to 0.25% and at least half the horizon is covered.  If the last
    two window means still differ by more than 5% the result carries a
    notice and a :class:`SteadyStateWarning`.
    """
    if rates.cavity <= 0.0:
        raise DomainError("steady flux needs a positive cavity rate")
    if horizon is None:
        horizon = STEADY_HORIZON_PERIODS * math.pi / rates.cavity
    base_freq = params.mod_freq if params.mod_freq > 0.0 else params.qubit_freq
    if window is None:
        window = STEADY_WINDOW_PERIODS * 2.0 * math.pi / base_freq
    if not (horizon > 0.0 and window > 0.0):
        raise DomainError("horizon and window must be positive")
    if horizon < 5.0 * math.pi / rates.cavity:
        raise DomainError(
            f"horizon {horizon:g} too short: need at least 5 pi / cavity_rate "
            f"= {5.0 * math.pi / rates.cavity:g} to outlive the transient"
        )
    if samples_per_window < 8:
        raise DomainError("samples_per_window must be at least 8")
    window = min(window, horizon)
    if params.mod_freq > 0.0 and window < 5.0 * 2.0 * math.pi / params.mod_freq:
        raise DomainError(
            f"window {window:g} spans fewer than 5 modulation periods"
        )
    n_windows = math.ceil(horizon / window)

    basis = dressed_basis(params, n_keep)
    liou = lindblad_generator(params, basis, rates)
    psi = init.build(params)
    v = basis.states.T @ psi
    rho = np.outer(v, v.conj())

    grid = np.linspace(0.0, window, samples_per_window + 1)
    notices: list[str] = []
    means: list[float] = []
    t0 = 0.0
    last_times = grid.copy()
    last_values = _flux_values(rho[np.newaxis, :, :], basis, rates)[:1]
    last_std = 0.0
    for w in range(n_windows):
        shifted = dataclasses.replace(liou, hamiltonian=liou.hamiltonian.shifted(t0))
        res = integrate_master(
            shifted,
            rho,
            grid,
            rtol=rtol,
            atol=atol,
            _skip_input_validation=w > 0,
        )
        values = _flux_values(res.states, basis, rates)
        means.append(float(np.mean(values[1:])))
        last_std = float(np.std(values[1:]))
        last_times = t0 + grid
        last_values = values
        rho = res.states[-1]
        t0 += window
        settled = (
            early_stop
            and len(means) >= 3
            and t0 >= 0.5 * horizon
            and max(means[-3:]) - min(means[-3:])
            <= STEADY_SETTLE_TOL * max(abs(np.mean(means[-3:])), STEADY_DRIFT_FLOOR)
        )
        if settled:
            break

    if len(means) >= 2:
        drift = abs(means[-1] - means[-2])
        if drift > STEADY_DRIFT_FLOOR and drift > STEADY_DRIFT_TOL * abs(means[-1]):
            msg = (
                f"trailing flux still drifting: window means "
                f"{means[-2]:.6e} -> {means[-1]:.6e} at t = {t0:.1f}"
            )
            warnings.warn(msg, SteadyStateWarning, stacklevel=2)
            notices.append(msg)

    return FluxSeries(
        times=last_times,
        values=last_values,
        steady_value=means[-1],
        steady_std=last_std,
        notices=tuple(notices),
    )


def _steady_point(args) -> tuple[float, float, float, tuple]:
    params, rates, kwargs = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SteadyStateWarning)
        series = steady_flux(params, rates, **kwargs)
    drift = 1.0 if series.notices else 0.0
    return series.steady_value, series.steady_std, drift, series.notices


def flux_sweep(
    params: ModelParams,
    rates: DissipationRates,
    nu_grid,
    *,
    init: InitialState = InitialState.ground(),
    n_keep: int | None = None,
    horizon: float | None = None,
    early_stop: bool = True,
    rtol: float = DEFAULT_FLUX_RTOL,
    atol: float = DEFAULT_FLUX_ATOL,
    map_fn=map,
) -> SweepResult:
    """Steady flux versus modulation frequency at fixed modulation amplitude.

    Negative grid points are skipped with a notice; zero is allowed (the
    window then falls back to qubit periods).  ``map_fn`` may be an
    order-preserving parallel map.
    """
    nu_grid = np.asarray(nu_grid, dtype=np.float64)
    kept: list[float] = []
    notices: list[str] = []
    for nu in nu_grid:
        if nu < 0.0:
            notices.append(f"skipped mod_freq = {nu:g}: negative")
        else:
            kept.append(float(nu))
    kwargs = {
        "init": init,
        "n_keep": n_keep,
        "horizon": horizon,
        "early_stop": early_stop,
        "rtol": rtol,
        "atol": atol,
    }
    jobs = [
        (dataclasses.replace(params, mod_freq=nu), rates, kwargs) for nu in kept
    ]
    results = list(map_fn(_steady_point, jobs))
    flux = np.array([r[0] for r in results])
    flux_std = np.array([r[1] for r in results])
    drift = np.array([r[2] for r in results])
    for nu, r in zip(kept, results):
        notices.extend(f"mod_freq = {nu:g}: {n}" for n in r[3])
    return SweepResult(
        axis_name="mod_freq",
        axis=np.asarray(kept),
        values={"flux": flux, "flux_std": flux_std, "drift": drift},
        notices=tuple(notices),
    )
