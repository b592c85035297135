"""End-to-end acceptance gate.

Six numbered criteria cover the whole stack: closed-system pair
oscillations, effective-model fidelity, the resonance comb, strong-coupling
suppression, vacuum photon emission with losses, and cross-cutting numerical
properties.  Every test evaluates its clauses at the stated tolerances,
prints a single ``CRITERION n: PASS|FAIL`` scoreboard line (visible in the
report with ``-rA`` / ``-s``), and then asserts all clauses.

Two clauses fail and are asserted at their stated bounds anyway; the
scoreboard line carries the measurement evidence:

* criterion 2, slow-modulation clause: the fidelity envelope decays, but
  its first dip below 0.80 happens one dip after the stated time window
  ends (window minimum 0.8169, cross-checked against an independent
  lab-frame integration to 6e-12).
* criterion 3, line-width clause: the reference width equals the ideal
  two-level half-width at half maximum, so an honestly measured full width
  is 2x the reference before micromotion adds a few percent more; the
  inclusive factor-two allowance is missed by 3-9%.

The sweep-heavy criteria cache their data at module scope so re-running a
single criterion stays self-contained.
"""

import functools
import math
import warnings

import numpy as np

from rabimod.dynamics import (
    InitialState,
    ajc_analytic,
    fidelity_trace,
    peak_population_at,
    pmax_sweep,
    populations,
)
from rabimod.errors import RotatingWaveWarning
from rabimod.model import (
    ModelParams,
    basis_state,
    counter_coupling,
    h_rabi,
    lab_frame_hamiltonian,
    rotating_frame_hamiltonian,
    rotating_frame_transform,
)
from rabimod.numerics.bessel import bessel_j
from rabimod.numerics.integrate import integrate_schrodinger
from rabimod.numerics.linalg import eigh
from rabimod.opensys import (
    DissipationRates,
    dressed_basis,
    evolve,
    flux_sweep,
    photon_flux,
    steady_flux,
)

AMP_ZERO_J0 = 2.40483  # first zero of J_0: switches the co-rotating exchange off
AMP_J0_TENTH = 2.21868  # J_0 = 0.1: scales the co-rotating exchange down tenfold
AMP_MAX_J1 = 1.84118  # first maximum of J_1: strongest first side channel

COUPLING = 0.05
RATES = DissipationRates(qubit=0.02, cavity=0.02)
VACUUM_FLUX_BOUND = 1e-4  # criterion-5a ceiling, also the peak-detection floor


def _gate(num: int, clauses) -> None:
    """Print one scoreboard line for the criterion, then assert every clause."""
    ok = all(flag for flag, _ in clauses)
    body = "; ".join(("" if flag else "[FAIL] ") + text for flag, text in clauses)
    line = f"CRITERION {num}: {'PASS' if ok else 'FAIL'} - {body}"
    print(line)
    assert ok, line


# --------------------------------------------------------------- criterion 1
def test_criterion_1_pair_oscillation_matches_two_level_form():
    p = ModelParams(coupling=COUPLING, mod_amplitude=AMP_ZERO_J0, mod_freq=2.0,
                    n_fock=15)
    gc = abs(counter_coupling(p))
    t = np.linspace(0.0, 2.5 * math.pi / gc, 1201)
    trace = populations(p, "exact", InitialState.ground(), ("g0", "e1"), t,
                        n_max=40)
    ana = ajc_analytic(p, t)
    peak = float(np.max(trace.channels["P_e1"]))
    dev = max(
        float(np.max(np.abs(trace.channels[c] - ana.channels[c])))
        for c in ("P_g0", "P_e1")
    )
    period = _dip_to_dip_period(t, trace.channels["P_e1"])
    nominal = math.pi / gc
    rel = abs(period - nominal) / nominal
    _gate(1, [
        (peak >= 0.97, f"pair-state peak {peak:.4f} >= 0.97"),
        (rel <= 0.02,
         f"period {period:.2f} vs nominal {nominal:.2f} ({100 * rel:.2f}% <= 2%)"),
        (dev <= 0.05, f"deviation from two-level closed form {dev:.4f} <= 0.05"),
    ])


def _dip_to_dip_period(t, y):
    """Time between the two deepest minima of a sin^2-like oscillation.

    Micromotion superimposes shallow local lows (down to ~1e-2) on the
    flanks, so the envelope dips are identified as the two deepest low
    clusters rather than the first two.
    """
    lows = [i for i in range(1, len(y) - 1)
            if y[i] <= y[i - 1] and y[i] <= y[i + 1] and y[i] < 0.1]
    groups = [[lows[0]]]
    for i in lows[1:]:
        if i - groups[-1][-1] <= 40:  # micromotion splits one dip into several lows
            groups[-1].append(i)
        else:
            groups.append([i])
    assert len(groups) >= 2, "fewer than two oscillation dips in the trace"
    centers = [min(g, key=lambda i: y[i]) for g in groups]
    deepest = sorted(sorted(centers, key=lambda i: y[i])[:2])
    return float(t[deepest[1]] - t[deepest[0]])


# --------------------------------------------------------------- criterion 2
def test_criterion_2_exchange_fidelity_under_fast_and_slow_modulation():
    init = InitialState.superposition_coherent(0.1)
    t_swap = 2.0 * math.pi / COUPLING
    p_fast = ModelParams(coupling=COUPLING, mod_amplitude=AMP_ZERO_J0,
                         mod_freq=1.0, n_fock=15)
    fast = fidelity_trace(p_fast, init, "enhanced", np.array([0.0, t_swap]),
                          n_max=40)
    f_end = float(fast.channels["fidelity"][-1])

    p_slow = ModelParams(coupling=COUPLING, mod_amplitude=AMP_ZERO_J0,
                         mod_freq=0.2, n_fock=15)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RotatingWaveWarning)
        slow = fidelity_trace(p_slow, init, "enhanced",
                              np.linspace(0.0, t_swap, 1201), n_max=40)
    f_min = float(np.min(slow.channels["fidelity"]))

    _gate(2, [
        (f_end >= 0.95,
         f"fast modulation (mod_freq 1.0): fidelity at the swap time "
         f"{f_end:.4f} >= 0.95"),
        (f_min <= 0.80,
         f"slow modulation (mod_freq 0.2): window minimum {f_min:.4f} <= 0.80"
         " -- the envelope's last dip inside the swap window is 0.817 at"
         " t = 0.87 t_swap and its first dip below 0.80 lands at 1.37 t_swap,"
         " one dip past the window (value cross-checked against an"
         " independent dense lab-frame integration, agreement 6e-12, and"
         " stable under cutoff and sampling changes; nearby slow modulation"
         " frequencies do dip below the bound inside the window, e.g. 0.767"
         " at mod_freq 0.17, so the envelope decay itself is real)"),
    ])


# --------------------------------------------------------------- criterion 3
@functools.lru_cache(maxsize=1)
def _comb_sweep():
    """Peak pair population over the sweep grid: coarse everywhere, fine
    clusters around the comb centers 2/k."""
    base = ModelParams(coupling=COUPLING, mod_amplitude=AMP_ZERO_J0,
                       mod_freq=1.0, n_fock=15)
    pieces = [np.arange(0.3, 2.5 + 1e-12, 0.01)]
    for k in range(1, 6):
        c = 2.0 / k
        pieces.append(np.arange(c - 0.05, c + 0.05 + 1e-12, 0.002))
    grid = np.unique(np.round(np.concatenate(pieces), 9))
    weakest = min(abs(bessel_j(k, AMP_ZERO_J0)) for k in range(1, 6))
    t_max = 1.1 * math.pi / (COUPLING * weakest)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RotatingWaveWarning)
        sweep = pmax_sweep(base, grid, t_max, n_max=40)
    return sweep.axis, sweep.values["pmax"]


def _pmax_at(nu: float) -> float:
    p = ModelParams(coupling=COUPLING, mod_amplitude=AMP_ZERO_J0,
                    mod_freq=float(nu), n_fock=15)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RotatingWaveWarning)
        return peak_population_at(p, t_max=1e5, n_max=40)


def _refined_crossing(grid, vals, half, rising) -> float:
    """Position where the scan crosses ``half``, sharpened by a local rescan."""
    order = range(len(vals) - 1) if rising else range(len(vals) - 2, -1, -1)

    def brackets(a, b):
        return (a < half <= b) if rising else (a >= half > b)

    for i in order:
        if brackets(vals[i], vals[i + 1]):
            xs = np.linspace(grid[i], grid[i + 1], 9)
            ys = np.array([_pmax_at(x) for x in xs])
            for j in range(len(ys) - 1):
                if brackets(ys[j], ys[j + 1]):
                    w = (half - ys[j]) / (ys[j + 1] - ys[j])
                    return float(xs[j] + w * (xs[j + 1] - xs[j]))
    raise AssertionError("no half-maximum crossing in the scan window")


@functools.lru_cache(maxsize=1)
def _comb_widths():
    """Full width at half maximum of the first two comb lines."""
    out = {}
    for k in (1, 2):
        gc = COUPLING * abs(bessel_j(k, AMP_ZERO_J0))
        reference = 2.0 * gc / k
        center = 2.0 / k
        span = 2.2 * reference
        coarse = np.linspace(center - span, center + span, 25)
        vals = np.array([_pmax_at(x) for x in coarse])
        half = float(np.max(vals)) / 2.0
        lo = _refined_crossing(coarse, vals, half, rising=True)
        hi = _refined_crossing(coarse, vals, half, rising=False)
        out[k] = (hi - lo, reference)
    return out


def test_criterion_3_resonance_comb_positions_heights_and_widths():
    nu, pmax = _comb_sweep()
    fine = 0.002
    clauses = []
    for k in range(1, 6):
        c = 2.0 / k
        win = (nu >= c - 0.03) & (nu <= c + 0.03)
        seg_nu, seg_p = nu[win], pmax[win]
        i = int(np.argmax(seg_p))
        pos, height = float(seg_nu[i]), float(seg_p[i])
        interior = 0 < i < seg_nu.size - 1
        dist = abs(pos - c)
        clauses.append((
            interior and dist <= fine + 1e-9,
            f"comb k={k}: maximum at {pos:.4f}, {dist / fine:.2f} fine steps "
            f"from 2/k = {c:.4f} (<= 1)",
        ))
        if k <= 3:
            clauses.append((height >= 0.9, f"comb k={k} height {height:.4f} >= 0.9"))
        else:
            clauses.append((height < 0.9, f"comb k={k} height {height:.4f} < 0.9"))
    for k, (meas, reference) in sorted(_comb_widths().items()):
        ratio = meas / reference
        ok = 0.5 <= ratio <= 2.0
        text = (f"width k={k}: {meas:.4f} = {ratio:.3f}x the reference "
                f"2*coupling*|weight|/k = {reference:.4f} (needs [0.5x, 2x])")
        if not ok:
            text += (" -- the reference equals the ideal two-level half-width"
                     " at half maximum, so the ideal full width is already"
                     " 2.000x it; tracking the population maximum also picks"
                     " up neighbouring-harmonic micromotion, which widens the"
                     f" flanks by the remaining {100 * (ratio - 2.0) / 2.0:.0f}%;"
                     " a half-width reading would pass at"
                     f" {ratio / 2.0:.3f}x")
        clauses.append((ok, text))
    _gate(3, clauses)


# --------------------------------------------------------------- criterion 4
def test_criterion_4_suppressed_exchange_at_strong_coupling():
    g = 0.5
    t_swap = 2.0 * math.pi / g
    init = InitialState.superposition_coherent(0.1)
    slow_rate = 0.1 * g  # exchange rate scaled by J_0 = 0.1

    def params(nu, amp=AMP_J0_TENTH):
        return ModelParams(coupling=g, mod_amplitude=amp, mod_freq=nu, n_fock=30)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RotatingWaveWarning)
        f30 = float(fidelity_trace(params(30.0), init, "suppressed",
                                   np.array([0.0, t_swap]),
                                   n_max=40).channels["fidelity"][-1])
        f5 = float(fidelity_trace(params(5.0), init, "suppressed",
                                  np.array([0.0, t_swap]),
                                  n_max=40).channels["fidelity"][-1])
        grid = np.linspace(0.0, t_swap, 601)
        keep_on = populations(params(30.0), "exact", InitialState.ground(),
                              ("g0",), grid, n_max=40)
        keep_off = populations(params(0.0, amp=0.0), "exact",
                               InitialState.ground(), ("g0",), grid, n_max=40)
        t_slow = np.linspace(0.0, 2.0 * math.pi / slow_rate, 1001)
        pair_on = populations(params(30.0), "exact", InitialState.excited(),
                              ("e0", "g1"), t_slow, n_max=40)
        pair_off = populations(params(0.0, amp=0.0), "exact",
                               InitialState.excited(), ("e0", "g1"), t_slow,
                               n_max=40)

    keep_min = float(np.min(keep_on.channels["P_g0"]))
    drop_min = float(np.min(keep_off.channels["P_g0"]))
    dev = max(
        float(np.max(np.abs(pair_on.channels["P_e0"] - np.cos(slow_rate * t_slow) ** 2))),
        float(np.max(np.abs(pair_on.channels["P_g1"] - np.sin(slow_rate * t_slow) ** 2))),
    )
    leak_min = float(np.min(pair_off.channels["P_e0"] + pair_off.channels["P_g1"]))

    _gate(4, [
        (f30 >= 0.95, f"fidelity at swap time, mod_freq 30: {f30:.4f} >= 0.95"),
        (f5 >= 0.90, f"fidelity at swap time, mod_freq 5: {f5:.4f} >= 0.90"),
        (keep_min >= 0.98,
         f"ground-state hold with modulation: min P_g0 {keep_min:.4f} >= 0.98"),
        (drop_min <= 0.80,
         f"ground-state loss without modulation: min P_g0 {drop_min:.4f} <= 0.80"),
        (dev <= 0.05,
         f"pair populations track cos^2/sin^2 at a tenth of the bare rate: "
         f"max deviation {dev:.4f} <= 0.05"),
        (leak_min < 0.95,
         f"without modulation the single-excitation pair leaks: min total "
         f"{leak_min:.4f} < 0.95"),
    ])


# --------------------------------------------------------------- criterion 5
@functools.lru_cache(maxsize=1)
def _flux_cluster_sweep():
    """Steady flux on fine clusters around the first four comb centers."""
    base = ModelParams(coupling=COUPLING, mod_amplitude=AMP_MAX_J1,
                       mod_freq=2.0, n_fock=10)
    pieces = []
    for k, half in ((1, 0.03), (2, 0.03), (3, 0.03), (4, 0.02)):
        c = 2.0 / k
        pieces.append(np.arange(c - half, c + half + 1e-12, 0.005))
    grid = np.unique(np.round(np.concatenate(pieces), 9))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return flux_sweep(base, RATES, grid)


def test_criterion_5_vacuum_photon_emission_under_modulation():
    # (a) modulation off: no steady emission from the ground state
    p_off = ModelParams(coupling=COUPLING, mod_amplitude=0.0, mod_freq=0.0,
                        n_fock=10)
    horizon = 8.0 * math.pi / RATES.cavity
    t = np.linspace(0.0, horizon, 1201)
    off_max = float(np.max(photon_flux(evolve(p_off, RATES, t)).values))

    # (b) resonant modulation at the strongest side channel emits steadily
    p_on = ModelParams(coupling=COUPLING, mod_amplitude=AMP_MAX_J1,
                       mod_freq=2.0, n_fock=10)
    on = steady_flux(p_on, RATES)

    # (c) the J_0-zero amplitude leaves a weaker first side channel
    p_alt = ModelParams(coupling=COUPLING, mod_amplitude=AMP_ZERO_J0,
                        mod_freq=2.0, n_fock=10)
    alt = steady_flux(p_alt, RATES)

    # (d) emission peaks sit on the closed-system comb
    sweep = _flux_cluster_sweep()
    nu_c, pmax = _comb_sweep()
    clauses = [
        (off_max <= VACUUM_FLUX_BOUND,
         f"no modulation: flux stays below {off_max:.2e} <= 1e-4"),
        (on.steady_value > 10.0 * VACUUM_FLUX_BOUND,
         f"resonant modulation: steady flux {on.steady_value:.3e} > 1e-3"),
        (on.steady_std <= 0.25 * on.steady_value,
         f"trailing-window spread {on.steady_std:.2e} <= 25% of the mean"),
        (alt.steady_value < on.steady_value,
         f"switching the co-rotating channel off lowers the flux: "
         f"{alt.steady_value:.3e} < {on.steady_value:.3e}"),
    ]
    step = 0.005
    for k, half in ((1, 0.03), (2, 0.03), (3, 0.03), (4, 0.02)):
        c = 2.0 / k
        fwin = (sweep.axis >= c - half) & (sweep.axis <= c + half)
        f_nu, f_val = sweep.axis[fwin], sweep.values["flux"][fwin]
        i = int(np.argmax(f_val))
        f_pos, f_peak = float(f_nu[i]), float(f_val[i])
        interior = 0 < i < f_nu.size - 1
        cwin = (nu_c >= c - 0.03) & (nu_c <= c + 0.03)
        c_pos = float(nu_c[cwin][int(np.argmax(pmax[cwin]))])
        dist = abs(f_pos - c_pos)
        clauses.append((
            interior and f_peak > VACUUM_FLUX_BOUND and dist <= step + 1e-9,
            f"flux peak k={k} at {f_pos:.4f} ({f_peak:.2e}) vs comb maximum "
            f"at {c_pos:.4f}: {dist / step:.2f} grid steps apart (<= 1)",
        ))
    _gate(5, clauses)


# --------------------------------------------------------------- criterion 6
def test_criterion_6_numerical_property_checks():
    clauses = []

    # (a) harmonic resummation of the modulation phase factor
    tgrid = np.linspace(-math.pi, math.pi, 181)
    orders = np.arange(-60, 61)
    worst = 0.0
    for amp in (AMP_MAX_J1, AMP_J0_TENTH, AMP_ZERO_J0, 3.05424):
        w = np.array([bessel_j(int(n), amp) for n in orders])
        resum = (w[None, :] * np.exp(1j * orders[None, :] * tgrid[:, None])).sum(axis=1)
        worst = max(worst, float(np.max(np.abs(resum - np.exp(1j * amp * np.sin(tgrid))))))
    clauses.append((worst <= 1e-10,
                    f"harmonic resummation residual {worst:.1e} <= 1e-10"))

    # (b) tabulated weights at the special amplitudes
    dev_b = max(
        abs(bessel_j(0, AMP_ZERO_J0)) - 0.0,
        abs(abs(bessel_j(1, AMP_MAX_J1)) - 0.581865),
        abs(abs(bessel_j(2, 3.05424)) - 0.486499),
        abs(bessel_j(0, AMP_J0_TENTH) - 0.1),
    )
    clauses.append((dev_b <= 1e-4,
                    f"special weight values deviate {dev_b:.1e} <= 1e-4"))

    # (c) eigensolver on the dense coupled Hamiltonian
    H = h_rabi(ModelParams(coupling=0.5, mod_amplitude=AMP_J0_TENTH,
                           mod_freq=30.0, n_fock=30))
    dec = eigh(H)
    evals, vecs = dec.values, dec.vectors
    resid = float(np.max(np.abs(H @ vecs - vecs * evals[None, :])))
    ortho = float(np.max(np.abs(vecs.conj().T @ vecs - np.eye(H.shape[0]))))
    clauses.append((resid <= 1e-10 and ortho <= 1e-10,
                    f"eigensolver residual {resid:.1e} / orthonormality "
                    f"{ortho:.1e} <= 1e-10"))

    # (d) parity selection in the loss-channel tables
    basis = dressed_basis(ModelParams(coupling=COUPLING,
                                      mod_amplitude=AMP_MAX_J1, mod_freq=2.0,
                                      n_fock=10))
    same = np.equal.outer(basis.parity, basis.parity)
    worst_same = max(float(np.max(np.abs(basis.qubit_elements[same]))),
                     float(np.max(np.abs(basis.cavity_elements[same]))))
    n_cross = int(np.count_nonzero(basis.cavity_elements[~same]))
    clauses.append((worst_same == 0.0 and n_cross > 0,
                    f"parity-forbidden transition elements all exactly zero "
                    f"({n_cross} allowed elements present)"))

    # (e) unitarity and trace/positivity within the integrator guarantees
    p1 = ModelParams(coupling=COUPLING, mod_amplitude=AMP_ZERO_J0,
                     mod_freq=2.0, n_fock=15)
    res = integrate_schrodinger(rotating_frame_hamiltonian(p1, n_max=40),
                                basis_state(p1, False, 0),
                                np.array([0.0, 500.0]), rtol=1e-8, atol=1e-10)
    drift = abs(float(np.linalg.norm(res.states[-1])) - 1.0)
    drift_bound = 1e-8 * res.stats.n_accepted
    p_on = ModelParams(coupling=COUPLING, mod_amplitude=AMP_MAX_J1,
                       mod_freq=2.0, n_fock=10)
    rho = evolve(p_on, RATES, np.linspace(0.0, 200.0, 101))
    traces = np.array([np.trace(s).real for s in rho.states])
    trace_dev = float(np.max(np.abs(traces - 1.0)))
    min_eig = min(float(np.linalg.eigvalsh(s)[0]) for s in rho.states[::10])
    master_bound = max(1e-7, 20.0 * 1e-6)
    clauses.append((drift <= drift_bound,
                    f"norm drift {drift:.1e} within the per-step budget "
                    f"{drift_bound:.1e}"))
    clauses.append((trace_dev <= master_bound and min_eig >= -master_bound,
                    f"trace drift {trace_dev:.1e} and eigenvalue floor "
                    f"{min_eig:.1e} within {master_bound:.0e}"))

    # (f) lab-frame and modulated-frame propagation agree
    p6 = ModelParams(coupling=COUPLING, mod_amplitude=AMP_ZERO_J0,
                     mod_freq=2.0, n_fock=8)
    T = math.pi / abs(counter_coupling(p6))
    psi0 = basis_state(p6, False, 0)
    lab = integrate_schrodinger(lab_frame_hamiltonian(p6), psi0,
                                np.array([0.0, T]), rtol=1e-9, atol=1e-12)
    rot = integrate_schrodinger(rotating_frame_hamiltonian(p6, n_max=40), psi0,
                                np.array([0.0, T]), rtol=1e-9, atol=1e-12)
    V = rotating_frame_transform(p6, T)
    fid = float(abs(np.vdot(rot.states[-1], V @ lab.states[-1])) ** 2)
    clauses.append((fid >= 1.0 - 1e-6,
                    f"frame-transport fidelity deficit {1.0 - fid:.1e} <= 1e-6"))

    # (g) the loss-free master equation reproduces the closed system
    zero = DissipationRates(qubit=0.0, cavity=0.0)
    t6 = np.linspace(0.0, 2.0 * math.pi / COUPLING, 25)
    open_res = evolve(p6, zero, t6, rtol=1e-9, atol=1e-12)
    closed = populations(p6, "exact", InitialState.ground(), ("g0", "e1"), t6,
                         n_max=30, rtol=1e-9)
    dev_g = float(np.max(np.abs(open_res.bare_population("g0")
                                - closed.channels["P_g0"])))
    clauses.append((dev_g <= 1e-6,
                    f"loss-free master equation matches the closed run "
                    f"to {dev_g:.1e} <= 1e-6"))

    _gate(6, clauses)
