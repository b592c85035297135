"""Compiled Dormand-Prince RK4(5) propagators.

Two kernels share the same embedded pair and PI step-size controller: one
advances a state vector under ``-i H(t) psi``, the other a density matrix
under a Lindblad right-hand side.  Generators arrive as concatenated-CSR
matrices with exponential-sum scalar coefficients (see ``timedep.packed``).

No fastmath: results are IEEE-deterministic and identical across runs and
worker counts.
"""

import numpy as np
from numba import njit

# Dormand-Prince 4(5) tableau
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
E1, E3, E4, E5, E6, E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)

SAFETY = 0.9
PI_ALPHA = 0.17  # 1/5 - 0.75*beta
PI_BETA = 0.04
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
STEP_FLOOR = 1e-12

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_BUDGET = 2


@njit(cache=True)
def _coeff(t, amps, freqs, lo, hi):
    f = 0.0 + 0.0j
    for j in range(lo, hi):
        f += amps[j] * np.exp(1j * freqs[j] * t)
    return f


@njit(cache=True)
def _state_rhs(t, psi, out, data, indices, indptr, amps, freqs, cptr):
    d = psi.shape[0]
    for i in range(d):
        out[i] = 0.0 + 0.0j
    for k in range(indptr.shape[0]):
        f = _coeff(t, amps, freqs, cptr[k], cptr[k + 1])
        for i in range(d):
            s = 0.0 + 0.0j
            for p in range(indptr[k, i], indptr[k, i + 1]):
                s += data[p] * psi[indices[p]]
            out[i] += f * s
    for i in range(d):
        out[i] *= -1j


@njit(cache=True)
def propagate_state(
    data,
    indices,
    indptr,
    amps,
    freqs,
    cptr,
    psi0,
    t_out,
    rtol,
    atol,
    max_step,
    track_idx,
    max_steps,
):
    """Returns (samples, track_max, n_accepted, n_rejected, max_h_used, status)."""
    d = psi0.shape[0]
    n_out = t_out.shape[0]
    out = np.empty((n_out, d), np.complex128)
    for i in range(d):
        out[0, i] = psi0[i]

    track_max = 0.0
    if track_idx >= 0:
        track_max = abs(psi0[track_idx]) ** 2

    y = psi0.copy()
    y2 = np.empty(d, np.complex128)
    ynew = np.empty(d, np.complex128)
    k1 = np.empty(d, np.complex128)
    k2 = np.empty(d, np.complex128)
    k3 = np.empty(d, np.complex128)
    k4 = np.empty(d, np.complex128)
    k5 = np.empty(d, np.complex128)
    k6 = np.empty(d, np.complex128)
    k7 = np.empty(d, np.complex128)

    t = t_out[0]
    t_end = t_out[n_out - 1]
    span = t_end - t
    if span <= 0.0:
        return out, track_max, 0, 0, 0.0, STATUS_OK

    h = max_step if max_step < span else span
    if h > 0.01 * span:
        h = 0.01 * span

    _state_rhs(t, y, k1, data, indices, indptr, amps, freqs, cptr)

    err_prev = 1.0e-4
    n_acc = 0
    n_rej = 0
    max_h_used = 0.0
    i_out = 1
    status = STATUS_OK

    while i_out < n_out:
        target = t_out[i_out]
        landing = False
        hs = h
        if t + hs >= target:
            hs = target - t
            landing = True
        if hs < STEP_FLOOR and not landing:
            status = STATUS_UNDERFLOW
            break

        for i in range(d):
            y2[i] = y[i] + hs * (A21 * k1[i])
        _state_rhs(t + C2 * hs, y2, k2, data, indices, indptr, amps, freqs, cptr)
        for i in range(d):
            y2[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i])
        _state_rhs(t + C3 * hs, y2, k3, data, indices, indptr, amps, freqs, cptr)
        for i in range(d):
            y2[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
        _state_rhs(t + C4 * hs, y2, k4, data, indices, indptr, amps, freqs, cptr)
        for i in range(d):
            y2[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
        _state_rhs(t + C5 * hs, y2, k5, data, indices, indptr, amps, freqs, cptr)
        for i in range(d):
            y2[i] = y[i] + hs * (
                A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]
            )
        _state_rhs(t + hs, y2, k6, data, indices, indptr, amps, freqs, cptr)
        for i in range(d):
            ynew[i] = y[i] + hs * (
                B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]
            )
        _state_rhs(t + hs, ynew, k7, data, indices, indptr, amps, freqs, cptr)

        err_sq = 0.0
        for i in range(d):
            e = hs * (
                E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]
            )
            ay = abs(y[i])
            an = abs(ynew[i])
            sc = atol + rtol * (ay if ay > an else an)
            q = abs(e) / sc
            err_sq += q * q
        err = np.sqrt(err_sq / d)

        if err <= 1.0 or hs <= STEP_FLOOR:
            n_acc += 1
            if hs > max_h_used:
                max_h_used = hs
            t = target if landing else t + hs
            for i in range(d):
                y[i] = ynew[i]
                k1[i] = k7[i]
            if track_idx >= 0:
                p = abs(y[track_idx]) ** 2
                if p > track_max:
                    track_max = p
            if landing:
                for i in range(d):
                    out[i_out, i] = y[i]
                i_out += 1
            if not landing:
                # clipped steps must not shrink the controller's step
                if err <= 0.0:
                    fac = MIN_FACTOR
                else:
                    fac = (err**PI_ALPHA) / (SAFETY * err_prev**PI_BETA)
                    if fac < 1.0 / MAX_FACTOR:
                        fac = 1.0 / MAX_FACTOR
                    elif fac > 1.0 / MIN_FACTOR:
                        fac = 1.0 / MIN_FACTOR
                h = hs / fac
                if h > max_step:
                    h = max_step
                err_prev = err if err > 1.0e-4 else 1.0e-4
        else:
            n_rej += 1
            fac = (err**0.2) / SAFETY
            if fac > 1.0 / MIN_FACTOR:
                fac = 1.0 / MIN_FACTOR
            h = hs / fac
            if h < STEP_FLOOR:
                status = STATUS_UNDERFLOW
                break

        if n_acc + n_rej > max_steps:
            status = STATUS_BUDGET
            break

    return out, track_max, n_acc, n_rej, max_h_used, status


@njit(cache=True)
def _master_rhs(
    t,
    rho,
    out,
    hr,
    data,
    indices,
    indptr,
    amps,
    freqs,
    cptr,
    gain,
    damp,
    jumps,
    jdag,
    jcdc,
    jrates,
):
    d = rho.shape[0]
    # hr = H(t) @ rho via CSR rows; the commutator then uses (H rho)^dag = rho H
    for i in range(d):
        for q in range(d):
            hr[i, q] = 0.0 + 0.0j
    for k in range(indptr.shape[0]):
        f = _coeff(t, amps, freqs, cptr[k], cptr[k + 1])
        for i in range(d):
            for p in range(indptr[k, i], indptr[k, i + 1]):
                v = f * data[p]
                j = indices[p]
                for q in range(d):
                    hr[i, q] += v * rho[j, q]
    for i in range(d):
        for q in range(d):
            out[i, q] = -1j * (hr[i, q] - np.conj(hr[q, i]))

    if gain.shape[0] == d:
        # eigenbasis jump structure: gain[k, j] is the k -> j rate
        for j in range(d):
            g = 0.0
            for k in range(d):
                g += gain[k, j] * rho[k, k].real
            out[j, j] += g
        for pq in range(d):
            for q in range(d):
                out[pq, q] -= 0.5 * (damp[pq] + damp[q]) * rho[pq, q]

    for m in range(jumps.shape[0]):
        r = jrates[m]
        crho = np.dot(jumps[m], rho)
        out += r * np.dot(crho, jdag[m])
        anti = np.dot(jcdc[m], rho)
        out -= (0.5 * r) * anti
        out -= (0.5 * r) * np.conj(anti.T)


@njit(cache=True)
def propagate_master(
    data,
    indices,
    indptr,
    amps,
    freqs,
    cptr,
    gain,
    damp,
    jumps,
    jdag,
    jcdc,
    jrates,
    rho0,
    t_out,
    rtol,
    atol,
    max_step,
    max_steps,
):
    """Returns (samples, n_accepted, n_rejected, max_h_used, status)."""
    d = rho0.shape[0]
    n_out = t_out.shape[0]
    out = np.empty((n_out, d, d), np.complex128)
    out[0] = rho0

    y = rho0.copy()
    y2 = np.empty((d, d), np.complex128)
    ynew = np.empty((d, d), np.complex128)
    hr = np.empty((d, d), np.complex128)
    k1 = np.empty((d, d), np.complex128)
    k2 = np.empty((d, d), np.complex128)
    k3 = np.empty((d, d), np.complex128)
    k4 = np.empty((d, d), np.complex128)
    k5 = np.empty((d, d), np.complex128)
    k6 = np.empty((d, d), np.complex128)
    k7 = np.empty((d, d), np.complex128)

    nn = d * d
    yf = y.reshape(nn)
    y2f = y2.reshape(nn)
    ynewf = ynew.reshape(nn)
    k1f = k1.reshape(nn)
    k2f = k2.reshape(nn)
    k3f = k3.reshape(nn)
    k4f = k4.reshape(nn)
    k5f = k5.reshape(nn)
    k6f = k6.reshape(nn)
    k7f = k7.reshape(nn)

    t = t_out[0]
    t_end = t_out[n_out - 1]
    span = t_end - t
    if span <= 0.0:
        return out, 0, 0, 0.0, STATUS_OK

    h = max_step if max_step < span else span
    if h > 0.01 * span:
        h = 0.01 * span

    _master_rhs(
        t, y, k1, hr, data, indices, indptr, amps, freqs, cptr, gain, damp, jumps, jdag, jcdc, jrates
    )

    err_prev = 1.0e-4
    n_acc = 0
    n_rej = 0
    max_h_used = 0.0
    i_out = 1
    status = STATUS_OK

    while i_out < n_out:
        target = t_out[i_out]
        landing = False
        hs = h
        if t + hs >= target:
            hs = target - t
            landing = True
        if hs < STEP_FLOOR and not landing:
            status = STATUS_UNDERFLOW
            break

        for i in range(nn):
            y2f[i] = yf[i] + hs * (A21 * k1f[i])
        _master_rhs(t + C2 * hs, y2, k2, hr, data, indices, indptr, amps, freqs, cptr, gain, damp, jumps, jdag, jcdc, jrates)
        for i in range(nn):
            y2f[i] = yf[i] + hs * (A31 * k1f[i] + A32 * k2f[i])
        _master_rhs(t + C3 * hs, y2, k3, hr, data, indices, indptr, amps, freqs, cptr, gain, damp, jumps, jdag, jcdc, jrates)
        for i in range(nn):
            y2f[i] = yf[i] + hs * (A41 * k1f[i] + A42 * k2f[i] + A43 * k3f[i])
        _master_rhs(t + C4 * hs, y2, k4, hr, data, indices, indptr, amps, freqs, cptr, gain, damp, jumps, jdag, jcdc, jrates)
        for i in range(nn):
            y2f[i] = yf[i] + hs * (
                A51 * k1f[i] + A52 * k2f[i] + A53 * k3f[i] + A54 * k4f[i]
            )
        _master_rhs(t + C5 * hs, y2, k5, hr, data, indices, indptr, amps, freqs, cptr, gain, damp, jumps, jdag, jcdc, jrates)
        for i in range(nn):
            y2f[i] = yf[i] + hs * (
                A61 * k1f[i] + A62 * k2f[i] + A63 * k3f[i] + A64 * k4f[i] + A65 * k5f[i]
            )
        _master_rhs(t + hs, y2, k6, hr, data, indices, indptr, amps, freqs, cptr, gain, damp, jumps, jdag, jcdc, jrates)
        for i in range(nn):
            ynewf[i] = yf[i] + hs * (
                B1 * k1f[i] + B3 * k3f[i] + B4 * k4f[i] + B5 * k5f[i] + B6 * k6f[i]
            )
        _master_rhs(t + hs, ynew, k7, hr, data, indices, indptr, amps, freqs, cptr, gain, damp, jumps, jdag, jcdc, jrates)

        err_sq = 0.0
        for i in range(nn):
            e = hs * (
                E1 * k1f[i]
                + E3 * k3f[i]
                + E4 * k4f[i]
                + E5 * k5f[i]
                + E6 * k6f[i]
                + E7 * k7f[i]
            )
            ay = abs(yf[i])
            an = abs(ynewf[i])
            sc = atol + rtol * (ay if ay > an else an)
            q2 = abs(e) / sc
            err_sq += q2 * q2
        err = np.sqrt(err_sq / nn)

        if err <= 1.0 or hs <= STEP_FLOOR:
            n_acc += 1
            if hs > max_h_used:
                max_h_used = hs
            t = target if landing else t + hs
            for i in range(nn):
                yf[i] = ynewf[i]
                k1f[i] = k7f[i]
            if landing:
                out[i_out] = y
                i_out += 1
            if not landing:
                # clipped steps must not shrink the controller's step
                if err <= 0.0:
                    fac = MIN_FACTOR
                else:
                    fac = (err**PI_ALPHA) / (SAFETY * err_prev**PI_BETA)
                    if fac < 1.0 / MAX_FACTOR:
                        fac = 1.0 / MAX_FACTOR
                    elif fac > 1.0 / MIN_FACTOR:
                        fac = 1.0 / MIN_FACTOR
                h = hs / fac
                if h > max_step:
                    h = max_step
                err_prev = err if err > 1.0e-4 else 1.0e-4
        else:
            n_rej += 1
            fac = (err**0.2) / SAFETY
            if fac > 1.0 / MIN_FACTOR:
                fac = 1.0 / MIN_FACTOR
            h = hs / fac
            if h < STEP_FLOOR:
                status = STATUS_UNDERFLOW
                break

        if n_acc + n_rej > max_steps:
            status = STATUS_BUDGET
            break

    return out, n_acc, n_rej, max_h_used, status
