"""Compiled master-equation integrator.

Embedded Dormand-Prince 5(4) pair stepping the Lindblad right-hand side
directly on the density matrix.  All operators enter as CSR triplets and
the RHS costs O(nnz * dim) per evaluation, never forming the dim^2
superoperator.  Every arithmetic step runs in a fixed order with
fastmath disabled, so results are bit-reproducible.

The effective Hamiltonian Heff = H - (i/2) sum_k Lk^dag Lk carries the
anticommutator part of the dissipators; jump operators arrive with
sqrt(rate) folded in, so the RHS reads
    drho = -i (Heff rho - rho Heff^dag) + sum_k Lk rho Lk^dag.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# Dormand-Prince 5(4) tableau (same pair scipy's RK45 uses)
DP_A = np.zeros((7, 7))
DP_A[1, 0] = 1 / 5
DP_A[2, :2] = [3 / 40, 9 / 40]
DP_A[3, :3] = [44 / 45, -56 / 15, 32 / 9]
DP_A[4, :4] = [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]
DP_A[5, :5] = [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]
DP_A[6, :6] = [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]
DP_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
DP_ERR = np.array(
    [71 / 57600, 0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1
STATUS_STEP_BUDGET = 2


@njit(cache=True)
def _rhs(rho, hp, hi, hd, jp, ji, jd, ajp, aji, ajd, nj, tmp, out):
    """out = -i(Heff rho - rho Heff^dag) + sum_k Lk rho Lk^dag.

    hp/hi/hd: CSR of Heff.  jp/ji/jd: CSR blocks of the Lk stacked so
    block q starts at row offset q*(dim+1) in the indptr array; ajp/...
    likewise for the Lk^dag.
    """
    d = rho.shape[0]
    for i in range(d):
        for c in range(d):
            out[i, c] = 0.0 + 0.0j
    # -i Heff @ rho
    for i in range(d):
        for e in range(hp[i], hp[i + 1]):
            j = hi[e]
            v = -1j * hd[e]
            for c in range(d):
                out[i, c] += v * rho[j, c]
    # +i rho @ Heff^dag: entry (c,k) of Heff contributes conj to (k,c) of Heff^dag
    for c in range(d):
        for e in range(hp[c], hp[c + 1]):
            k = hi[e]
            v = 1j * np.conj(hd[e])
            for r in range(d):
                out[r, c] += v * rho[r, k]
    for q in range(nj):
        base = q * (d + 1)
        for i in range(d):
            for c in range(d):
                tmp[i, c] = 0.0 + 0.0j
        # tmp = Lq @ rho
        for i in range(d):
            for e in range(jp[base + i], jp[base + i + 1]):
                j = ji[e]
                v = jd[e]
                for c in range(d):
                    tmp[i, c] += v * rho[j, c]
        # out += tmp @ Lq^dag
        for k in range(d):
            for e in range(ajp[base + k], ajp[base + k + 1]):
                j = aji[e]
                v = ajd[e]
                for r in range(d):
                    out[r, j] += tmp[r, k] * v


@njit(cache=True)
def integrate(
    rho0,
    hp,
    hi,
    hd,
    jp,
    ji,
    jd,
    ajp,
    aji,
    ajd,
    nj,
    t_samples,
    rtol,
    atol,
    a,
    b5,
    err_w,
    h0,
    max_steps,
):
    """Advance rho0 from t_samples[0], landing exactly on every sample.

    Returns (states, steps_taken, last_step_size, status).  states[0] is
    rho0 itself; on a nonzero status the remaining samples are filled
    with the last accepted state.
    """
    d = rho0.shape[0]
    ns = t_samples.shape[0]
    outs = np.empty((ns, d, d), dtype=np.complex128)
    k = np.empty((7, d, d), dtype=np.complex128)
    tmp = np.empty((d, d), dtype=np.complex128)
    ytmp = np.empty((d, d), dtype=np.complex128)
    ynew = np.empty((d, d), dtype=np.complex128)
    y = rho0.copy()
    t = t_samples[0]
    outs[0] = y
    _rhs(y, hp, hi, hd, jp, ji, jd, ajp, aji, ajd, nj, tmp, k[0])
    t_span = t_samples[ns - 1] - t_samples[0]
    h_floor = 1e-14 * max(t_span, 1e-300)
    h = min(h0, t_span)
    nsteps = 0
    status = STATUS_OK
    isamp = 1
    while isamp < ns:
        t_end = t_samples[isamp]
        while t < t_end:
            if nsteps >= max_steps:
                status = STATUS_STEP_BUDGET
                break
            trunc = False
            if t + h >= t_end:
                h_try = t_end - t
                trunc = True
            else:
                h_try = h
            for s in range(1, 7):
                for r in range(d):
                    for c in range(d):
                        acc = y[r, c]
                        for j in range(s):
                            acc += (h_try * a[s, j]) * k[j, r, c]
                        ytmp[r, c] = acc
                _rhs(ytmp, hp, hi, hd, jp, ji, jd, ajp, aji, ajd, nj, tmp, k[s])
            errn = 0.0
            for r in range(d):
                for c in range(d):
                    acc = y[r, c]
                    ee = 0.0 + 0.0j
                    for j in range(7):
                        acc += (h_try * b5[j]) * k[j, r, c]
                        ee += (h_try * err_w[j]) * k[j, r, c]
                    ynew[r, c] = acc
                    sc = atol + rtol * max(abs(y[r, c]), abs(acc))
                    qq = abs(ee) / sc
                    errn += qq * qq
            errn = np.sqrt(errn / (d * d))
            nsteps += 1
            if errn <= 1.0:
                t = t + h_try
                for r in range(d):
                    for c in range(d):
                        y[r, c] = ynew[r, c]
                        k[0, r, c] = k[6, r, c]  # first-same-as-last
                if errn == 0.0:
                    fac = 5.0
                else:
                    fac = min(5.0, max(0.2, 0.9 * errn**-0.2))
                if trunc:
                    # keep the pre-truncation step size for the next leg
                    h = max(h, h_try * fac)
                else:
                    h = h_try * fac
            else:
                h = h_try * min(1.0, max(0.2, 0.9 * errn**-0.2))
                if h < h_floor:
                    status = STATUS_STEP_UNDERFLOW
                    break
        if status != STATUS_OK:
            for rest in range(isamp, ns):
                outs[rest] = y
            break
        outs[isamp] = y
        isamp += 1
    return outs, nsteps, h, status
