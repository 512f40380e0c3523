"""numba kernels: the O(1)-per-step incremental engines behind the public API.

Conventions shared by the trace kernels:
  - step k visits site z = S_k; all per-site state (count c, charge sum C,
    squared-charge sum D) is read *before* the update with (z, q_k);
  - per-step increments:
        H  += q_k * C          I  += c             V += C^2
        Xi += C^2 * dt_k       Xi1 += D * dt_k     Xi2 += (C^2 - D) * dt_k
        M  += D - c            N  += D * (dt_k - 1)
        b  += (C^2 - D) / 2    a  += (C^2 - D) / 2 * (dt_k - 1)
    so Xi1 = I + M + N, Xi2 = 2(a + b) and Xi = Xi1 + Xi2 hold identically;
  - H, V, Xi, Xi1, Xi2 accumulate with compensated (Kahan) summation;
  - the running max of |H_j| includes H_0 = 0;
  - checkpoints are a sorted int64 array whose last entry is n.

Site keys pack d signed coordinates into one int64 (62//d bits per axis,
offset binary); kernels flag coordinate overflow and callers retry with a
larger dense range where applicable.  Bulk kernels draw from the
numba-internal MT19937 seeded once at entry: one uniform per walk step,
then (optionally) one draw per charge and one per duration, in that fixed
order, so a replicate's trace depends only on its seed.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# hash-table load kept below ~0.55; EMPTY marks unused slots (packed keys
# are nonnegative by construction)
_EMPTY = np.int64(-1)

# charge modes for bulk kernels
QMODE_ONES = 0
QMODE_RADEMACHER = 1
QMODE_GAUSSIAN = 2
QMODE_DISCRETE = 3

# duration modes
DTMODE_UNIT = 0
DTMODE_TABLE = 1


@njit(cache=True, nogil=True, inline="always")
def _hash_key(k):
    h = np.uint64(k) * np.uint64(0x9E3779B97F4A7C15)
    h ^= h >> np.uint64(29)
    h *= np.uint64(0xBF58476D1CE4E5B9)
    h ^= h >> np.uint64(32)
    return h


@njit(cache=True, nogil=True)
def _grow(keys, cnt, Cs, Ds):
    cap2 = keys.shape[0] * 2
    nk = np.full(cap2, _EMPTY, dtype=np.int64)
    nc = np.zeros(cap2, dtype=np.int64)
    nC = np.zeros(cap2, dtype=np.float64)
    nD = np.zeros(cap2, dtype=np.float64)
    mask = np.int64(cap2 - 1)
    for i in range(keys.shape[0]):
        k = keys[i]
        if k == _EMPTY:
            continue
        j = np.int64(_hash_key(k) & np.uint64(mask))
        while nk[j] != _EMPTY:
            j = (j + 1) & mask
        nk[j] = k
        nc[j] = cnt[i]
        nC[j] = Cs[i]
        nD[j] = Ds[i]
    return nk, nc, nC, nD


def pack_positions(positions: np.ndarray, d: int) -> np.ndarray:
    """Pack (n,) or (n,d) integer positions into int64 keys (62//d bits/axis)."""
    positions = np.asarray(positions, dtype=np.int64)
    if positions.ndim == 1:
        positions = positions[:, None]
    if positions.shape[1] != d:
        raise ValueError(f"positions have {positions.shape[1]} axes, expected {d}")
    bits = 62 // d
    off = np.int64(1) << (bits - 1)
    if np.any(np.abs(positions) >= off):
        raise OverflowError(f"coordinate exceeds +-2^{bits - 1} packing range for d={d}")
    keys = np.zeros(len(positions), dtype=np.int64)
    for i in range(d):
        keys |= (positions[:, i] + off) << (bits * i)
    return keys


@njit(cache=True, nogil=True)
def trace_from_keys(keys, q, dt, unit_dt, checkpoints):
    """Fused incremental pass over explicit site keys / charges / durations.

    Returns (H, V, Xi, I, M, N, a, b, Xi1, Xi2, maxabsH, sumL2) arrays, one
    entry per checkpoint.
    """
    n = keys.shape[0]
    ncp = checkpoints.shape[0]
    out_H = np.zeros(ncp)
    out_V = np.zeros(ncp)
    out_Xi = np.zeros(ncp)
    out_I = np.zeros(ncp, dtype=np.int64)
    out_M = np.zeros(ncp)
    out_N = np.zeros(ncp)
    out_a = np.zeros(ncp)
    out_b = np.zeros(ncp)
    out_X1 = np.zeros(ncp)
    out_X2 = np.zeros(ncp)
    out_mx = np.zeros(ncp)
    out_L2 = np.zeros(ncp, dtype=np.int64)

    cap = 1024
    while cap < 2 * n:
        cap *= 2
    tk = np.full(cap, _EMPTY, dtype=np.int64)
    tc = np.zeros(cap, dtype=np.int64)
    tC = np.zeros(cap, dtype=np.float64)
    tD = np.zeros(cap, dtype=np.float64)
    mask = np.int64(cap - 1)

    H = 0.0; Hc = 0.0
    V = 0.0; Vc = 0.0
    Xi = 0.0; Xic = 0.0
    X1 = 0.0; X1c = 0.0
    X2 = 0.0; X2c = 0.0
    M = 0.0
    N = 0.0
    aa = 0.0
    bb = 0.0
    I = np.int64(0)
    L2 = np.int64(0)
    mx = 0.0
    ic = 0

    for step in range(n):
        k = keys[step]
        j = np.int64(_hash_key(k) & np.uint64(mask))
        while True:
            tkj = tk[j]
            if tkj == k:
                break
            if tkj == _EMPTY:
                tk[j] = k
                break
            j = (j + 1) & mask
        c = tc[j]
        C = tC[j]
        D = tD[j]
        qk = q[step]
        dtk = 1.0 if unit_dt else dt[step]
        CC = C * C

        y = qk * C - Hc
        t = H + y
        Hc = (t - H) - y
        H = t

        y = CC - Vc
        t = V + y
        Vc = (t - V) - y
        V = t

        y = CC * dtk - Xic
        t = Xi + y
        Xic = (t - Xi) - y
        Xi = t

        y = D * dtk - X1c
        t = X1 + y
        X1c = (t - X1) - y
        X1 = t

        y = (CC - D) * dtk - X2c
        t = X2 + y
        X2c = (t - X2) - y
        X2 = t

        I += c
        M += D - c
        N += D * (dtk - 1.0)
        bb += (CC - D) * 0.5
        aa += (CC - D) * 0.5 * (dtk - 1.0)
        L2 += 2 * c + 1

        tc[j] = c + 1
        tC[j] = C + qk
        tD[j] = D + qk * qk

        if abs(H) > mx:
            mx = abs(H)

        if ic < ncp and step + 1 == checkpoints[ic]:
            out_H[ic] = H
            out_V[ic] = V
            out_Xi[ic] = Xi
            out_I[ic] = I
            out_M[ic] = M
            out_N[ic] = N
            out_a[ic] = aa
            out_b[ic] = bb
            out_X1[ic] = X1
            out_X2[ic] = X2
            out_mx[ic] = mx
            out_L2[ic] = L2
            ic += 1

    return out_H, out_V, out_Xi, out_I, out_M, out_N, out_a, out_b, out_X1, out_X2, out_mx, out_L2


@njit(cache=True, nogil=True)
def trace_bulk_hash(seed, n, d, qmode, qvals, qcdf, dtmode, dt_u, dt_t, checkpoints):
    """Self-contained replicate: internal RNG, hash occupancy, any d.

    One uniform per step for the direction, then the charge draw, then the
    duration draw.  Returns checkpoint arrays as in trace_from_keys plus an
    error flag (0 ok, 1 coordinate overflow).
    """
    np.random.seed(seed)
    ncp = checkpoints.shape[0]
    out = np.zeros((12, ncp))
    bits = 62 // d
    off = np.int64(1) << (bits - 1)
    shift = np.int64(bits)
    coords = np.zeros(d, dtype=np.int64)

    cap = 2048
    est = 4 * n if d == 1 else (n if d == 2 else 3 * n)
    lim = min(est + 1024, 1 << 26)
    while cap < lim and cap < 1 << 21:
        cap *= 2
    tk = np.full(cap, _EMPTY, dtype=np.int64)
    tc = np.zeros(cap, dtype=np.int64)
    tC = np.zeros(cap, dtype=np.float64)
    tD = np.zeros(cap, dtype=np.float64)
    mask = np.int64(cap - 1)

    H = 0.0; Hc = 0.0
    V = 0.0; Vc = 0.0
    Xi = 0.0; Xic = 0.0
    X1 = 0.0; X1c = 0.0
    X2 = 0.0; X2c = 0.0
    M = 0.0
    N = 0.0
    aa = 0.0
    bb = 0.0
    I = np.int64(0)
    L2 = np.int64(0)
    mx = 0.0
    ic = 0
    nq = qvals.shape[0]
    used = 0

    for step in range(n):
        u = np.random.random()
        idx = np.int64(u * 2 * d)
        if idx > 2 * d - 1:
            idx = np.int64(2 * d - 1)
        axis = idx >> 1
        coords[axis] += 1 - 2 * (idx & 1)
        if coords[axis] >= off or coords[axis] <= -off:
            return out, 1

        key = np.int64(0)
        for i in range(d):
            key |= (coords[i] + off) << (shift * i)

        if qmode == 0:
            qk = 1.0
        elif qmode == 1:
            qk = 1.0 if np.random.random() < 0.5 else -1.0
        elif qmode == 2:
            qk = np.random.normal()
        else:
            uq = np.random.random()
            lo = 0
            hi = nq
            while lo < hi:
                mid = (lo + hi) >> 1
                if qcdf[mid] < uq:
                    lo = mid + 1
                else:
                    hi = mid
            qk = qvals[lo]

        if dtmode == 0:
            dtk = 1.0
        else:
            ud = np.random.random()
            dtk = np.interp(ud, dt_u, dt_t)

        j = np.int64(_hash_key(key) & np.uint64(mask))
        while True:
            tkj = tk[j]
            if tkj == key:
                break
            if tkj == _EMPTY:
                tk[j] = key
                used += 1
                break
            j = (j + 1) & mask
        c = tc[j]
        C = tC[j]
        D = tD[j]
        CC = C * C

        y = qk * C - Hc
        t = H + y
        Hc = (t - H) - y
        H = t

        y = CC - Vc
        t = V + y
        Vc = (t - V) - y
        V = t

        y = CC * dtk - Xic
        t = Xi + y
        Xic = (t - Xi) - y
        Xi = t

        y = D * dtk - X1c
        t = X1 + y
        X1c = (t - X1) - y
        X1 = t

        y = (CC - D) * dtk - X2c
        t = X2 + y
        X2c = (t - X2) - y
        X2 = t

        I += c
        M += D - c
        N += D * (dtk - 1.0)
        bb += (CC - D) * 0.5
        aa += (CC - D) * 0.5 * (dtk - 1.0)
        L2 += 2 * c + 1

        tc[j] = c + 1
        tC[j] = C + qk
        tD[j] = D + qk * qk

        if abs(H) > mx:
            mx = abs(H)

        if ic < ncp and step + 1 == checkpoints[ic]:
            out[0, ic] = H
            out[1, ic] = V
            out[2, ic] = Xi
            out[3, ic] = I
            out[4, ic] = M
            out[5, ic] = N
            out[6, ic] = aa
            out[7, ic] = bb
            out[8, ic] = X1
            out[9, ic] = X2
            out[10, ic] = mx
            out[11, ic] = L2
            ic += 1

        if used * 2 > cap:
            tk, tc, tC, tD = _grow(tk, tc, tC, tD)
            cap = tk.shape[0]
            mask = np.int64(cap - 1)

    return out, 0


@njit(cache=True, nogil=True)
def trace_bulk_dense1(seed, n, qmode, qvals, qcdf, dtmode, dt_u, dt_t, checkpoints, R):
    """d=1 replicate on a dense +-R position range (O(1) direct indexing).

    Returns (out, err, counts, lo, hi): err=1 means the walk left +-R and
    the caller should retry with a larger R (same seed reproduces the same
    path).  counts[lo:hi+1] is the final local-time field around index R.
    """
    np.random.seed(seed)
    ncp = checkpoints.shape[0]
    out = np.zeros((12, ncp))
    W = 2 * R + 1
    cnt = np.zeros(W, dtype=np.int64)
    Cs = np.zeros(W, dtype=np.float64)
    Ds = np.zeros(W, dtype=np.float64)

    H = 0.0; Hc = 0.0
    V = 0.0; Vc = 0.0
    Xi = 0.0; Xic = 0.0
    X1 = 0.0; X1c = 0.0
    X2 = 0.0; X2c = 0.0
    M = 0.0
    N = 0.0
    aa = 0.0
    bb = 0.0
    I = np.int64(0)
    L2 = np.int64(0)
    mx = 0.0
    ic = 0
    nq = qvals.shape[0]
    pos = R
    lo = R
    hi = R

    for step in range(n):
        u = np.random.random()
        pos += 1 if u < 0.5 else -1
        if pos <= 0 or pos >= W - 1:
            return out, 1, cnt, lo, hi
        if pos < lo:
            lo = pos
        elif pos > hi:
            hi = pos

        if qmode == 0:
            qk = 1.0
        elif qmode == 1:
            qk = 1.0 if np.random.random() < 0.5 else -1.0
        elif qmode == 2:
            qk = np.random.normal()
        else:
            uq = np.random.random()
            l2 = 0
            h2 = nq
            while l2 < h2:
                mid = (l2 + h2) >> 1
                if qcdf[mid] < uq:
                    l2 = mid + 1
                else:
                    h2 = mid
            qk = qvals[l2]

        if dtmode == 0:
            dtk = 1.0
        else:
            ud = np.random.random()
            dtk = np.interp(ud, dt_u, dt_t)

        c = cnt[pos]
        C = Cs[pos]
        D = Ds[pos]
        CC = C * C

        y = qk * C - Hc
        t = H + y
        Hc = (t - H) - y
        H = t

        y = CC - Vc
        t = V + y
        Vc = (t - V) - y
        V = t

        y = CC * dtk - Xic
        t = Xi + y
        Xic = (t - Xi) - y
        Xi = t

        y = D * dtk - X1c
        t = X1 + y
        X1c = (t - X1) - y
        X1 = t

        y = (CC - D) * dtk - X2c
        t = X2 + y
        X2c = (t - X2) - y
        X2 = t

        I += c
        M += D - c
        N += D * (dtk - 1.0)
        bb += (CC - D) * 0.5
        aa += (CC - D) * 0.5 * (dtk - 1.0)
        L2 += 2 * c + 1

        cnt[pos] = c + 1
        Cs[pos] = C + qk
        Ds[pos] = D + qk * qk

        if abs(H) > mx:
            mx = abs(H)

        if ic < ncp and step + 1 == checkpoints[ic]:
            out[0, ic] = H
            out[1, ic] = V
            out[2, ic] = Xi
            out[3, ic] = I
            out[4, ic] = M
            out[5, ic] = N
            out[6, ic] = aa
            out[7, ic] = bb
            out[8, ic] = X1
            out[9, ic] = X2
            out[10, ic] = mx
            out[11, ic] = L2
            ic += 1

    return out, 0, cnt, lo, hi


# ---------------------------------------------------------------------------
# return-probability mixture recursion (d >= 3)
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def binomial_mixture_series(pj, pk, qprob, n):
    """p_d(k) = sum_m Binom(k, qprob)(m) pj(m) pk(k-m), windowed at 12 sigma."""
    out = np.zeros(n + 1)
    out[0] = 1.0
    logq = math.log(qprob)
    log1q = math.log1p(-qprob)
    ratio2 = (qprob / (1.0 - qprob)) ** 2
    for k in range(2, n + 1, 2):
        sig = math.sqrt(k * qprob * (1.0 - qprob))
        m0 = int(round(k * qprob))
        m0 -= m0 & 1
        if m0 < 0:
            m0 = 0
        if m0 > k:
            m0 = k
        halfw = int(12.0 * sig) + 4
        lo = m0 - halfw
        if lo < 0:
            lo = 0
        lo += lo & 1
        hi = m0 + halfw
        if hi > k:
            hi = k
        hi -= hi & 1
        # pmf at m0, then even-step ratio recurrences in both directions
        logp0 = (
            math.lgamma(k + 1.0)
            - math.lgamma(m0 + 1.0)
            - math.lgamma(k - m0 + 1.0)
            + m0 * logq
            + (k - m0) * log1q
        )
        p0 = math.exp(logp0)
        s = p0 * pj[m0] * pk[k - m0]
        pm = p0
        m = m0
        while m + 2 <= hi:
            pm *= ratio2 * (k - m) * (k - m - 1) / ((m + 1.0) * (m + 2.0))
            m += 2
            s += pm * pj[m] * pk[k - m]
        pm = p0
        m = m0
        while m - 2 >= lo:
            pm *= (m * (m - 1.0)) / ((k - m + 1.0) * (k - m + 2.0)) / ratio2
            m -= 2
            s += pm * pj[m] * pk[k - m]
        out[k] = s
    return out


# ---------------------------------------------------------------------------
# Skorohod interval exits
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def interval_exits(seed, av, bv, grid_dt):
    """Exit side/time of W from [a_i, b_i], Euler grid + bridge correction.

    av[i] < 0 < bv[i].  Within a substep the probability that the bridge
    between the endpoints crossed a barrier at distance (g0, g1) is
    exp(-2 g0 g1 / grid_dt); a uniform draw decides.  Hard crossings get a
    linearly interpolated time, bridge crossings the substep midpoint.
    """
    np.random.seed(seed)
    m = av.shape[0]
    q = np.zeros(m)
    tt = np.zeros(m)
    sdt = math.sqrt(grid_dt)
    for i in range(m):
        a = av[i]
        b = bv[i]
        w = 0.0
        t = 0.0
        while True:
            z = np.random.normal() * sdt
            w1 = w + z
            if w1 >= b:
                q[i] = b
                tt[i] = t + grid_dt * ((b - w) / (w1 - w))
                break
            if w1 <= a:
                q[i] = a
                tt[i] = t + grid_dt * ((a - w) / (w1 - w))
                break
            pb = math.exp(-2.0 * (b - w) * (b - w1) / grid_dt)
            pa = math.exp(-2.0 * (w - a) * (w1 - a) / grid_dt)
            u = np.random.random()
            if u < pb:
                q[i] = b
                tt[i] = t + 0.5 * grid_dt
                break
            if u < pb + pa:
                q[i] = a
                tt[i] = t + 0.5 * grid_dt
                break
            w = w1
            t += grid_dt
    return q, tt


# ---------------------------------------------------------------------------
# Brownian local time (bin occupation with exact linear interpolation)
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def occupation_bins(values, grid_dt, h, x0, nbins):
    """Occupation time per bin [x0 + j h, x0 + (j+1) h) of the linear
    interpolation of a grid path; returns (bins, clipped_mass)."""
    bins = np.zeros(nbins)
    clipped = 0.0
    for i in range(values.shape[0] - 1):
        w0 = values[i]
        w1 = values[i + 1]
        if w0 > w1:
            w0, w1 = w1, w0
        if w1 - w0 < 1e-15:
            j = int(math.floor((w0 - x0) / h))
            if 0 <= j < nbins:
                bins[j] += grid_dt
            else:
                clipped += grid_dt
            continue
        dens = grid_dt / (w1 - w0)
        j0 = int(math.floor((w0 - x0) / h))
        j1 = int(math.floor((w1 - x0) / h))
        for j in range(j0, j1 + 1):
            lo = x0 + j * h
            hi = lo + h
            ov = min(w1, hi) - max(w0, lo)
            if ov > 0.0:
                if 0 <= j < nbins:
                    bins[j] += ov * dens
                else:
                    clipped += ov * dens
    return bins, clipped


# ---------------------------------------------------------------------------
# Revesz embedding
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True, inline="always")
def _chord(bins, nb, x0, h, w0, w1, tau):
    a = w0
    b = w1
    if a > b:
        a, b = b, a
    if b - a < 1e-15:
        j = int(math.floor((a - x0) / h))
        if 0 <= j < nb:
            bins[j] += tau
        return
    dens = tau / (b - a)
    j0 = int(math.floor((a - x0) / h))
    j1 = int(math.floor((b - x0) / h))
    for j in range(j0, j1 + 1):
        blo = x0 + j * h
        bhi = blo + h
        ov = min(b, bhi) - max(a, blo)
        if ov > 0.0 and 0 <= j < nb:
            bins[j] += ov * dens


@njit(cache=True, nogil=True)
def revesz_stream(seed, n_steps, grid_dt, hinv, checkpoints, R, use_bridge):
    """Embed a simple walk into an internally generated Brownian path.

    Walk steps are successive +-1 displacements of B from the current
    integer level; the level ladder stays on Z so grid noise never drifts
    the walk off the lattice.  Local-time bins have width 1/hinv centered
    on multiples of 1/hinv (integer sites are bin centers).

    Returns per-checkpoint arrays (coupling sup-error, time of the n-th
    displacement, walk local time at 0) plus displacement-time moments and
    the sum of step signs, and an error flag (1 = range R exceeded).
    """
    np.random.seed(seed)
    ncp = checkpoints.shape[0]
    err = np.zeros(ncp)
    t_at = np.zeros(ncp)
    l0_at = np.zeros(ncp)
    h = 1.0 / hinv
    W = 2 * R + 1
    L = np.zeros(W, dtype=np.int64)  # walk local time, index pos + R
    nb = W * hinv + 2 * hinv
    bins = np.zeros(nb)
    # bin j covers [x0 + j h, x0 + (j+1) h); site x sits at bin center:
    x0 = -(R + 1.0) - 0.5 * h
    sdt = math.sqrt(grid_dt)

    w = 0.0
    t = 0.0
    level = 0
    pos = 0
    lo = 0
    hi = 0
    steps_done = 0
    ic = 0
    sum_sign = 0.0
    sum_T = 0.0
    sum_T2 = 0.0
    last_disp_t = 0.0
    flag = 0

    while steps_done < n_steps:
        z = np.random.normal() * sdt
        w1 = w + z

        # displacement detection against the current level's +-1 barriers
        crossed = 0
        bridge_hit = 0
        direction = 0
        tcross = t + grid_dt
        up = level + 1.0
        dn = level - 1.0
        if w1 >= up:
            crossed = 1
            direction = 1
            tcross = t + grid_dt * ((up - w) / (w1 - w))
        elif w1 <= dn:
            crossed = 1
            direction = -1
            tcross = t + grid_dt * ((dn - w) / (w1 - w))
        elif use_bridge == 1:
            # skip the uniform when both crossing probs are negligible;
            # the skip condition depends only on (w, w1), so replicate
            # streams stay reproducible
            gb = (up - w) * (up - w1)
            ga = (w - dn) * (w1 - dn)
            if gb * 2.0 < 30.0 * grid_dt or ga * 2.0 < 30.0 * grid_dt:
                pb = math.exp(-2.0 * gb / grid_dt)
                pa = math.exp(-2.0 * ga / grid_dt)
                u = np.random.random()
                if u < pb:
                    crossed = 1
                    bridge_hit = 1
                    direction = 1
                    tcross = t + 0.5 * grid_dt
                elif u < pb + pa:
                    crossed = 1
                    bridge_hit = 1
                    direction = -1
                    tcross = t + 0.5 * grid_dt

        # occupation: a bridge-detected crossing certainly touched the
        # barrier, so deposit along w -> barrier -> w1 (the straight chord
        # would starve the crossed level of occupation by O(grid_dt) per
        # displacement, a sum that grows like n * grid_dt)
        if bridge_hit == 1:
            lvl = up if direction == 1 else dn
            g0 = abs(lvl - w)
            g1 = abs(lvl - w1)
            tau1 = grid_dt * (g0 / (g0 + g1)) if g0 + g1 > 0 else 0.5 * grid_dt
            _chord(bins, nb, x0, h, w, lvl, tau1)
            _chord(bins, nb, x0, h, lvl, w1, grid_dt - tau1)
        else:
            _chord(bins, nb, x0, h, w, w1, grid_dt)

        w = w1
        t += grid_dt

        # one displacement per grid segment; if |w - level| is still >= 1
        # afterwards (a multi-level jump, ~1e-10 per step at the default
        # grid), the next segment's hard-crossing test picks it up, so the
        # displacement order stays strict.
        if crossed == 1:
            level += direction
            pos += direction
            if pos + R <= 0 or pos + R >= W - 1:
                flag = 1
                return err, t_at, l0_at, sum_sign, sum_T, sum_T2, steps_done, flag
            if pos < lo:
                lo = pos
            elif pos > hi:
                hi = pos
            L[pos + R] += 1
            steps_done += 1
            sum_sign += direction
            dT = tcross - last_disp_t
            sum_T += dT
            sum_T2 += dT * dT
            last_disp_t = tcross

            if ic < ncp and steps_done == checkpoints[ic]:
                sup = 0.0
                for x in range(lo - 2, hi + 3):
                    lw = float(L[x + R])
                    jb = x * hinv + (R + 1) * hinv  # == round((x - x0)/h) center bin
                    lb = bins[jb] / h
                    dv = lw - lb
                    if dv < 0.0:
                        dv = -dv
                    if dv > sup:
                        sup = dv
                err[ic] = sup
                t_at[ic] = t
                l0_at[ic] = L[R]
                ic += 1

    return err, t_at, l0_at, sum_sign, sum_T, sum_T2, steps_done, flag


@njit(cache=True, nogil=True)
def revesz_from_path(values, grid_dt, n_steps, hinv, R, bridge_u):
    """Path-based embedding: returns (signs, hit_idx, coupling_err, T_n, flag).

    bridge_u: per-grid-segment uniforms for crossing correction (empty
    array disables the correction).  flag: 0 ok, 1 path exhausted, 2 range
    R exceeded.
    """
    m = values.shape[0]
    use_bridge = bridge_u.shape[0] > 0
    signs = np.zeros(n_steps, dtype=np.int8)
    hit_idx = np.zeros(n_steps, dtype=np.int64)
    h = 1.0 / hinv
    W = 2 * R + 1
    L = np.zeros(W, dtype=np.int64)
    nb = W * hinv + 2 * hinv
    bins = np.zeros(nb)
    x0 = -(R + 1.0) - 0.5 * h

    level = 0
    pos = 0
    lo = 0
    hi = 0
    steps_done = 0
    T_n = 0.0

    for i in range(m - 1):
        w = values[i]
        w1 = values[i + 1]

        crossed = 0
        bridge_hit = 0
        direction = 0
        up = level + 1.0
        dn = level - 1.0
        if w1 >= up:
            crossed = 1
            direction = 1
        elif w1 <= dn:
            crossed = 1
            direction = -1
        elif use_bridge:
            pb = math.exp(-2.0 * (up - w) * (up - w1) / grid_dt)
            pa = math.exp(-2.0 * (w - dn) * (w1 - dn) / grid_dt)
            u = bridge_u[i]
            if u < pb:
                crossed = 1
                bridge_hit = 1
                direction = 1
            elif u < pb + pa:
                crossed = 1
                bridge_hit = 1
                direction = -1

        if bridge_hit == 1:
            lvl = up if direction == 1 else dn
            g0 = abs(lvl - w)
            g1 = abs(lvl - w1)
            tau1 = grid_dt * (g0 / (g0 + g1)) if g0 + g1 > 0 else 0.5 * grid_dt
            _chord(bins, nb, x0, h, w, lvl, tau1)
            _chord(bins, nb, x0, h, lvl, w1, grid_dt - tau1)
        else:
            _chord(bins, nb, x0, h, w, w1, grid_dt)

        if crossed == 1:
            # one displacement per segment keeps hit indices strictly
            # increasing; a residual |w1 - level| >= 1 is caught by the
            # next segment's hard-crossing test.
            level += direction
            pos += direction
            if pos + R <= 0 or pos + R >= W - 1:
                return signs, hit_idx, 0.0, 0.0, 2
            if pos < lo:
                lo = pos
            elif pos > hi:
                hi = pos
            L[pos + R] += 1
            signs[steps_done] = direction
            hit_idx[steps_done] = i + 1
            steps_done += 1

        if steps_done >= n_steps:
            T_n = (i + 1) * grid_dt
            sup = 0.0
            for x in range(lo - 2, hi + 3):
                lw = float(L[x + R])
                jb = x * hinv + (R + 1) * hinv
                lb = bins[jb] / h
                dv = lw - lb
                if dv < 0.0:
                    dv = -dv
                if dv > sup:
                    sup = dv
            return signs, hit_idx, sup, T_n, 0

    return signs, hit_idx, 0.0, 0.0, 1


# ---------------------------------------------------------------------------
# Small-ball survival
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def small_ball_survivals(seed, n_reps, n_steps, grid_dt, y):
    """Count replicates with sup_{s<=1}|W| < y; bridge-corrected barriers."""
    np.random.seed(seed)
    sdt = math.sqrt(grid_dt)
    alive_total = 0
    for r in range(n_reps):
        w = 0.0
        alive = True
        for i in range(n_steps):
            w1 = w + np.random.normal() * sdt
            if w1 >= y or w1 <= -y:
                alive = False
                break
            pb = math.exp(-2.0 * (y - w) * (y - w1) / grid_dt)
            pa = math.exp(-2.0 * (w + y) * (w1 + y) / grid_dt)
            u = np.random.random()
            if u < pb + pa:
                alive = False
                break
            w = w1
        if alive:
            alive_total += 1
    return alive_total


# ---------------------------------------------------------------------------
# alpha(1) walk proxy: bit-stream d=1 walks, incremental sum of L^2
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def alpha_proxy_batch(words, n_steps, n_reps, R, out):
    """out[r] = sum_x L_n^x(r)^2 / n^{3/2}; words holds n_reps rows of
    ceil(n_steps/64) Philox words, one direction bit per step."""
    W = 2 * R + 1
    counts = np.zeros(W, dtype=np.int64)
    wpr = words.shape[1]
    norm = float(n_steps) ** 1.5
    for r in range(n_reps):
        pos = R
        lo = R
        hi = R
        s = np.int64(0)
        done = 0
        ok = True
        for wi in range(wpr):
            wrd = words[r, wi]
            nb = 64 if done + 64 <= n_steps else n_steps - done
            for b in range(nb):
                if (wrd >> np.uint64(b)) & np.uint64(1):
                    pos += 1
                else:
                    pos -= 1
                if pos <= 0 or pos >= W - 1:
                    ok = False
                    break
                c = counts[pos]
                s += 2 * c + 1
                counts[pos] = c + 1
                if pos < lo:
                    lo = pos
                elif pos > hi:
                    hi = pos
            done += nb
            if not ok or done >= n_steps:
                break
        out[r] = s / norm if ok else -1.0
        for x in range(lo, hi + 1):
            counts[x] = 0
    return out


# ---------------------------------------------------------------------------
# Integer-time Brownian running max (Chung LIL sanity)
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def bm_running_max_at(seed, t_max, checkpoints):
    """max_{s<=t}|W(s)| sampled at integer times, recorded at checkpoints."""
    np.random.seed(seed)
    ncp = checkpoints.shape[0]
    out = np.zeros(ncp)
    w = 0.0
    mx = 0.0
    ic = 0
    for t in range(1, t_max + 1):
        w += np.random.normal()
        if abs(w) > mx:
            mx = abs(w)
        if ic < ncp and t == checkpoints[ic]:
            out[ic] = mx
            ic += 1
    return out


# ---------------------------------------------------------------------------
# d=1 pure-walk sum of squared local times at checkpoints (mixture samples)
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def alpha_brownian_batch(seed, n_reps, n_steps, grid_dt, h, R):
    """alpha(1) = int (binned local time)^2 dx for n_reps internally
    generated Brownian paths on [0, n_steps*grid_dt]; bins of width h over
    [-R, R]."""
    np.random.seed(seed)
    nb = int(2 * R / h) + 2
    bins = np.zeros(nb)
    out = np.zeros(n_reps)
    x0 = -R
    sdt = math.sqrt(grid_dt)
    for r in range(n_reps):
        w = 0.0
        jlo = nb
        jhi = -1
        for i in range(n_steps):
            w1 = w + np.random.normal() * sdt
            a = w
            b = w1
            if a > b:
                a, b = b, a
            if b - a < 1e-15:
                j = int(math.floor((a - x0) / h))
                if 0 <= j < nb:
                    bins[j] += grid_dt
                    if j < jlo:
                        jlo = j
                    if j > jhi:
                        jhi = j
            else:
                dens = grid_dt / (b - a)
                j0 = int(math.floor((a - x0) / h))
                j1 = int(math.floor((b - x0) / h))
                for j in range(j0, j1 + 1):
                    blo = x0 + j * h
                    bhi = blo + h
                    ov = min(b, bhi) - max(a, blo)
                    if ov > 0.0 and 0 <= j < nb:
                        bins[j] += ov * dens
                        if j < jlo:
                            jlo = j
                        if j > jhi:
                            jhi = j
            w = w1
        alpha = 0.0
        for j in range(jlo, jhi + 1):
            alpha += bins[j] * bins[j]
            bins[j] = 0.0
        out[r] = alpha / h
    return out


@njit(cache=True, nogil=True)
def walk_suml2_at(seed, n, checkpoints, R):
    """sum_x L_k^x^2 at checkpoints for one internally generated d=1 walk."""
    np.random.seed(seed)
    ncp = checkpoints.shape[0]
    out = np.zeros(ncp, dtype=np.int64)
    l0 = np.zeros(ncp, dtype=np.int64)
    W = 2 * R + 1
    counts = np.zeros(W, dtype=np.int64)
    pos = R
    s = np.int64(0)
    ic = 0
    for k in range(n):
        u = np.random.random()
        pos += 1 if u < 0.5 else -1
        if pos <= 0 or pos >= W - 1:
            return out, l0, 1
        c = counts[pos]
        s += 2 * c + 1
        counts[pos] = c + 1
        if ic < ncp and k + 1 == checkpoints[ic]:
            out[ic] = s
            l0[ic] = counts[R]
            ic += 1
    return out, l0, 0
