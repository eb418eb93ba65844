"""Numba kernel backend: @njit versions of the hot scans.

fastmath stays off everywhere: the exact-zero identity on constant series and
bitwise agreement with the numpy brute scan both rely on strict IEEE ordering.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

_OPTS = {"cache": True, "nogil": True}


@njit(**_OPTS)
def prefix_sums(x):
    n = x.shape[0]
    out = np.empty(n + 1, dtype=np.float64)
    out[0] = 0.0
    s = 0.0
    c = 0.0
    for t in range(n):
        y = x[t] - c
        tot = s + y
        c = (tot - s) - y
        s = tot
        out[t + 1] = s
    return out


@njit(**_OPTS)
def sup_scan_brute(sn, pos, eval_idx):
    k = eval_idx.shape[0]
    vals = np.zeros(k, dtype=np.float64)
    argi = np.ones(k, dtype=np.int64)
    for e in range(k):
        j = eval_idx[e]
        pj = pos[j]
        sj = sn[j]
        best = -1.0
        besti = 1
        for i in range(1, j + 1):
            v = sn[i] - (pos[i] / pj) * sj
            av = abs(v)
            if av > best:
                best = av
                besti = i
        vals[e] = best
        argi[e] = besti
    return vals, argi


@njit(**_OPTS)
def sup_scan_hull(sn, pos, eval_idx):
    n = sn.shape[0] - 1
    k = eval_idx.shape[0]
    vals = np.zeros(k, dtype=np.float64)
    argi = np.ones(k, dtype=np.int64)
    ux = np.empty(n, dtype=np.float64)
    uy = np.empty(n, dtype=np.float64)
    ui = np.empty(n, dtype=np.int64)
    lx = np.empty(n, dtype=np.float64)
    ly = np.empty(n, dtype=np.float64)
    li = np.empty(n, dtype=np.int64)
    nu = 0
    nl = 0
    e = 0
    for j in range(1, n + 1):
        x = pos[j]
        y = sn[j]
        while nu >= 2 and (ux[nu - 1] - ux[nu - 2]) * (y - uy[nu - 2]) - (uy[nu - 1] - uy[nu - 2]) * (x - ux[nu - 2]) >= 0.0:
            nu -= 1
        ux[nu] = x
        uy[nu] = y
        ui[nu] = j
        nu += 1
        while nl >= 2 and (lx[nl - 1] - lx[nl - 2]) * (y - ly[nl - 2]) - (ly[nl - 1] - ly[nl - 2]) * (x - lx[nl - 2]) <= 0.0:
            nl -= 1
        lx[nl] = x
        ly[nl] = y
        li[nl] = j
        nl += 1
        if e < k and eval_idx[e] == j:
            pj = pos[j]
            sj = sn[j]
            m = sj / pj
            best = -1.0
            besti = j
            lo = 0
            hi = nu - 1
            while lo < hi:
                mid = (lo + hi) // 2
                if uy[mid + 1] - uy[mid] <= m * (ux[mid + 1] - ux[mid]):
                    hi = mid
                else:
                    lo = mid + 1
            t0 = lo - 1
            if t0 < 0:
                t0 = 0
            t1 = lo + 2
            if t1 > nu:
                t1 = nu
            for t in range(t0, t1):
                i = ui[t]
                av = abs(sn[i] - (pos[i] / pj) * sj)
                if av > best or (av == best and i < besti):
                    best = av
                    besti = i
            lo = 0
            hi = nl - 1
            while lo < hi:
                mid = (lo + hi) // 2
                if ly[mid + 1] - ly[mid] >= m * (lx[mid + 1] - lx[mid]):
                    hi = mid
                else:
                    lo = mid + 1
            t0 = lo - 1
            if t0 < 0:
                t0 = 0
            t1 = lo + 2
            if t1 > nl:
                t1 = nl
            for t in range(t0, t1):
                i = li[t]
                av = abs(sn[i] - (pos[i] / pj) * sj)
                if av > best or (av == best and i < besti):
                    best = av
                    besti = i
            vals[e] = best
            argi[e] = besti
            e += 1
    return vals, argi


@njit(cache=True, nogil=True, parallel=True)
def hmax_batch(g, pos):
    n_draws, n_feat, n1 = g.shape
    m = n1 - 1
    out = np.empty((n_draws, m), dtype=np.float64)
    eval_idx = np.arange(1, m + 1, dtype=np.int64)
    for r in prange(n_draws):
        cur = np.zeros(m, dtype=np.float64)
        for f in range(n_feat):
            vals, _ = sup_scan_hull(g[r, f], pos, eval_idx)
            for j in range(m):
                if vals[j] > cur[j]:
                    cur[j] = vals[j]
        run = 0.0
        for j in range(m):
            if cur[j] > run:
                run = cur[j]
            out[r, j] = run
    return out
