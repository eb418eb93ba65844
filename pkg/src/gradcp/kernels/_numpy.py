"""Pure-numpy kernel backend.

The brute scan vectorizes the inner loop per evaluation point; the hull scan
is a plain-Python port of the numba implementation (slow but exact, kept for
environments without numba and as a cross-check). ``hmax_batch`` uses the
vectorized brute scan across all draws at once.
"""

from __future__ import annotations

import numpy as np


def prefix_sums(x: np.ndarray) -> np.ndarray:
    """Kahan-compensated cumulative sums with a leading zero."""
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


def sup_scan_brute(sn: np.ndarray, pos: np.ndarray, eval_idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reference scan: max_i |sn[i] - (pos[i]/pos[j]) sn[j]| for each eval j."""
    k = eval_idx.shape[0]
    vals = np.zeros(k, dtype=np.float64)
    argi = np.ones(k, dtype=np.int64)
    for e in range(k):
        j = int(eval_idx[e])
        w = pos[1 : j + 1] / pos[j]
        av = np.abs(sn[1 : j + 1] - w * sn[j])
        best = int(np.argmax(av))
        vals[e] = av[best]
        argi[e] = best + 1
    return vals, argi


def sup_scan_hull(sn: np.ndarray, pos: np.ndarray, eval_idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hull-accelerated scan; same contract as sup_scan_brute."""
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
        # upper hull keeps clockwise turns: pop on left turn / collinear
        while nu >= 2 and (ux[nu - 1] - ux[nu - 2]) * (y - uy[nu - 2]) - (uy[nu - 1] - uy[nu - 2]) * (x - ux[nu - 2]) >= 0.0:
            nu -= 1
        ux[nu] = x
        uy[nu] = y
        ui[nu] = j
        nu += 1
        # lower hull keeps counterclockwise turns: pop on right turn / collinear
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
            # upper hull maximizes y - m*x; edge slopes decrease, peak at
            # first edge with slope <= m
            lo, hi = 0, nu - 1
            while lo < hi:
                mid = (lo + hi) // 2
                if uy[mid + 1] - uy[mid] <= m * (ux[mid + 1] - ux[mid]):
                    hi = mid
                else:
                    lo = mid + 1
            for t in range(max(0, lo - 1), min(nu, lo + 2)):
                i = int(ui[t])
                av = abs(sn[i] - (pos[i] / pj) * sj)
                if av > best or (av == best and i < besti):
                    best = av
                    besti = i
            # lower hull maximizes m*x - y; edge slopes increase, peak at
            # first edge with slope >= m
            lo, hi = 0, nl - 1
            while lo < hi:
                mid = (lo + hi) // 2
                if ly[mid + 1] - ly[mid] >= m * (lx[mid + 1] - lx[mid]):
                    hi = mid
                else:
                    lo = mid + 1
            for t in range(max(0, lo - 1), min(nl, lo + 2)):
                i = int(li[t])
                av = abs(sn[i] - (pos[i] / pj) * sj)
                if av > best or (av == best and i < besti):
                    best = av
                    besti = i
            vals[e] = best
            argi[e] = besti
            e += 1
    return vals, argi


def hmax_batch(g: np.ndarray, pos: np.ndarray) -> np.ndarray:
    """Running sup over sub-intervals of driver paths, vectorized over draws.

    Parameters
    ----------
    g : np.ndarray
        Driver paths of shape (n_draws, n_features, m+1) with g[..., 0] = 0.
    pos : np.ndarray
        Grid positions of shape (m+1,).

    Returns
    -------
    np.ndarray
        Shape (n_draws, m); entry [r, j-1] is
        max over features, i <= j' <= j of |g[r,f,i] - (pos[i]/pos[j']) g[r,f,j']|.
    """
    n_draws, n_feat, n1 = g.shape
    m = n1 - 1
    hsup = np.empty((n_draws, m), dtype=np.float64)
    for j in range(1, m + 1):
        w = pos[1 : j + 1] / pos[j]
        vals = np.abs(g[:, :, 1 : j + 1] - w[None, None, :] * g[:, :, j : j + 1])
        hsup[:, j - 1] = vals.max(axis=(1, 2))
    return np.maximum.accumulate(hsup, axis=1)
