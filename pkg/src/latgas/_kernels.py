"""JIT-compiled event kernel: exact Poisson thinning over the active nodes.

One kernel is specialized per (window length, weight table, scale) triple.
Between accepted exchanges the set of active nodes (nodes whose occupancies
differ) is constant, so candidate events form a Poisson process of constant
intensity na * kmax / scale that dominates the true total rate; thinning a
candidate at node y with probability weight(y) / kmax reproduces the exact
jump chain and holding times. kmax equals scale because every rate is at
most 1, and the single uniform draw per attempt supplies both the node index
and the acceptance threshold.

Bookkeeping kept O(1) per event: box sums S[a] = occupancies of [a, a+L+1]
(an exchange at (y, y+1) only changes the two boxes that contain exactly one
of the node sites), and an active-node list with swap-removal. Window j of
node y is the box starting at y-j minus the node sites, so its particle
count is S[y-j] - occ[y] - occ[y+1].

A configuration is frozen when no active node has positive weight. With
kmax == 1 that is simply na == 0; otherwise zero-weight stretches are caught
by a stall counter that triggers a full scan after 16 + 4*na consecutive
rejections (frozen states never change again, so detection latency only
delays the report, never corrupts output: snapshots taken meanwhile already
show the frozen state).

Time accumulates with Kahan compensation; snapshot rows record the state
just before the first event at or past each output time.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numba import njit

BUF = 4096

STATUS_DONE = 0
STATUS_BLOCKED = 1


@lru_cache(maxsize=None)
def get_kernel(L: int, weights: tuple[int, ...], scale: int):
    """Build (and cache) the thinning kernel for one rate family.

    The returned function has signature

        run(occ, out_times, out_occ, gen) -> (status, t, events, attempts, t_block)

    occ: uint8[N], modified in place, occupancies at return time;
    out_times: strictly increasing float64[T] in microscopic time units;
    out_occ: uint8[T, N], filled with pre-event snapshots;
    gen: numpy Generator (consumed; drives everything).
    """
    w = np.asarray(weights, dtype=np.int64)
    kmax = int(scale)
    Lc = int(L)
    fscale = float(scale)

    @njit(nogil=True)
    def run(occ, out_times, out_occ, gen):
        N = occ.shape[0]
        T = out_times.shape[0]

        S = np.empty(N, dtype=np.int64)
        c = 0
        for i in range(Lc + 2):
            c += occ[i % N]
        S[0] = c
        for a in range(1, N):
            c += occ[(a + Lc + 1) % N] - occ[a - 1]
            S[a] = c

        A = np.empty(N, dtype=np.int64)
        pos = np.full(N, -1, dtype=np.int64)
        na = 0
        for y in range(N):
            if occ[y] != occ[(y + 1) % N]:
                pos[y] = na
                A[na] = y
                na += 1

        t = 0.0
        tcomp = 0.0
        t_last = 0.0
        nev = 0
        natt = 0
        oi = 0
        while oi < T and out_times[oi] <= 0.0:
            for i in range(N):
                out_occ[oi, i] = occ[i]
            oi += 1
        if oi >= T:
            return (STATUS_DONE, t, nev, natt, 0.0)
        if na == 0:
            for k in range(oi, T):
                for i in range(N):
                    out_occ[k, i] = occ[i]
            return (STATUS_BLOCKED, t, nev, natt, 0.0)

        wbuf = gen.standard_exponential(BUF)
        ubuf = gen.random(BUF)
        wp = 0
        up = 0
        inv = fscale / (na * kmax)
        stall = 0

        while True:
            if wp >= BUF:
                wbuf = gen.standard_exponential(BUF)
                wp = 0
            if up >= BUF:
                ubuf = gen.random(BUF)
                up = 0
            dt = wbuf[wp] * inv
            wp += 1
            natt += 1

            y0 = dt - tcomp
            t1 = t + y0
            tcomp = (t1 - t) - y0
            t = t1

            while oi < T and out_times[oi] <= t:
                for i in range(N):
                    out_occ[oi, i] = occ[i]
                oi += 1
            if oi >= T:
                return (STATUS_DONE, t, nev, natt, 0.0)

            v = ubuf[up] * (na * kmax)
            up += 1
            idx = int(v / kmax)
            if idx >= na:
                idx = na - 1
            y = A[idx]

            if kmax > 1:
                yn = y + 1
                if yn >= N:
                    yn = 0
                nodeocc = int(occ[y]) + int(occ[yn])
                k = 0
                for j in range(Lc + 1):
                    a = y - j
                    if a < 0:
                        a += N
                    k += w[S[a] - nodeocc]
                r = v - idx * kmax
                if r >= k:
                    stall += 1
                    if stall > 16 + 4 * na:
                        tot = 0
                        for ii in range(na):
                            z = A[ii]
                            zn = z + 1
                            if zn >= N:
                                zn = 0
                            zocc = int(occ[z]) + int(occ[zn])
                            for j in range(Lc + 1):
                                a = z - j
                                if a < 0:
                                    a += N
                                tot += w[S[a] - zocc]
                        if tot == 0:
                            for kk in range(oi, T):
                                for i in range(N):
                                    out_occ[kk, i] = occ[i]
                            return (STATUS_BLOCKED, t, nev, natt, t_last)
                        stall = 0
                    continue

            # accept: exchange node (y, y+1)
            stall = 0
            yn = y + 1
            if yn >= N:
                yn = 0
            d = int(occ[yn]) - int(occ[y])
            occ[y], occ[yn] = occ[yn], occ[y]
            a1 = y - Lc - 1
            if a1 < 0:
                a1 += N
            S[a1] += d
            S[yn] -= d

            for z0 in (y - 1, y + 1):
                z = z0
                if z < 0:
                    z += N
                elif z >= N:
                    z -= N
                zn = z + 1
                if zn >= N:
                    zn = 0
                active = occ[z] != occ[zn]
                if active and pos[z] < 0:
                    pos[z] = na
                    A[na] = z
                    na += 1
                elif not active and pos[z] >= 0:
                    last = A[na - 1]
                    A[pos[z]] = last
                    pos[last] = pos[z]
                    pos[z] = -1
                    na -= 1

            nev += 1
            t_last = t
            if na == 0:
                for kk in range(oi, T):
                    for i in range(N):
                        out_occ[kk, i] = occ[i]
                return (STATUS_BLOCKED, t, nev, natt, t)
            inv = fscale / (na * kmax)

    return run


def kernel_for(model) -> "callable":
    """Kernel specialized for a ModelSpec."""
    return get_kernel(model.window_length, model.weight_table, model.scale)
