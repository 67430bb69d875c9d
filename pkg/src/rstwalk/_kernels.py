"""Compiled inner loops.

Every kernel takes a ``numpy.random.Generator`` and draws from it directly, so
results are reproducible from the caller's seed and interleave correctly with
draws made from Python.
"""

import math

import numpy as np
from numba import njit

MAX_BATCHES = 20
OVERSAMPLE = 3.0


@njit(cache=True)
def oversample_size(k):
    return int(math.ceil(OVERSAMPLE * k * math.log(k + 2.0)))


@njit(cache=True)
def _build_adjacency(n, cu, cv, cw):
    deg = np.zeros(n + 1, np.int64)
    for c in range(cu.size):
        deg[cu[c] + 1] += 1
        deg[cv[c] + 1] += 1
    start = np.cumsum(deg)
    fill = start[:-1].copy()
    nbr_copy = np.empty(2 * cu.size, np.int64)
    nbr_cum = np.empty(2 * cu.size)
    for c in range(cu.size):
        a = cu[c]
        b = cv[c]
        nbr_copy[fill[a]] = c
        fill[a] += 1
        nbr_copy[fill[b]] = c
        fill[b] += 1
    for x in range(n):
        acc = 0.0
        for i in range(start[x], start[x + 1]):
            acc += cw[nbr_copy[i]]
            nbr_cum[i] = acc
    return start, nbr_copy, nbr_cum


@njit(cache=True)
def _step(x, start, nbr_copy, nbr_cum, rng):
    lo = start[x]
    hi = start[x + 1] - 1
    r = rng.random() * nbr_cum[hi]
    # first position whose cumulative weight exceeds r
    while lo < hi:
        mid = (lo + hi) // 2
        if nbr_cum[mid] > r:
            hi = mid
        else:
            lo = mid + 1
    return nbr_copy[lo]


@njit(cache=True)
def wilson(n, cu, cv, cw, rng):
    """Wilson's loop-erased random walk rooted at vertex 0.

    Copies are the edges of a multigraph; a walk at ``x`` leaves through an
    incident copy chosen proportionally to its weight. Returns the indices of
    the ``n - 1`` copies in the sampled tree. Copies must have positive weight
    and the multigraph must be connected.
    """
    out = np.empty(n - 1, np.int64)
    if n == 1:
        return out
    start, nbr_copy, nbr_cum = _build_adjacency(n, cu, cv, cw)
    in_tree = np.zeros(n, np.bool_)
    nxt = np.full(n, -1, np.int64)
    in_tree[0] = True
    for i in range(1, n):
        x = i
        while not in_tree[x]:
            c = _step(x, start, nbr_copy, nbr_cum, rng)
            nxt[x] = c
            x = cv[c] if cu[c] == x else cu[c]
        x = i
        while not in_tree[x]:
            in_tree[x] = True
            c = nxt[x]
            x = cv[c] if cu[c] == x else cu[c]
    j = 0
    for x in range(1, n):
        out[j] = nxt[x]
        j += 1
    return out


@njit(cache=True)
def wilson_batch(n, cu, cv, cw, count, rng):
    out = np.empty((count, n - 1), np.int64)
    for s in range(count):
        out[s] = np.sort(wilson(n, cu, cv, cw, rng))
    return out


@njit(cache=True)
def aldous_broder(n, cu, cv, cw, rng):
    """First-entrance edges of a weighted random walk started at vertex 0."""
    out = np.empty(n - 1, np.int64)
    if n == 1:
        return out
    start, nbr_copy, nbr_cum = _build_adjacency(n, cu, cv, cw)
    seen = np.zeros(n, np.bool_)
    seen[0] = True
    left = n - 1
    x = 0
    while left > 0:
        c = _step(x, start, nbr_copy, nbr_cum, rng)
        y = cv[c] if cu[c] == x else cu[c]
        if not seen[y]:
            seen[y] = True
            left -= 1
            out[left] = c
        x = y
    return out


@njit(cache=True)
def aldous_broder_batch(n, cu, cv, cw, count, rng):
    out = np.empty((count, n - 1), np.int64)
    for s in range(count):
        out[s] = np.sort(aldous_broder(n, cu, cv, cw, rng))
    return out


@njit(cache=True)
def draw_copies(q_eff, cum_eff, count, rng, edges, slots):
    """``count`` independent uniform draws over the copies of ``q_eff``.

    Two stages: an edge with probability proportional to its copy count, then
    a slot uniformly in ``[0, q_eff[e])``.
    """
    total = cum_eff[-1]
    for i in range(count):
        r = int(rng.random() * total)
        e = np.searchsorted(cum_eff, r, side="right")
        edges[i] = e
        slots[i] = int(rng.random() * q_eff[e])


@njit(cache=True)
def _slot_to_copy(e, slot, q, qoff, occ):
    # slot-th unoccupied copy of edge e
    base = qoff[e]
    for j in range(q[e]):
        if not occ[base + j]:
            if slot == 0:
                return base + j
            slot -= 1
    return -1


@njit(cache=True)
def subset_sample(q, qoff, occ, occ_count, k, rng, seen, stamp, out):
    """Uniform ``k``-subset of unoccupied copies by oversampling with replacement.

    Draws ``ceil(3 k ln(k + 2))`` copies with replacement and keeps the first
    ``k`` distinct ones; up to ``MAX_BATCHES`` fresh batches. ``seen`` is a
    scratch array stamped with ``stamp``. Returns ``(batches_used, draws,
    next_stamp)``; ``batches_used`` is 0 on failure.
    """
    q_eff = q - occ_count
    cum_eff = np.cumsum(q_eff)
    total = cum_eff[-1]
    kp = oversample_size(k)
    draws = 0
    for batch in range(1, MAX_BATCHES + 1):
        stamp += 1
        got = 0
        # draws past the k-th distinct one cannot change the output, so stop there
        for i in range(kp):
            draws += 1
            e = np.searchsorted(cum_eff, int(rng.random() * total), side="right")
            gid = _slot_to_copy(e, int(rng.random() * q_eff[e]), q, qoff, occ)
            if seen[gid] != stamp:
                seen[gid] = stamp
                out[got] = gid
                got += 1
                if got == k:
                    return batch, draws, stamp
    return 0, draws, stamp


@njit(cache=True)
def walk_batch(n, cu_g, cv_g, cw_g, copy_edge, q, qoff, init, k, snaps, count, rng):
    """Run ``count`` independent down-up walks from the labelled tree ``init``.

    ``*_g`` arrays describe every copy of the isotropic multigraph; ``snaps``
    is a sorted array of iteration counts at which the current tree is
    recorded (as sorted view-edge indices). Returns ``(trees, draws, status)``
    with ``status`` 0 on success and 1 if a subset draw ran out of batches.
    """
    n_snap = snaps.size
    M = snaps[-1]
    trees = np.empty((count, n_snap, n - 1), np.int64)
    mp = cu_g.size
    occ = np.zeros(mp, np.bool_)
    occ_count = np.zeros(q.size, np.int64)
    seen = np.zeros(mp, np.int64)
    stamp = 0
    sample = np.empty(max(k, 1), np.int64)
    tree = np.empty(n - 1, np.int64)
    h = n - 1 + k
    hu = np.empty(h, np.int64)
    hv = np.empty(h, np.int64)
    hw = np.empty(h)
    hg = np.empty(h, np.int64)
    draws = 0
    for s in range(count):
        occ[:] = False
        occ_count[:] = 0
        for i in range(n - 1):
            tree[i] = init[i]
            occ[init[i]] = True
            occ_count[copy_edge[init[i]]] += 1
        si = 0
        while si < n_snap and snaps[si] == 0:
            trees[s, si] = np.sort(copy_edge[tree])
            si += 1
        for t in range(1, M + 1):
            if k > 0:
                ok, d, stamp = subset_sample(q, qoff, occ, occ_count, k, rng, seen, stamp, sample)
                draws += d
                if ok == 0:
                    return trees, draws, 1
            for i in range(n - 1):
                hg[i] = tree[i]
            for i in range(k):
                hg[n - 1 + i] = sample[i]
            for i in range(h):
                g = hg[i]
                hu[i] = cu_g[g]
                hv[i] = cv_g[g]
                hw[i] = cw_g[g]
            local = wilson(n, hu, hv, hw, rng)
            for i in range(n - 1):
                g = tree[i]
                occ[g] = False
                occ_count[copy_edge[g]] -= 1
            for i in range(n - 1):
                g = hg[local[i]]
                tree[i] = g
                occ[g] = True
                occ_count[copy_edge[g]] += 1
            while si < n_snap and snaps[si] == t:
                trees[s, si] = np.sort(copy_edge[tree])
                si += 1
    return trees, draws, 0
