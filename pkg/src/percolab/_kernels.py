"""numba kernels for cluster growth and the heavy Monte Carlo loops.

All randomness is counter-based: the Bernoulli mark of a bond is a pure
function of (seed, canonical bond key), so realizations are independent of
exploration order and bit-reproducible.  Site sets use open addressing
with exact coordinate comparison (the 64-bit mix only picks the slot, so
hash collisions cannot corrupt a cluster).

Python-facing wrappers live in ``percolation``, ``cluster_stats`` and
``diagrams``; nothing here validates arguments.
"""

from __future__ import annotations

import numpy as np
from numba import njit, uint64

U64_1 = np.uint64(1)
_GOLD = np.uint64(0x9E3779B97F4A7C15)
_AXIS_SALT = np.uint64(0xA0761D6478BD642F)
_STREAM_BONDS = np.uint64(0x42F0E1EBA9EA3693)
_STREAM_SUBSAMPLE = np.uint64(0x9216D5D98979FB1B)
_STREAM_PAIRS = np.uint64(0x3C79AC492BA7B653)
_INV53 = 1.0 / (1 << 53)


@njit(uint64(uint64), cache=True, inline="always")
def _mix64(x):
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


@njit(cache=True, inline="always")
def _site_hash(row, d):
    h = _GOLD
    for j in range(d):
        h = _mix64(h ^ np.uint64(np.int64(row[j])))
    return h


@njit(cache=True, inline="always")
def _bond_uniform(seed_mixed, low_hash, axis):
    key = _mix64(low_hash ^ (np.uint64(axis + 1) * _AXIS_SALT))
    u = _mix64(key ^ seed_mixed)
    return (u >> np.uint64(11)) * _INV53


@njit(cache=True, inline="always")
def _keyed_uniform(stream_mixed, key):
    u = _mix64(np.uint64(key) ^ stream_mixed)
    return (u >> np.uint64(11)) * _INV53


@njit(cache=True, inline="always")
def _find_slot(coords, d, tab_idx, tab_stamp, stamp, mask, row, h):
    """Probe for row; returns (slot, idx) with idx = -1 if absent."""
    j = h & mask
    while True:
        sj = np.int64(j)
        if tab_stamp[sj] != stamp:
            return sj, np.int64(-1)
        idx = np.int64(tab_idx[sj])
        same = True
        for t in range(d):
            if coords[idx, t] != row[t]:
                same = False
                break
        if same:
            return sj, idx
        j = (j + U64_1) & mask


@njit(cache=True)
def _grow(seed, p, d, cap, coords, tab_idx, tab_stamp, stamp, mask,
          bonds, collect_bonds, stop_norm1):
    """Breadth-first lazy growth of the origin's cluster.

    Returns (size, nbonds, truncated, reached): ``reached`` is set when
    stop_norm1 > 0 and a site with l1 norm >= stop_norm1 was inserted
    (growth stops there); ``truncated`` when an insertion would have pushed
    the site count past cap.
    """
    seed_mixed = _mix64(np.uint64(seed) ^ _STREAM_BONDS)
    row = np.empty(d, dtype=np.int32)
    for j in range(d):
        row[j] = 0
    h = _site_hash(row, d)
    slot, _ = _find_slot(coords, d, tab_idx, tab_stamp, stamp, mask, row, h)
    tab_stamp[slot] = stamp
    tab_idx[slot] = 0
    for j in range(d):
        coords[0, j] = 0
    size = np.int64(1)
    nbonds = np.int64(0)
    truncated = False
    reached = False
    head = np.int64(0)
    while head < size:
        for j in range(d):
            row[j] = coords[head, j]
        cur_hash = _site_hash(row, d)
        for axis in range(d):
            c0 = row[axis]
            # minus direction: neighbour is the canonical (lower) endpoint
            row[axis] = c0 - 1
            nb_hash = _site_hash(row, d)
            if _bond_uniform(seed_mixed, nb_hash, axis) < p:
                slot, idx = _find_slot(coords, d, tab_idx, tab_stamp, stamp,
                                       mask, row, nb_hash)
                if idx < 0:
                    if size >= cap:
                        truncated = True
                        return size, nbonds, truncated, reached
                    tab_stamp[slot] = stamp
                    tab_idx[slot] = np.int32(size)
                    for t in range(d):
                        coords[size, t] = row[t]
                    idx = size
                    size += 1
                    if collect_bonds:
                        bonds[nbonds, 0] = head
                        bonds[nbonds, 1] = idx
                        nbonds += 1
                    if stop_norm1 > 0:
                        s = np.int64(0)
                        for t in range(d):
                            s += abs(np.int64(row[t]))
                        if s >= stop_norm1:
                            return size, nbonds, truncated, True
                elif collect_bonds and idx > head:
                    # record each cycle bond once, from the endpoint popped first
                    bonds[nbonds, 0] = head
                    bonds[nbonds, 1] = idx
                    nbonds += 1
            # plus direction: the current site is the canonical endpoint
            if _bond_uniform(seed_mixed, cur_hash, axis) < p:
                row[axis] = c0 + 1
                nb_hash = _site_hash(row, d)
                slot, idx = _find_slot(coords, d, tab_idx, tab_stamp, stamp,
                                       mask, row, nb_hash)
                if idx < 0:
                    if size >= cap:
                        truncated = True
                        return size, nbonds, truncated, reached
                    tab_stamp[slot] = stamp
                    tab_idx[slot] = np.int32(size)
                    for t in range(d):
                        coords[size, t] = row[t]
                    idx = size
                    size += 1
                    if collect_bonds:
                        bonds[nbonds, 0] = head
                        bonds[nbonds, 1] = idx
                        nbonds += 1
                    if stop_norm1 > 0:
                        s = np.int64(0)
                        for t in range(d):
                            s += abs(np.int64(row[t]))
                        if s >= stop_norm1:
                            return size, nbonds, truncated, True
                elif collect_bonds and idx > head:
                    bonds[nbonds, 0] = head
                    bonds[nbonds, 1] = idx
                    nbonds += 1
            row[axis] = c0
        head += 1
    return size, nbonds, truncated, reached


@njit(cache=True)
def grow_single(seed, p, d, cap, collect_bonds):
    """Grow one cluster; returns (coords[:size], bonds[:nb], truncated)."""
    m = np.int64(1)
    while m < 4 * cap + 8:
        m *= 2
    coords = np.empty((cap, d), dtype=np.int32)
    tab_idx = np.zeros(m, dtype=np.int32)
    tab_stamp = np.zeros(m, dtype=np.int32)
    bonds = np.empty((2 * d * cap + 1, 2) if collect_bonds else (1, 2),
                     dtype=np.int64)
    size, nb, trunc, _ = _grow(np.uint64(seed), p, d, cap, coords, tab_idx,
                               tab_stamp, np.int32(1), np.uint64(m - 1),
                               bonds, collect_bonds, np.int64(0))
    return coords[:size].copy(), bonds[:nb].copy(), trunc


@njit(cache=True)
def size_histogram(seed_base, nsamples, p, d, cap, nbatches, ndyad):
    """Sizes of nsamples independent clusters.

    Returns (counts[cap+1], truncated_total, batch_dyadic[nbatches, ndyad],
    batch_totals[nbatches], batch_truncated[nbatches]); dyadic bin j counts
    sizes in [2^j, 2^(j+1)).
    """
    m = np.int64(1)
    while m < 4 * cap + 8:
        m *= 2
    coords = np.empty((cap, d), dtype=np.int32)
    tab_idx = np.zeros(m, dtype=np.int32)
    tab_stamp = np.zeros(m, dtype=np.int32)
    bonds = np.empty((1, 2), dtype=np.int64)
    counts = np.zeros(cap + 1, dtype=np.int64)
    batch_dyadic = np.zeros((nbatches, ndyad), dtype=np.int64)
    batch_totals = np.zeros(nbatches, dtype=np.int64)
    batch_trunc = np.zeros(nbatches, dtype=np.int64)
    trunc_total = np.int64(0)
    mask = np.uint64(m - 1)
    for i in range(nsamples):
        stamp = np.int32(i + 1)
        seed = np.uint64(seed_base) + np.uint64(i) * _GOLD
        size, _, trunc, _ = _grow(seed, p, d, cap, coords, tab_idx, tab_stamp,
                                  stamp, mask, bonds, False, np.int64(0))
        b = i * nbatches // nsamples
        batch_totals[b] += 1
        if trunc:
            trunc_total += 1
            batch_trunc[b] += 1
        else:
            counts[size] += 1
            jbin = np.int64(0)
            s = size
            while s > 1:
                s >>= 1
                jbin += 1
            if jbin < ndyad:
                batch_dyadic[b, jbin] += 1
    return counts, trunc_total, batch_dyadic, batch_totals, batch_trunc


@njit(cache=True)
def windowed_sample(seed_base, attempt_start, p, d, lo, hi, max_attempts,
                    target_accept, sub_cap, nbatches, kappas, want_cloud,
                    want_transforms):
    """Grow clusters and keep those with size in [lo, hi].

    Per accepted cluster: a uniform random subsample of at most sub_cap
    sites (weights compensate downstream), exact per-axis sums of x_j and
    x_j^2 over *all* sites, and (optionally) per-axis Fourier sums
    sum_x exp(i kappa x_j) over all sites for each kappa in ``kappas``.

    Returns (attempts_done, accepted, attempt_ids, sizes, batches, cloud,
    cloud_len, mom1, mom2, tf_re, tf_im).
    """
    cap = hi + 1
    m = np.int64(1)
    while m < 4 * cap + 8:
        m *= 2
    coords = np.empty((cap, d), dtype=np.int32)
    tab_idx = np.zeros(m, dtype=np.int32)
    tab_stamp = np.zeros(m, dtype=np.int32)
    bonds = np.empty((1, 2), dtype=np.int64)
    mask = np.uint64(m - 1)
    G = kappas.shape[0]

    attempt_ids = np.empty(target_accept, dtype=np.int64)
    sizes = np.empty(target_accept, dtype=np.int64)
    batches = np.empty(target_accept, dtype=np.int32)
    keep = min(sub_cap, hi)
    cloud = np.empty((target_accept * keep, d) if want_cloud else (1, d),
                     dtype=np.int32)
    cloud_len = np.empty(target_accept, dtype=np.int32)
    mom1 = np.zeros((target_accept, d), dtype=np.float64)
    mom2 = np.zeros((target_accept, d), dtype=np.float64)
    tf_re = np.empty((target_accept, d, G) if want_transforms else (1, d, G),
                     dtype=np.float64)
    tf_im = np.empty((target_accept, d, G) if want_transforms else (1, d, G),
                     dtype=np.float64)

    # cos/sin lookup over the reachable coordinate range [-hi, hi]
    tab_cos = np.empty((G, 2 * hi + 1) if want_transforms else (1, 1),
                       dtype=np.float64)
    tab_sin = np.empty((G, 2 * hi + 1) if want_transforms else (1, 1),
                       dtype=np.float64)
    if want_transforms:
        for g in range(G):
            for v in range(-hi, hi + 1):
                tab_cos[g, v + hi] = np.cos(kappas[g] * v)
                tab_sin[g, v + hi] = np.sin(kappas[g] * v)

    perm = np.empty(cap, dtype=np.int64)
    accepted = np.int64(0)
    attempts = np.int64(0)
    sub_mixed = _mix64(np.uint64(seed_base) ^ _STREAM_SUBSAMPLE)
    while attempts < max_attempts and accepted < target_accept:
        i = attempt_start + attempts
        attempts += 1
        stamp = np.int32(attempts)
        seed = np.uint64(seed_base) + np.uint64(i) * _GOLD
        size, _, trunc, _ = _grow(seed, p, d, cap, coords, tab_idx, tab_stamp,
                                  stamp, mask, bonds, False, np.int64(0))
        if trunc or size < lo or size > hi:
            continue
        a = accepted
        attempt_ids[a] = i
        sizes[a] = size
        batches[a] = a * nbatches // target_accept
        for t in range(size):
            for j in range(d):
                v = coords[t, j]
                mom1[a, j] += v
                mom2[a, j] += float(v) * float(v)
        if want_transforms:
            for j in range(d):
                for g in range(G):
                    tf_re[a, j, g] = 0.0
                    tf_im[a, j, g] = 0.0
            for t in range(size):
                for j in range(d):
                    v = coords[t, j] + hi
                    for g in range(G):
                        tf_re[a, j, g] += tab_cos[g, v]
                        tf_im[a, j, g] += tab_sin[g, v]
        if want_cloud:
            nkeep = min(keep, size)
            for t in range(size):
                perm[t] = t
            if nkeep < size:
                # partial Fisher-Yates keyed by (cluster seed, position)
                for t in range(nkeep):
                    u = _keyed_uniform(sub_mixed,
                                       seed + np.uint64(t) * _GOLD)
                    pick = t + np.int64(u * (size - t))
                    if pick >= size:
                        pick = size - 1
                    tmp = perm[t]
                    perm[t] = perm[pick]
                    perm[pick] = tmp
            base = a * keep
            for t in range(nkeep):
                src = perm[t]
                for j in range(d):
                    cloud[base + t, j] = coords[src, j]
            cloud_len[a] = nkeep
        else:
            cloud_len[a] = 0
        accepted += 1
    return (attempts, accepted, attempt_ids[:accepted], sizes[:accepted],
            batches[:accepted],
            cloud[:accepted * keep] if want_cloud else cloud[:0],
            cloud_len[:accepted], mom1[:accepted], mom2[:accepted],
            tf_re[:accepted] if want_transforms else tf_re[:0],
            tf_im[:accepted] if want_transforms else tf_im[:0])


@njit(cache=True)
def windowed_pairs(seed_base, attempt_ids, p, d, hi, pairs_per_cluster):
    """Re-grow the accepted clusters and sample site pairs uniformly (with
    replacement) from the full site set of each.

    pairs_per_cluster[a] pairs are drawn from cluster a; returns
    (pairs[(N), 2d] int32, owner[N] int64).
    """
    cap = hi + 1
    m = np.int64(1)
    while m < 4 * cap + 8:
        m *= 2
    coords = np.empty((cap, d), dtype=np.int32)
    tab_idx = np.zeros(m, dtype=np.int32)
    tab_stamp = np.zeros(m, dtype=np.int32)
    bonds = np.empty((1, 2), dtype=np.int64)
    mask = np.uint64(m - 1)
    nacc = attempt_ids.shape[0]
    total = np.int64(0)
    for a in range(nacc):
        total += pairs_per_cluster[a]
    out = np.empty((total, 2 * d), dtype=np.int32)
    owner = np.empty(total, dtype=np.int64)
    pmix = _mix64(np.uint64(seed_base) ^ _STREAM_PAIRS)
    pos = np.int64(0)
    for a in range(nacc):
        stamp = np.int32(a + 1)
        seed = np.uint64(seed_base) + np.uint64(attempt_ids[a]) * _GOLD
        size, _, _, _ = _grow(seed, p, d, cap, coords, tab_idx, tab_stamp,
                              stamp, mask, bonds, False, np.int64(0))
        for t in range(pairs_per_cluster[a]):
            key = np.uint64(a) * np.uint64(0x100000001B3) + np.uint64(t)
            u1 = _keyed_uniform(pmix, key)
            u2 = _keyed_uniform(pmix, key ^ np.uint64(0x5DEECE66D))
            i1 = np.int64(u1 * size)
            i2 = np.int64(u2 * size)
            if i1 >= size:
                i1 = size - 1
            if i2 >= size:
                i2 = size - 1
            for j in range(d):
                out[pos, j] = coords[i1, j]
                out[pos, d + j] = coords[i2, j]
            owner[pos] = a
            pos += 1
    return out, owner


@njit(cache=True)
def _grow_reach(seed, p, d, radius, cap, coords, tab_idx, tab_stamp, stamp,
                mask, heap_idx, heap_key):
    """Does the origin's cluster contain a site with l1 norm >= radius?

    Exploration is greedy-outward (max-heap on the l1 norm of the frontier)
    rather than breadth-first; the realization is a pure function of the
    keyed RNG, so the reached/not indicator is exploration-order-invariant
    and the greedy order just finds an exit fast at supercritical p.
    Returns (size, truncated, reached).
    """
    seed_mixed = _mix64(np.uint64(seed) ^ _STREAM_BONDS)
    row = np.empty(d, dtype=np.int32)
    for j in range(d):
        row[j] = 0
    h = _site_hash(row, d)
    slot, _ = _find_slot(coords, d, tab_idx, tab_stamp, stamp, mask, row, h)
    tab_stamp[slot] = stamp
    tab_idx[slot] = 0
    for j in range(d):
        coords[0, j] = 0
    size = np.int64(1)
    heap_n = np.int64(1)
    heap_idx[0] = 0
    heap_key[0] = 0
    while heap_n > 0:
        # pop the frontier site with the largest l1 norm
        cur = heap_idx[0]
        heap_n -= 1
        heap_idx[0] = heap_idx[heap_n]
        heap_key[0] = heap_key[heap_n]
        pos = np.int64(0)
        while True:
            l = 2 * pos + 1
            r_ = l + 1
            best = pos
            if l < heap_n and heap_key[l] > heap_key[best]:
                best = l
            if r_ < heap_n and heap_key[r_] > heap_key[best]:
                best = r_
            if best == pos:
                break
            heap_key[pos], heap_key[best] = heap_key[best], heap_key[pos]
            heap_idx[pos], heap_idx[best] = heap_idx[best], heap_idx[pos]
            pos = best
        for j in range(d):
            row[j] = coords[cur, j]
        cur_hash = _site_hash(row, d)
        for axis in range(d):
            c0 = row[axis]
            for step in (-1, 1):
                row[axis] = c0 + step
                if step == -1:
                    nb_hash = _site_hash(row, d)
                    low_hash = nb_hash
                else:
                    nb_hash = _site_hash(row, d)
                    low_hash = cur_hash
                if _bond_uniform(seed_mixed, low_hash, axis) < p:
                    slot, idx = _find_slot(coords, d, tab_idx, tab_stamp,
                                           stamp, mask, row, nb_hash)
                    if idx < 0:
                        if size >= cap:
                            return size, True, False
                        tab_stamp[slot] = stamp
                        tab_idx[slot] = np.int32(size)
                        nrm = np.int64(0)
                        for t in range(d):
                            coords[size, t] = row[t]
                            nrm += abs(np.int64(row[t]))
                        if nrm >= radius:
                            return size + 1, False, True
                        # sift up
                        pos = heap_n
                        heap_idx[pos] = size
                        heap_key[pos] = nrm
                        heap_n += 1
                        while pos > 0:
                            par = (pos - 1) // 2
                            if heap_key[par] >= heap_key[pos]:
                                break
                            heap_key[pos], heap_key[par] = heap_key[par], heap_key[pos]
                            heap_idx[pos], heap_idx[par] = heap_idx[par], heap_idx[pos]
                            pos = par
                        size += 1
            row[axis] = c0
    return size, False, False


@njit(cache=True)
def reach_events(seed_base, sample_start, nsamples, p, d, radius, cap):
    """Count samples whose cluster reaches l1 norm >= radius.

    A sample whose growth hits the site cap before reaching is counted as
    reached (see estimate_pc docs).  Returns (reached, capped, explored).
    """
    m = np.int64(1)
    while m < 4 * cap + 8:
        m *= 2
    coords = np.empty((cap, d), dtype=np.int32)
    tab_idx = np.zeros(m, dtype=np.int32)
    tab_stamp = np.zeros(m, dtype=np.int32)
    heap_idx = np.empty(cap, dtype=np.int64)
    heap_key = np.empty(cap, dtype=np.int64)
    mask = np.uint64(m - 1)
    reached_n = np.int64(0)
    capped_n = np.int64(0)
    explored = np.int64(0)
    for i in range(nsamples):
        stamp = np.int32(i + 1)
        seed = np.uint64(seed_base) + np.uint64(sample_start + i) * _GOLD
        size, trunc, reached = _grow_reach(seed, p, d, radius, cap, coords,
                                           tab_idx, tab_stamp, stamp, mask,
                                           heap_idx, heap_key)
        explored += size
        if reached:
            reached_n += 1
        elif trunc:
            capped_n += 1
            reached_n += 1
    return reached_n, capped_n, explored


@njit(cache=True)
def triangle_sum(seed_base, ntriples, p, d, cap, pair_budget, nbatches):
    """Triangle-diagram estimator from triples of independent clusters.

    For each triple (A, B, C): count pairs (x, u) in A x B with x + u in C;
    if |A||B| exceeds pair_budget, pairs are subsampled with replacement
    and reweighted.  Triples with a truncated cluster are discarded.
    Returns (batch_sums, batch_counts, discarded).
    """
    m = np.int64(1)
    while m < 4 * cap + 8:
        m *= 2
    ca = np.empty((cap, d), dtype=np.int32)
    cb = np.empty((cap, d), dtype=np.int32)
    cc = np.empty((cap, d), dtype=np.int32)
    tab_idx = np.zeros(m, dtype=np.int32)
    tab_stamp = np.zeros(m, dtype=np.int32)
    bonds = np.empty((1, 2), dtype=np.int64)
    mask = np.uint64(m - 1)
    row = np.empty(d, dtype=np.int32)
    batch_sums = np.zeros(nbatches, dtype=np.float64)
    batch_counts = np.zeros(nbatches, dtype=np.int64)
    discarded = np.int64(0)
    pmix = _mix64(np.uint64(seed_base) ^ _STREAM_PAIRS)
    stamp = np.int32(0)
    for i in range(ntriples):
        seed = np.uint64(seed_base) + np.uint64(3 * i) * _GOLD
        stamp += 1
        sa, _, ta, _ = _grow(seed, p, d, cap, ca, tab_idx, tab_stamp, stamp,
                             mask, bonds, False, np.int64(0))
        stamp += 1
        sb, _, tb, _ = _grow(seed + _GOLD, p, d, cap, cb, tab_idx, tab_stamp,
                             stamp, mask, bonds, False, np.int64(0))
        # C grown last so its table generation stays live for the lookups
        stamp += 1
        sc, _, tc, _ = _grow(seed + _GOLD + _GOLD, p, d, cap, cc, tab_idx,
                             tab_stamp, stamp, mask, bonds, False, np.int64(0))
        if ta or tb or tc:
            discarded += 1
            continue
        npairs = sa * sb
        count = 0.0
        if npairs <= pair_budget:
            for ia in range(sa):
                for ib in range(sb):
                    for j in range(d):
                        row[j] = ca[ia, j] + cb[ib, j]
                    h = _site_hash(row, d)
                    _, idx = _find_slot(cc, d, tab_idx, tab_stamp, stamp,
                                        mask, row, h)
                    if idx >= 0:
                        count += 1.0
        else:
            hits = 0
            for t in range(pair_budget):
                key = np.uint64(i) * np.uint64(0x100000001B3) + np.uint64(t)
                u1 = _keyed_uniform(pmix, key)
                u2 = _keyed_uniform(pmix, key ^ np.uint64(0x5DEECE66D))
                ia = np.int64(u1 * sa)
                ib = np.int64(u2 * sb)
                if ia >= sa:
                    ia = sa - 1
                if ib >= sb:
                    ib = sb - 1
                for j in range(d):
                    row[j] = ca[ia, j] + cb[ib, j]
                h = _site_hash(row, d)
                _, idx = _find_slot(cc, d, tab_idx, tab_stamp, stamp, mask,
                                    row, h)
                if idx >= 0:
                    hits += 1
            count = hits * (float(npairs) / pair_budget)
        b = i * nbatches // ntriples
        batch_sums[b] += count
        batch_counts[b] += 1
    return batch_sums, batch_counts, discarded


@njit(cache=True)
def gw_progeny(seed_base, ntrees, cap, kind, m_par, q_par):
    """Total-progeny sizes of Galton-Watson trees (kind 0: binomial(m, q),
    kind 1: Poisson(q)).  Sizes exceeding cap are reported as cap + 1."""
    sizes = np.empty(ntrees, dtype=np.int64)
    for i in range(ntrees):
        smix = _mix64((np.uint64(seed_base) + np.uint64(i) * _GOLD)
                      ^ _STREAM_PAIRS)
        alive = np.int64(1)
        total = np.int64(1)
        step = np.uint64(0)
        while alive > 0 and total <= cap:
            if kind == 0:
                k = np.int64(0)
                for _ in range(m_par):
                    step += _GOLD
                    if _keyed_uniform(smix, step) < q_par:
                        k += 1
            else:
                # Knuth product method, fine for mean around 1
                k = np.int64(0)
                prod = 1.0
                thresh = np.exp(-q_par)
                while True:
                    step += _GOLD
                    prod *= _keyed_uniform(smix, step)
                    if prod <= thresh:
                        break
                    k += 1
            alive += k - 1
            total += k
        sizes[i] = total if (alive == 0 and total <= cap) else cap + 1
    return sizes


@njit(cache=True)
def cloud_profiles(points, owner, nacc, kappas):
    """Per-cluster axis-averaged cosine profiles of a point cloud.

    points: (N, d) float positions, grouped by owner (nondecreasing);
    returns (nacc, K) with row a = mean over the cluster's points and axes
    of cos(kappa * x_j).
    """
    n, d = points.shape
    K = kappas.shape[0]
    out = np.zeros((nacc, K))
    cnt = np.zeros(nacc, dtype=np.int64)
    for t in range(n):
        a = owner[t]
        cnt[a] += 1
        for j in range(d):
            v = points[t, j]
            for g in range(K):
                out[a, g] += np.cos(kappas[g] * v)
    for a in range(nacc):
        if cnt[a] > 0:
            out[a] /= cnt[a] * d
    return out
