"""Inner loops of the co-voting analysis.

Every kernel has a numba implementation (``*_nb``) and a numpy/scipy twin
(``*_np``). The public wrappers pick one through ``backend``; the default
follows :mod:`daogov._accel`. Both twins return identical results for the
same inputs, including the rewiring kernel, whose random draws are made by
the caller.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from .._accel import njit, resolve_backend

# --- thresholded co-occurrence counting ------------------------------------


@njit
def _partners_nb(u, u_ptr, u_props, p_ptr, p_users, acc, touched):
    # scatter co-vote counts of u with every partner v > u; returns #touched
    nt = 0
    for k in range(u_ptr[u], u_ptr[u + 1]):
        p = u_props[k]
        lo = p_ptr[p]
        hi = p_ptr[p + 1]
        # voters are sorted; only count partners v > u
        start = lo + np.searchsorted(p_users[lo:hi], u + 1)
        for j in range(start, hi):
            v = p_users[j]
            if acc[v] == 0:
                touched[nt] = v
                nt += 1
            acc[v] += 1
    return nt


@njit
def _project_nb(n_users, u_ptr, u_props, p_ptr, p_users, threshold):
    # two passes (count, then fill) beat growing the output inside the loop
    acc = np.zeros(n_users, dtype=np.int64)
    touched = np.empty(n_users, dtype=np.int64)
    counts = np.zeros(n_users, dtype=np.int64)
    for u in range(n_users):
        nt = _partners_nb(u, u_ptr, u_props, p_ptr, p_users, acc, touched)
        c = 0
        for i in range(nt):
            v = touched[i]
            if acc[v] > threshold:
                c += 1
            acc[v] = 0
        counts[u] = c
    m = counts.sum()
    src = np.empty(m, dtype=np.int64)
    dst = np.empty(m, dtype=np.int64)
    wts = np.empty(m, dtype=np.int64)
    pos = 0
    for u in range(n_users):
        if counts[u] == 0:
            continue
        nt = _partners_nb(u, u_ptr, u_props, p_ptr, p_users, acc, touched)
        for i in range(nt):
            v = touched[i]
            c = acc[v]
            acc[v] = 0
            if c > threshold:
                src[pos] = u
                dst[pos] = v
                wts[pos] = c
                pos += 1
    return src, dst, wts


def _project_np(n_users, u_ptr, u_props, p_ptr, p_users, threshold):
    src, dst, wts = [], [], []
    for u in range(n_users):
        chunks = []
        for p in u_props[u_ptr[u]:u_ptr[u + 1]]:
            voters = p_users[p_ptr[p]:p_ptr[p + 1]]
            chunks.append(voters[np.searchsorted(voters, u + 1):])
        if not chunks:
            continue
        partners, counts = np.unique(np.concatenate(chunks), return_counts=True)
        keep = counts > threshold
        if keep.any():
            src.append(np.full(int(keep.sum()), u, dtype=np.int64))
            dst.append(partners[keep].astype(np.int64))
            wts.append(counts[keep].astype(np.int64))
    if not src:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty.copy(), empty.copy()
    return np.concatenate(src), np.concatenate(dst), np.concatenate(wts)


def csr_from_pairs(rows, cols, n_rows):
    """CSR adjacency (indptr, indices) with column indices sorted within rows."""
    order = np.lexsort((cols, rows))
    indptr = np.zeros(n_rows + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n_rows), out=indptr[1:])
    return indptr, np.ascontiguousarray(cols[order], dtype=np.int64)


def count_copairs(user_idx, prop_idx, n_users, n_props, threshold, backend=None):
    """Pairs of users sharing more than ``threshold`` proposals.

    ``user_idx``/``prop_idx`` list distinct (user, proposal) incidences.
    Returns (src, dst, weight) with src < dst, sorted lexicographically.
    The full unthresholded projection is never built: each row of the
    co-occurrence matrix is accumulated, filtered and discarded in turn.
    """
    user_idx = np.asarray(user_idx, dtype=np.int64)
    prop_idx = np.asarray(prop_idx, dtype=np.int64)
    u_ptr, u_props = csr_from_pairs(user_idx, prop_idx, n_users)
    p_ptr, p_users = csr_from_pairs(prop_idx, user_idx, n_props)
    fn = _project_nb if resolve_backend(backend) == "numba" else _project_np
    src, dst, w = fn(n_users, u_ptr, u_props, p_ptr, p_users, int(threshold))
    order = np.lexsort((dst, src))
    return src[order], dst[order], w[order]


# --- breadth-first path statistics -----------------------------------------


@njit
def _bfs_stats_nb(n, indptr, indices, sources):
    dist = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    total = 0
    pairs = 0
    diameter = 0
    for s in sources:
        dist[s] = 0
        queue[0] = s
        head = 0
        tail = 1
        while head < tail:
            x = queue[head]
            head += 1
            dx = dist[x]
            for k in range(indptr[x], indptr[x + 1]):
                y = indices[k]
                if dist[y] < 0:
                    dist[y] = dx + 1
                    queue[tail] = y
                    tail += 1
        for i in range(1, tail):
            d = dist[queue[i]]
            total += d
            if d > diameter:
                diameter = d
        pairs += tail - 1
        for i in range(tail):
            dist[queue[i]] = -1
    return total, pairs, diameter


def _bfs_stats_np(n, indptr, indices, sources, chunk=256):
    adj = sp.csr_matrix((np.ones(len(indices), dtype=np.int8), indices, indptr), shape=(n, n))
    total = pairs = diameter = 0
    for i in range(0, len(sources), chunk):
        d = csgraph.shortest_path(adj, method="D", unweighted=True, directed=False, indices=sources[i:i + chunk])
        finite = np.isfinite(d) & (d > 0)
        vals = d[finite]
        total += int(vals.sum())
        pairs += int(finite.sum())
        if vals.size:
            diameter = max(diameter, int(vals.max()))
    return total, pairs, diameter


def bfs_path_stats(indptr, indices, sources, backend=None):
    """(sum of distances, number of reachable ordered pairs, max distance) over BFS from ``sources``."""
    n = len(indptr) - 1
    sources = np.asarray(sources, dtype=np.int64)
    fn = _bfs_stats_nb if resolve_backend(backend) == "numba" else _bfs_stats_np
    total, pairs, diameter = fn(n, indptr, indices, sources)
    return int(total), int(pairs), int(diameter)


# --- triangles / local clustering ------------------------------------------


@njit
def _triangles_nb(n, indptr, indices):
    mark = np.full(n, -1, dtype=np.int64)
    tri = np.zeros(n, dtype=np.int64)
    for u in range(n):
        for k in range(indptr[u], indptr[u + 1]):
            mark[indices[k]] = u
        t = 0
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            for j in range(indptr[v], indptr[v + 1]):
                if mark[indices[j]] == u:
                    t += 1
        tri[u] = t // 2
    return tri


def _triangles_np(n, indptr, indices):
    a = sp.csr_matrix((np.ones(len(indices), dtype=np.int64), indices, indptr), shape=(n, n))
    return np.asarray((a @ a).multiply(a).sum(axis=1)).ravel().astype(np.int64) // 2


def triangles(indptr, indices, backend=None):
    """Triangles through each node of a simple undirected graph."""
    n = len(indptr) - 1
    fn = _triangles_nb if resolve_backend(backend) == "numba" else _triangles_np
    return fn(n, indptr, indices)


def local_clustering(indptr, indices, backend=None):
    deg = np.diff(indptr)
    tri = triangles(indptr, indices, backend)
    denom = deg * (deg - 1)
    out = np.zeros(len(deg), dtype=np.float64)
    ok = denom > 0
    out[ok] = 2.0 * tri[ok] / denom[ok]
    return out


# --- k-core peeling ---------------------------------------------------------


@njit
def _core_nb(n, indptr, indices):
    # bucket peeling in O(m)
    deg = np.empty(n, dtype=np.int64)
    maxd = 0
    for v in range(n):
        deg[v] = indptr[v + 1] - indptr[v]
        if deg[v] > maxd:
            maxd = deg[v]
    bin_ = np.zeros(maxd + 2, dtype=np.int64)
    for v in range(n):
        bin_[deg[v]] += 1
    start = 0
    for d in range(maxd + 1):
        num = bin_[d]
        bin_[d] = start
        start += num
    pos = np.empty(n, dtype=np.int64)
    vert = np.empty(n, dtype=np.int64)
    for v in range(n):
        pos[v] = bin_[deg[v]]
        vert[pos[v]] = v
        bin_[deg[v]] += 1
    for d in range(maxd, 0, -1):
        bin_[d] = bin_[d - 1]
    bin_[0] = 0
    for i in range(n):
        v = vert[i]
        for k in range(indptr[v], indptr[v + 1]):
            u = indices[k]
            if deg[u] > deg[v]:
                du = deg[u]
                pu = pos[u]
                pw = bin_[du]
                w = vert[pw]
                if u != w:
                    pos[u] = pw
                    vert[pu] = w
                    pos[w] = pu
                    vert[pw] = u
                bin_[du] += 1
                deg[u] -= 1
    return deg


def _core_np(n, indptr, indices):
    rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))
    deg = np.diff(indptr).astype(np.int64)
    alive = np.ones(n, dtype=bool)
    core = np.zeros(n, dtype=np.int64)
    k = 0
    while alive.any():
        k = max(k, int(deg[alive].min()))
        while True:
            drop = alive & (deg <= k)
            if not drop.any():
                break
            core[drop] = k
            alive[drop] = False
            hit = drop[rows] & alive[indices]
            deg -= np.bincount(indices[hit], minlength=n)
    return core


def core_numbers(indptr, indices, backend=None):
    """Unweighted k-core index of every node."""
    n = len(indptr) - 1
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    fn = _core_nb if resolve_backend(backend) == "numba" else _core_np
    return fn(n, indptr, indices)


# --- degree-preserving rewiring --------------------------------------------


_EMPTY = -1


@njit
def _hslot(key, mask):
    # Fibonacci hashing; keys are non-negative edge codes
    return np.int64((np.uint64(key) * np.uint64(11400714819323198485)) >> np.uint64(20)) & mask


@njit
def _hfind(table, key, mask):
    i = _hslot(key, mask)
    while table[i] != _EMPTY:
        if table[i] == key:
            return i
        i = (i + 1) & mask
    return -1


@njit
def _hadd(table, key, mask):
    i = _hslot(key, mask)
    while table[i] != _EMPTY:
        if table[i] == key:
            return
        i = (i + 1) & mask
    table[i] = key


@njit
def _hremove(table, key, mask):
    # linear probing with backward-shift deletion, so no tombstones build up
    i = _hfind(table, key, mask)
    if i < 0:
        return
    j = i
    while True:
        j = (j + 1) & mask
        if table[j] == _EMPTY:
            break
        h = _hslot(table[j], mask)
        if i <= j:
            stays = i < h <= j
        else:
            stays = h > i or h <= j
        if stays:
            continue
        table[i] = table[j]
        i = j
    table[i] = _EMPTY


@njit
def _rewire_nb(n, src, dst, pick_a, pick_b, flip):
    src = src.copy()
    dst = dst.copy()
    cap = 16
    while cap < 4 * len(src):
        cap *= 2
    mask = cap - 1
    table = np.full(cap, _EMPTY, dtype=np.int64)
    for i in range(len(src)):
        a, b = src[i], dst[i]
        if a > b:
            a, b = b, a
        _hadd(table, a * n + b, mask)
    done = 0
    for t in range(len(pick_a)):
        i = pick_a[t]
        j = pick_b[t]
        if i == j:
            continue
        u, v = src[i], dst[i]
        x, y = src[j], dst[j]
        if flip[t]:
            x, y = y, x
        # (u, v), (x, y) -> (u, y), (x, v)
        if u == y or x == v or u == x or v == y:
            continue
        a1, b1 = (u, y) if u < y else (y, u)
        a2, b2 = (x, v) if x < v else (v, x)
        k1 = a1 * n + b1
        k2 = a2 * n + b2
        if _hfind(table, k1, mask) >= 0 or _hfind(table, k2, mask) >= 0:
            continue
        o1, p1 = (u, v) if u < v else (v, u)
        o2, p2 = (x, y) if x < y else (y, x)
        _hremove(table, o1 * n + p1, mask)
        _hremove(table, o2 * n + p2, mask)
        _hadd(table, k1, mask)
        _hadd(table, k2, mask)
        src[i], dst[i] = u, y
        src[j], dst[j] = x, v
        done += 1
    return src, dst, done


def _rewire_np(n, src, dst, pick_a, pick_b, flip):
    src = src.copy()
    dst = dst.copy()
    key = lambda a, b: a * n + b if a < b else b * n + a  # noqa: E731
    present = {key(int(a), int(b)) for a, b in zip(src, dst)}
    done = 0
    for i, j, f in zip(pick_a.tolist(), pick_b.tolist(), flip.tolist()):
        if i == j:
            continue
        u, v = int(src[i]), int(dst[i])
        x, y = int(src[j]), int(dst[j])
        if f:
            x, y = y, x
        if u == y or x == v or u == x or v == y:
            continue
        k1, k2 = key(u, y), key(x, v)
        if k1 in present or k2 in present:
            continue
        present.discard(key(u, v))
        present.discard(key(x, y))
        present.add(k1)
        present.add(k2)
        src[i], dst[i] = u, y
        src[j], dst[j] = x, v
        done += 1
    return src, dst, done


def rewire(src, dst, n, n_attempts, rng, backend=None):
    """Double-edge swaps preserving every node degree and simplicity.

    Returns (src, dst, accepted swaps).
    """
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    m = len(src)
    if m < 2 or n_attempts <= 0:
        return src.copy(), dst.copy(), 0
    pick_a = rng.integers(0, m, size=n_attempts, dtype=np.int64)
    pick_b = rng.integers(0, m, size=n_attempts, dtype=np.int64)
    flip = rng.integers(0, 2, size=n_attempts, dtype=np.int64).astype(np.bool_)
    fn = _rewire_nb if resolve_backend(backend) == "numba" else _rewire_np
    s, d, done = fn(int(n), src, dst, pick_a, pick_b, flip)
    return s, d, int(done)
