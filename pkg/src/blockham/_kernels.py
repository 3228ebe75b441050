"""Numba kernels: subset DP over endpoint bitsets and the rotation solver.

All kernels treat forced vertex pairs through a ``partner`` array
(partner[v] = w when {v, w} must be traversed as an edge, else -1).  Paths
keep the invariant that a forced pair is either fully on the path with its
edge used, or fully off it; entering one vertex of a pair lands on the
other.  Adjacency passed in must already contain the forced pairs.
"""

import numpy as np
from numba import njit

U64 = np.uint64


@njit(cache=True)
def _xorshift(s):
    s ^= s << U64(13)
    s ^= s >> U64(7)
    s ^= s << U64(17)
    return s


@njit(cache=True)
def _bit_index(x):
    i = 0
    while x > 1:
        x >>= 1
        i += 1
    return i


@njit(cache=True)
def endpoint_table(nbr, partner, start):
    """DP over vertex subsets: table[mask] = bitset of endpoints v such
    that some admissible path covers exactly ``mask`` and ends at v.

    ``start`` >= 0 pins the first path vertex; -1 allows every start.
    """
    n = nbr.shape[0]
    size = 1 << n
    table = np.zeros(size, dtype=np.int64)
    if start >= 0:
        y = partner[start]
        if y >= 0:
            if (nbr[start] >> y) & 1:
                table[(1 << start) | (1 << y)] = 1 << y
        else:
            table[1 << start] = 1 << start
    else:
        for v in range(n):
            y = partner[v]
            if y < 0:
                table[1 << v] |= 1 << v
            elif (nbr[v] >> y) & 1:
                table[(1 << v) | (1 << y)] |= 1 << y
    for mask in range(size):
        ends = table[mask]
        if ends == 0:
            continue
        rem = ends
        while rem:
            lsb = rem & (-rem)
            rem ^= lsb
            e = _bit_index(lsb)
            c = nbr[e] & ~mask
            while c:
                lb = c & (-c)
                c ^= lb
                w = _bit_index(lb)
                pw = partner[w]
                if pw < 0 or pw == e:
                    table[mask | (1 << w)] |= 1 << w
                elif not (mask >> pw) & 1:
                    table[mask | (1 << w) | (1 << pw)] |= 1 << pw
    return table


@njit(cache=True)
def _adj(indptr, indices, u, v):
    lo, hi = indptr[u], indptr[u + 1]
    while lo < hi:
        mid = (lo + hi) // 2
        if indices[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo < indptr[u + 1] and indices[lo] == v


@njit(cache=True)
def _extend_tail(indptr, indices, partner, path, pos, plen):
    """Append the first usable off-path neighbor of the free end (pulling
    in its forced partner atomically); returns the new length."""
    e = path[plen - 1]
    for k in range(indptr[e], indptr[e + 1]):
        w = indices[k]
        if pos[w] < 0:
            pw = partner[w]
            if pw < 0:
                path[plen] = w
                pos[w] = plen
                return plen + 1
            path[plen] = w
            pos[w] = plen
            path[plen + 1] = pw
            pos[pw] = plen + 1
            return plen + 2
    return plen


@njit(cache=True)
def _reverse_range(arr, posarr, lo, hi):
    i, j = lo, hi
    while i < j:
        a, b = arr[i], arr[j]
        arr[i] = b
        arr[j] = a
        posarr[b] = i
        posarr[a] = j
        i += 1
        j -= 1


@njit(cache=True)
def _extend_max(indptr, indices, partner, path, pos, plen):
    while True:
        moved = False
        while True:
            q = _extend_tail(indptr, indices, partner, path, pos, plen)
            if q == plen:
                break
            plen = q
            moved = True
        _reverse_range(path, pos, 0, plen - 1)
        q = _extend_tail(indptr, indices, partner, path, pos, plen)
        if q == plen:
            _reverse_range(path, pos, 0, plen - 1)
            if not moved:
                return plen
        else:
            plen = q


@njit(cache=True)
def _reopen(indptr, indices, partner, path, pos, work, wpos, plen, n):
    """Break the cycle held in ``work`` open through the lowest-index
    off-cycle vertex adjacent to it; writes the longer path into ``path``.
    Never deletes a forced cycle edge."""
    for w in range(n):
        if pos[w] >= 0:
            continue
        for k in range(indptr[w], indptr[w + 1]):
            u = indices[k]
            hu = wpos[u]
            if hu < 0:
                continue
            prv = work[(hu - 1 + plen) % plen]
            godir = 1
            if partner[u] == prv:
                godir = -1
            L = 0
            pw = partner[w]
            if pw >= 0:
                path[L] = pw
                L += 1
            path[L] = w
            L += 1
            for t in range(plen):
                path[L] = work[(hu + godir * t) % plen]
                L += 1
            for i in range(n):
                pos[i] = -1
            for i in range(L):
                pos[path[i]] = i
            return 1, L
    return 0, plen


@njit(cache=True)
def _closure(indptr, indices, partner, path, pos, plen, n,
             work, wpos, seen, parent, pivotv, queue, chain):
    """Breadth-first rotation closure from the current free end.

    Returns (code, plen): 2 = Hamilton cycle (cycle order left in
    ``path``), 1 = path improved (extension or reopen committed),
    0 = stagnation (no new end helps).
    """
    head = path[0]
    for i in range(n):
        seen[i] = 0
        parent[i] = -1
        pivotv[i] = -1
    e0 = path[plen - 1]
    seen[e0] = 1
    queue[0] = e0
    qlen = 1
    qi = 0
    while qi < qlen:
        e = queue[qi]
        qi += 1
        # replay the rotation chain of e on a scratch copy of the path
        depth = 0
        x = e
        while parent[x] >= 0:
            chain[depth] = pivotv[x]
            depth += 1
            x = parent[x]
        for i in range(plen):
            v = path[i]
            work[i] = v
            wpos[v] = i
        for d in range(depth - 1, -1, -1):
            _reverse_range(work, wpos, wpos[chain[d]] + 1, plen - 1)
        # enumerate admissible rotations of e's path
        for k in range(indptr[e], indptr[e + 1]):
            v = indices[k]
            h = wpos[v]
            if h < 0 or h > plen - 3:
                continue
            nxt = work[h + 1]
            if partner[v] == nxt or seen[nxt]:
                continue
            seen[nxt] = 1
            parent[nxt] = e
            pivotv[nxt] = v
            queue[qlen] = nxt
            qlen += 1
            # cheap win tests need no path order, only membership
            can_extend = False
            for k2 in range(indptr[nxt], indptr[nxt + 1]):
                if pos[indices[k2]] < 0:
                    can_extend = True
                    break
            closable = _adj(indptr, indices, nxt, head)
            if not (can_extend or closable):
                continue
            _reverse_range(work, wpos, h + 1, plen - 1)
            if plen == n and closable:
                for t in range(plen):
                    path[t] = work[t]
                    pos[work[t]] = t
                return 2, plen
            if can_extend:
                for t in range(plen):
                    path[t] = work[t]
                    pos[work[t]] = t
                return 1, plen
            code, newlen = _reopen(indptr, indices, partner, path, pos,
                                   work, wpos, plen, n)
            if code == 1:
                return 1, newlen
            # cycle spans its whole component: nothing to reopen into
            return 0, plen
    return 0, plen


@njit(cache=True)
def posa_kernel(indptr, indices, partner, n, restarts, step_budget, seed):
    """Rotation-extension search for an admissible Hamilton cycle.

    Returns (found, path, length, restarts_used, steps); on success the
    path array holds the cycle order.
    """
    path = np.empty(n, np.int32)
    pos = np.full(n, -1, np.int32)
    work = np.empty(n, np.int32)
    wpos = np.full(n, -1, np.int32)
    seen = np.zeros(n, np.uint8)
    parent = np.full(n, -1, np.int32)
    pivotv = np.full(n, -1, np.int32)
    queue = np.empty(n, np.int32)
    chain = np.empty(n, np.int32)
    best_len = 0
    steps = 0
    state = U64(seed)
    restarts_used = 0
    for r in range(restarts):
        restarts_used = r + 1
        for i in range(n):
            pos[i] = -1
        state = _xorshift(state)
        start = np.int32(state % U64(n))
        plen = 0
        path[plen] = start
        pos[start] = plen
        plen += 1
        pw = partner[start]
        if pw >= 0:
            path[plen] = pw
            pos[pw] = plen
            plen += 1
        while steps < step_budget:
            steps += 1
            plen = _extend_max(indptr, indices, partner, path, pos, plen)
            if plen > best_len:
                best_len = plen
            if plen == n and _adj(indptr, indices, path[plen - 1], path[0]):
                return 1, path, plen, restarts_used, steps
            code, plen = _closure(indptr, indices, partner, path, pos, plen,
                                  n, work, wpos, seen, parent, pivotv,
                                  queue, chain)
            if plen > best_len:
                best_len = plen
            if code == 2:
                return 1, path, plen, restarts_used, steps
            if code == 0:
                # try the other end once before giving up on this restart
                _reverse_range(path, pos, 0, plen - 1)
                code2, plen = _closure(indptr, indices, partner, path, pos,
                                       plen, n, work, wpos, seen, parent,
                                       pivotv, queue, chain)
                if plen > best_len:
                    best_len = plen
                if code2 == 2:
                    return 1, path, plen, restarts_used, steps
                if code2 == 0:
                    break
        if steps >= step_budget:
            break
    return 0, path, best_len, restarts_used, steps
