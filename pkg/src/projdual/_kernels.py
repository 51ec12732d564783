"""Hot loops: nearest-neighbour distances, brute-force k-NN (plain and with a
per-group cap) and marching-squares cell classification.

Every kernel has a numba implementation and a numpy implementation with the
same signature; the public names at the bottom are bound according to
:mod:`projdual._backend`.  Both versions are always importable so tests and
the benchmark can compare them directly.
"""
import numpy as np

from ._backend import HAVE_NUMBA, USE_NUMBA

_CHUNK = 256


# ---------------------------------------------------------------------------
# numpy implementations


def _np_pair_sq(a, b, projective):
    diff = a[:, None, :] - b[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    if projective:
        summ = a[:, None, :] + b[None, :, :]
        d2 = np.minimum(d2, np.einsum("ijk,ijk->ij", summ, summ))
    return d2


def nearest_sq_numpy(a, b, projective=False):
    """Squared distance from each row of ``a`` to its nearest row of ``b``."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    out = np.empty(len(a))
    for start in range(0, len(a), _CHUNK):
        out[start:start + _CHUNK] = _np_pair_sq(a[start:start + _CHUNK], b, projective).min(axis=1)
    return out


def knn_numpy(x, k, projective=False):
    """Indices of the ``k`` nearest rows of ``x`` for every row (self included),
    sorted by distance with ties broken by index."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = len(x)
    out = np.empty((n, k), dtype=np.int64)
    idx = np.arange(n)
    for start in range(0, n, _CHUNK):
        d2 = _np_pair_sq(x[start:start + _CHUNK], x, projective)
        for r in range(len(d2)):
            order = np.lexsort((idx, d2[r]))
            out[start + r] = order[:k]
    return out


def knn_grouped_numpy(x, labels, k, cap, projective=False):
    """k-NN where at most ``cap`` neighbours may share a label.

    Candidates are ranked by (distance, index); the self match counts
    towards its own label.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n = len(x)
    out = np.full((n, k), -1, dtype=np.int64)
    idx = np.arange(n)
    for start in range(0, n, _CHUNK):
        d2 = _np_pair_sq(x[start:start + _CHUNK], x, projective)
        for r in range(len(d2)):
            order = np.lexsort((idx, d2[r]))
            lab = labels[order]
            # rank of each candidate within its label group, in distance order
            grp = np.lexsort((np.arange(n), lab))
            rank = np.empty(n, dtype=np.int64)
            starts = np.r_[0, np.flatnonzero(np.diff(lab[grp])) + 1]
            sizes = np.diff(np.r_[starts, n])
            rank[grp] = np.arange(n) - np.repeat(starts, sizes)
            chosen = order[rank < cap][:k]
            out[start + r, :len(chosen)] = chosen
    return out


# Corner bit layout: c00 -> 1, c10 -> 2, c11 -> 4, c01 -> 8.
# Cell edges: 0 bottom (c00-c10), 1 right (c10-c11), 2 top (c01-c11), 3 left (c00-c01).
_CASE_PAIRS = {
    1: [(0, 3)], 2: [(0, 1)], 3: [(1, 3)], 4: [(1, 2)], 6: [(0, 2)], 7: [(2, 3)],
    8: [(2, 3)], 9: [(0, 2)], 11: [(1, 2)], 12: [(1, 3)], 13: [(0, 1)], 14: [(0, 3)],
}


def _cell_edge_ids(i, j, n0, n1):
    i1 = (i + 1) % n0
    j1 = (j + 1) % n1
    return (2 * (i * n1 + j), 2 * (i1 * n1 + j) + 1, 2 * (i * n1 + j1), 2 * (i * n1 + j) + 1)


def ms_segments_numpy(pos, center_pos, periodic0, periodic1):
    """Zero-curve segments of a sign grid.

    ``pos[i, j]`` is True where the sampled function is >= 0.  Edge ids:
    ``2*(i*n1+j)`` for the edge from node (i, j) to (i+1, j) and
    ``2*(i*n1+j)+1`` for the edge from (i, j) to (i, j+1); indices wrap on
    periodic axes.  ``center_pos[i, j]`` resolves the two saddle cases.
    Returns an (m, 2) array of edge-id pairs in cell-major order.
    """
    pos = np.asarray(pos, dtype=bool)
    n0, n1 = pos.shape
    c0 = n0 if periodic0 else n0 - 1
    c1 = n1 if periodic1 else n1 - 1
    ii, jj = np.meshgrid(np.arange(c0), np.arange(c1), indexing="ij")
    ip = (ii + 1) % n0
    jp = (jj + 1) % n1
    case = (pos[ii, jj] * 1 + pos[ip, jj] * 2 + pos[ip, jp] * 4 + pos[ii, jp] * 8).astype(np.int64)
    edges = np.stack([2 * (ii * n1 + jj), 2 * (ip * n1 + jj) + 1,
                      2 * (ii * n1 + jp), 2 * (ii * n1 + jj) + 1], axis=-1)
    cpos = np.asarray(center_pos, dtype=bool)[:c0, :c1]
    out = []
    for ci in range(c0):
        for cj in range(c1):
            c = case[ci, cj]
            if c == 0 or c == 15:
                continue
            e = edges[ci, cj]
            if c == 5 or c == 10:
                # c00 and c11 share a sign; the centre decides which pair connects.
                same_as_c00 = cpos[ci, cj] == bool(c & 1)
                pairs = [(0, 1), (2, 3)] if same_as_c00 else [(0, 3), (1, 2)]
            else:
                pairs = _CASE_PAIRS[c]
            for a, b in pairs:
                out.append((e[a], e[b]))
    return np.array(out, dtype=np.int64).reshape(-1, 2)


# ---------------------------------------------------------------------------
# numba implementations

if HAVE_NUMBA:
    from numba import njit, prange

    @njit(cache=True, parallel=True)
    def _nearest_sq_nb(a, b, projective):
        n, d = a.shape
        m = b.shape[0]
        out = np.empty(n)
        for i in prange(n):
            best = np.inf
            for j in range(m):
                s1 = 0.0
                s2 = 0.0
                for t in range(d):
                    x = a[i, t] - b[j, t]
                    s1 += x * x
                    if projective:
                        y = a[i, t] + b[j, t]
                        s2 += y * y
                if projective and s2 < s1:
                    s1 = s2
                if s1 < best:
                    best = s1
            out[i] = best
        return out

    @njit(cache=True, parallel=True)
    def _knn_nb(x, k, projective):
        n, d = x.shape
        out = np.empty((n, k), dtype=np.int64)
        for i in prange(n):
            bd = np.full(k, np.inf)
            bi = np.full(k, n, dtype=np.int64)
            for j in range(n):
                s1 = 0.0
                s2 = 0.0
                for t in range(d):
                    u = x[i, t] - x[j, t]
                    s1 += u * u
                    if projective:
                        w = x[i, t] + x[j, t]
                        s2 += w * w
                if projective and s2 < s1:
                    s1 = s2
                if s1 < bd[k - 1]:
                    # insertion keeps (distance, index) order; j increases so ties stay stable
                    p = k - 1
                    while p > 0 and bd[p - 1] > s1:
                        bd[p] = bd[p - 1]
                        bi[p] = bi[p - 1]
                        p -= 1
                    bd[p] = s1
                    bi[p] = j
            out[i] = bi
        return out

    @njit(cache=True, parallel=True)
    def _knn_grouped_nb(x, labels, n_labels, k, cap, projective):
        n, d = x.shape
        out = np.full((n, k), -1, dtype=np.int64)
        for i in prange(n):
            gd = np.full((n_labels, cap), np.inf)
            gi = np.full((n_labels, cap), n, dtype=np.int64)
            for j in range(n):
                s1 = 0.0
                s2 = 0.0
                for t in range(d):
                    u = x[i, t] - x[j, t]
                    s1 += u * u
                    if projective:
                        w = x[i, t] + x[j, t]
                        s2 += w * w
                if projective and s2 < s1:
                    s1 = s2
                g = labels[j]
                if s1 < gd[g, cap - 1]:
                    p = cap - 1
                    while p > 0 and gd[g, p - 1] > s1:
                        gd[g, p] = gd[g, p - 1]
                        gi[g, p] = gi[g, p - 1]
                        p -= 1
                    gd[g, p] = s1
                    gi[g, p] = j
            # merge the per-label lists by (distance, index)
            bd = np.full(k, np.inf)
            bi = np.full(k, n, dtype=np.int64)
            for g in range(n_labels):
                for c in range(cap):
                    s1 = gd[g, c]
                    j = gi[g, c]
                    if j == n:
                        break
                    if s1 < bd[k - 1] or (s1 == bd[k - 1] and j < bi[k - 1]):
                        p = k - 1
                        while p > 0 and (bd[p - 1] > s1 or (bd[p - 1] == s1 and bi[p - 1] > j)):
                            bd[p] = bd[p - 1]
                            bi[p] = bi[p - 1]
                            p -= 1
                        bd[p] = s1
                        bi[p] = j
            for c in range(k):
                if bi[c] < n:
                    out[i, c] = bi[c]
        return out

    @njit(cache=True)
    def _ms_segments_nb(pos, center_pos, periodic0, periodic1):
        n0, n1 = pos.shape
        c0 = n0 if periodic0 else n0 - 1
        c1 = n1 if periodic1 else n1 - 1
        out = np.empty((2 * c0 * c1, 2), dtype=np.int64)
        m = 0
        for i in range(c0):
            ip = (i + 1) % n0
            for j in range(c1):
                jp = (j + 1) % n1
                c = 0
                if pos[i, j]:
                    c += 1
                if pos[ip, j]:
                    c += 2
                if pos[ip, jp]:
                    c += 4
                if pos[i, jp]:
                    c += 8
                if c == 0 or c == 15:
                    continue
                e0 = 2 * (i * n1 + j)
                e1 = 2 * (ip * n1 + j) + 1
                e2 = 2 * (i * n1 + jp)
                e3 = 2 * (i * n1 + j) + 1
                if c == 5 or c == 10:
                    if center_pos[i, j] == ((c & 1) == 1):
                        out[m, 0] = e0
                        out[m, 1] = e1
                        out[m + 1, 0] = e2
                        out[m + 1, 1] = e3
                    else:
                        out[m, 0] = e0
                        out[m, 1] = e3
                        out[m + 1, 0] = e1
                        out[m + 1, 1] = e2
                    m += 2
                    continue
                if c == 1 or c == 14:
                    out[m, 0] = e0
                    out[m, 1] = e3
                elif c == 2 or c == 13:
                    out[m, 0] = e0
                    out[m, 1] = e1
                elif c == 3 or c == 12:
                    out[m, 0] = e1
                    out[m, 1] = e3
                elif c == 4 or c == 11:
                    out[m, 0] = e1
                    out[m, 1] = e2
                elif c == 6 or c == 9:
                    out[m, 0] = e0
                    out[m, 1] = e2
                else:  # 7, 8
                    out[m, 0] = e2
                    out[m, 1] = e3
                m += 1
        return out[:m]

    def nearest_sq_numba(a, b, projective=False):
        return _nearest_sq_nb(np.ascontiguousarray(a, dtype=np.float64),
                              np.ascontiguousarray(b, dtype=np.float64), bool(projective))

    def knn_numba(x, k, projective=False):
        return _knn_nb(np.ascontiguousarray(x, dtype=np.float64), int(k), bool(projective))

    def knn_grouped_numba(x, labels, k, cap, projective=False):
        labels = np.ascontiguousarray(labels, dtype=np.int64)
        n_labels = int(labels.max()) + 1 if len(labels) else 0
        return _knn_grouped_nb(np.ascontiguousarray(x, dtype=np.float64), labels, n_labels,
                               int(k), int(cap), bool(projective))

    def ms_segments_numba(pos, center_pos, periodic0, periodic1):
        return _ms_segments_nb(np.ascontiguousarray(pos, dtype=np.bool_),
                               np.ascontiguousarray(center_pos, dtype=np.bool_),
                               bool(periodic0), bool(periodic1))


if USE_NUMBA:
    nearest_sq = nearest_sq_numba
    knn = knn_numba
    knn_grouped = knn_grouped_numba
    ms_segments = ms_segments_numba
else:
    nearest_sq = nearest_sq_numpy
    knn = knn_numpy
    knn_grouped = knn_grouped_numpy
    ms_segments = ms_segments_numpy
