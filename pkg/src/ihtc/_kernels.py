"""Compiled inner loops for graph construction and threshold clustering.

Every kernel is written as a plain Python function and JIT-compiled with
numba when it is available.  The fallback path runs the same code through
the interpreter, so results are identical either way; only speed differs.
Call :func:`warmup` once before timing-sensitive work to absorb the JIT
compilation cost.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


# metric codes shared by all kernels
EUCLIDEAN_CODE = 0
MANHATTAN_CODE = 1


@njit(cache=True)
def point_dist(x, i, j, metric_code):
    """Distance between rows i and j of x under the coded metric."""
    acc = 0.0
    if metric_code == EUCLIDEAN_CODE:
        for t in range(x.shape[1]):
            diff = x[i, t] - x[j, t]
            acc += diff * diff
        return np.sqrt(acc)
    for t in range(x.shape[1]):
        diff = x[i, t] - x[j, t]
        if diff < 0.0:
            diff = -diff
        acc += diff
    return acc


@njit(cache=True)
def select_from_candidates(x, cand, k, metric_code):
    """Pick each row's k nearest among its candidate list.

    ``cand`` holds candidate unit indices per row (the row's own index may
    appear and is skipped).  Selection orders candidates by (distance,
    index) so exact distance ties resolve to the lower unit index.  Rows
    where the choice could depend on candidates outside ``cand`` are
    flagged unsafe: the k-th kept distance ties (within 1e-9 relative)
    with the nearest excluded candidate, or the row ran out of candidates.

    Returns (nbr, nbrd, unsafe) with nbr rows sorted by unit index and
    nbrd the matching distances.
    """
    n, m0 = cand.shape
    nbr = np.empty((n, k), dtype=np.int64)
    nbrd = np.empty((n, k))
    unsafe = np.zeros(n, dtype=np.uint8)
    cdist = np.empty(m0)
    order = np.empty(m0, dtype=np.int64)
    for i in range(n):
        for c in range(m0):
            cdist[c] = point_dist(x, i, cand[i, c], metric_code)
            order[c] = c
        # insertion sort of candidate slots by (distance, unit index)
        for a in range(1, m0):
            o = order[a]
            key_d = cdist[o]
            key_i = cand[i, o]
            b = a - 1
            while b >= 0 and (
                cdist[order[b]] > key_d
                or (cdist[order[b]] == key_d and cand[i, order[b]] > key_i)
            ):
                order[b + 1] = order[b]
                b -= 1
            order[b + 1] = o
        taken = 0
        cut = 0.0
        closed = False
        for a in range(m0):
            o = order[a]
            j = cand[i, o]
            if j == i:
                continue
            if taken < k:
                nbr[i, taken] = j
                nbrd[i, taken] = cdist[o]
                cut = cdist[o]
                taken += 1
            else:
                # selection is only final if the first excluded candidate
                # sits strictly beyond the cut (no tie to resolve outside)
                if cdist[o] <= cut * (1.0 + 1e-9) + 1e-300:
                    unsafe[i] = 1
                closed = True
                break
        if taken < k or (not closed and m0 < n):
            unsafe[i] = 1
            continue
        # store adjacency sorted by unit index
        for a in range(1, k):
            ki = nbr[i, a]
            kw = nbrd[i, a]
            b = a - 1
            while b >= 0 and nbr[i, b] > ki:
                nbr[i, b + 1] = nbr[i, b]
                nbrd[i, b + 1] = nbrd[i, b]
                b -= 1
            nbr[i, b + 1] = ki
            nbrd[i, b + 1] = kw
    return nbr, nbrd, unsafe


@njit(cache=True)
def select_bruteforce(x, k, metric_code):
    """Exact k nearest neighbours of every row against all other rows.

    Maintains a running (distance, index)-sorted buffer per row; ties at
    the cut resolve to the lower unit index, matching
    :func:`select_from_candidates`.
    """
    n = x.shape[0]
    nbr = np.empty((n, k), dtype=np.int64)
    nbrd = np.empty((n, k))
    bd = np.empty(k)
    bi = np.empty(k, dtype=np.int64)
    for i in range(n):
        filled = 0
        for j in range(n):
            if j == i:
                continue
            dij = point_dist(x, i, j, metric_code)
            if filled == k and (
                dij > bd[k - 1] or (dij == bd[k - 1] and j > bi[k - 1])
            ):
                continue
            # insert (dij, j) into the sorted buffer
            pos = filled if filled < k else k - 1
            while pos > 0 and (
                bd[pos - 1] > dij or (bd[pos - 1] == dij and bi[pos - 1] > j)
            ):
                if pos < k:
                    bd[pos] = bd[pos - 1]
                    bi[pos] = bi[pos - 1]
                pos -= 1
            bd[pos] = dij
            bi[pos] = j
            if filled < k:
                filled += 1
        for a in range(k):
            nbr[i, a] = bi[a]
            nbrd[i, a] = bd[a]
        # resort by unit index for the adjacency contract
        for a in range(1, k):
            ki = nbr[i, a]
            kw = nbrd[i, a]
            b = a - 1
            while b >= 0 and nbr[i, b] > ki:
                nbr[i, b + 1] = nbr[i, b]
                nbrd[i, b + 1] = nbrd[i, b]
                b -= 1
            nbr[i, b + 1] = ki
            nbrd[i, b + 1] = kw
    return nbr, nbrd


@njit(cache=True)
def symmetrize(nbr, nbrd):
    """Union of directed kNN edges as a CSR adjacency sorted by index.

    ``nbr`` rows must already be index-sorted (both selectors guarantee
    it).  A reverse edge j->i is added whenever i chose j but not vice
    versa, so every vertex ends with degree >= k.
    """
    n, k = nbr.shape
    deg = np.full(n, k, dtype=np.int64)
    for i in range(n):
        for c in range(k):
            j = nbr[i, c]
            lo, hi = 0, k
            found = False
            while lo < hi:
                mid = (lo + hi) >> 1
                v = nbr[j, mid]
                if v == i:
                    found = True
                    break
                elif v < i:
                    lo = mid + 1
                else:
                    hi = mid
            if not found:
                deg[j] += 1
    indptr = np.zeros(n + 1, dtype=np.int64)
    for i in range(n):
        indptr[i + 1] = indptr[i] + deg[i]
    indices = np.empty(indptr[n], dtype=np.int64)
    weights = np.empty(indptr[n])
    fill = indptr[:-1].copy()
    # reserve the first k slots of each row for the vertex's own
    # neighbours; incoming reverse edges are appended after them and
    # arrive in ascending source order, leaving two sorted runs per row
    for i in range(n):
        for c in range(k):
            indices[indptr[i] + c] = nbr[i, c]
            weights[indptr[i] + c] = nbrd[i, c]
        fill[i] = indptr[i] + k
    for i in range(n):
        for c in range(k):
            j = nbr[i, c]
            lo, hi = 0, k
            found = False
            while lo < hi:
                mid = (lo + hi) >> 1
                v = nbr[j, mid]
                if v == i:
                    found = True
                    break
                elif v < i:
                    lo = mid + 1
                else:
                    hi = mid
            if not found:
                indices[fill[j]] = i
                weights[fill[j]] = nbrd[i, c]
                fill[j] += 1
    # merge the two sorted runs of every row
    max_deg = 0
    for i in range(n):
        if deg[i] > max_deg:
            max_deg = deg[i]
    buf_i = np.empty(max_deg, dtype=np.int64)
    buf_w = np.empty(max_deg)
    for i in range(n):
        s = indptr[i]
        e = indptr[i + 1]
        mid = s + k
        if mid >= e:
            continue
        m = e - s
        for a in range(m):
            buf_i[a] = indices[s + a]
            buf_w[a] = weights[s + a]
        a, b, out = 0, k, s
        while a < k and b < m:
            if buf_i[a] <= buf_i[b]:
                indices[out] = buf_i[a]
                weights[out] = buf_w[a]
                a += 1
            else:
                indices[out] = buf_i[b]
                weights[out] = buf_w[b]
                b += 1
            out += 1
        while a < k:
            indices[out] = buf_i[a]
            weights[out] = buf_w[a]
            a += 1
            out += 1
        while b < m:
            indices[out] = buf_i[b]
            weights[out] = buf_w[b]
            b += 1
            out += 1
    return indptr, indices, weights


@njit(cache=True)
def greedy_seeds(indptr, indices, scan_order):
    """Greedy maximal independent set of the graph's second power.

    Vertices are visited in ``scan_order``; a vertex becomes a seed when
    no earlier seed lies within a walk of length two of it.  Marking the
    closed 2-hop neighbourhood of each accepted seed makes the result
    exactly the sequential greedy choice.
    """
    n = indptr.shape[0] - 1
    covered = np.zeros(n, dtype=np.uint8)
    seeds = np.empty(n, dtype=np.int64)
    count = 0
    for idx in range(n):
        i = scan_order[idx]
        if covered[i]:
            continue
        seeds[count] = i
        count += 1
        covered[i] = 1
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            covered[j] = 1
            for q in range(indptr[j], indptr[j + 1]):
                covered[indices[q]] = 1
    return seeds[:count]


@njit(cache=True)
def grow_from_seeds(indptr, indices, seeds, n):
    """Label every seed and its direct neighbours with the seed's cluster.

    Seed neighbourhoods cannot collide: two seeds adjacent to a common
    vertex would be joined by a walk of length two, contradicting seed
    independence.
    """
    labels = np.full(n, -1, dtype=np.int64)
    for c in range(seeds.shape[0]):
        s = seeds[c]
        labels[s] = c
        for p in range(indptr[s], indptr[s + 1]):
            labels[indices[p]] = c
    return labels


@njit(cache=True)
def assign_remaining(indptr, indices, labels, seeds, is_seed, x, metric_code):
    """Attach every unlabelled vertex to its best seed within walk two.

    Best means smallest point dissimilarity to the seed; exact ties go to
    the lower seed index.  Returns the number of vertices that had no
    seed within reach (zero whenever the seed set is maximal).
    """
    n = labels.shape[0]
    seed_cluster = np.full(n, -1, dtype=np.int64)
    for c in range(seeds.shape[0]):
        seed_cluster[seeds[c]] = c
    unreached = 0
    for j in range(n):
        if labels[j] >= 0:
            continue
        best_d = np.inf
        best_seed = -1
        for p in range(indptr[j], indptr[j + 1]):
            w = indices[p]
            if is_seed[w]:
                d = point_dist(x, j, w, metric_code)
                if d < best_d or (d == best_d and w < best_seed):
                    best_d = d
                    best_seed = w
            for q in range(indptr[w], indptr[w + 1]):
                s = indices[q]
                if is_seed[s]:
                    d = point_dist(x, j, s, metric_code)
                    if d < best_d or (d == best_d and s < best_seed):
                        best_d = d
                        best_seed = s
        if best_seed >= 0:
            labels[j] = seed_cluster[best_seed]
        else:
            unreached += 1
    return unreached


@njit(cache=True)
def pairwise_matrix(x, metric_code):
    """Dense distance matrix; only sensible for small n."""
    n = x.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = point_dist(x, i, j, metric_code)
            out[i, j] = d
            out[j, i] = d
    return out


@njit(cache=True)
def max_intra_cluster_dist(x, labels, num_clusters, metric_code):
    """Largest pairwise distance inside any cluster (bottleneck value)."""
    n = x.shape[0]
    worst = 0.0
    for i in range(n):
        li = labels[i]
        if li < 0:
            continue
        for j in range(i + 1, n):
            if labels[j] == li:
                d = point_dist(x, i, j, metric_code)
                if d > worst:
                    worst = d
    return worst


def warmup() -> None:
    """Compile the kernels on tiny inputs (no-op without numba)."""
    x = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [2.0, 2.0]])
    cand = np.array([[0, 1, 2], [1, 0, 2], [2, 0, 1], [3, 1, 2]], dtype=np.int64)
    for code in (EUCLIDEAN_CODE, MANHATTAN_CODE):
        nbr, nbrd, _ = select_from_candidates(x, cand, 2, code)
        select_bruteforce(x, 2, code)
        indptr, indices, _ = symmetrize(nbr, nbrd)
        order = np.arange(4, dtype=np.int64)
        seeds = greedy_seeds(indptr, indices, order)
        labels = grow_from_seeds(indptr, indices, seeds, 4)
        is_seed = np.zeros(4, dtype=np.uint8)
        is_seed[seeds] = 1
        assign_remaining(indptr, indices, labels, seeds, is_seed, x, code)
        pairwise_matrix(x, code)
        max_intra_cluster_dist(x, labels, int(labels.max()) + 1, code)
