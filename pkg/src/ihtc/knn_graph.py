"""Symmetric k-nearest-neighbour graphs and walk queries.

The graph joins i and j whenever either is among the other's k nearest
units, stored as a compressed sparse adjacency sorted by neighbour index.
Distance ties are broken by ascending unit index so construction is
deterministic, and the tree-accelerated builder is exact: it produces the
same graph as the quadratic brute-force builder, which the test suite
checks directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels, metrics
from .dataset import Dataset

# above this dimensionality kd-tree pruning stops paying for itself
DEFAULT_TREE_DIM_LIMIT = 16
# extra neighbours fetched per query so boundary ties can be detected
_QUERY_SLACK = 1


@dataclass(frozen=True)
class KnnGraph:
    """Undirected kNN graph in CSR form.

    ``indices[indptr[i]:indptr[i+1]]`` lists i's neighbours in ascending
    order, with ``weights`` holding the matching distances.  Every vertex
    has degree >= k because the union of directed kNN relations can only
    add edges.
    """

    n: int
    k: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    max_edge_weight: float

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    def degree(self, i: int) -> int:
        return int(self.indptr[i + 1] - self.indptr[i])

    @property
    def num_edges(self) -> int:
        return int(self.indices.shape[0]) // 2

    def edge_list(self):
        """Yield each undirected edge once as (i, j, weight), i < j."""
        for i in range(self.n):
            for p in range(self.indptr[i], self.indptr[i + 1]):
                j = int(self.indices[p])
                if i < j:
                    yield i, j, float(self.weights[p])


def _finish(n: int, k: int, nbr: np.ndarray, nbrd: np.ndarray) -> KnnGraph:
    indptr, indices, weights = _kernels.symmetrize(nbr, nbrd)
    max_w = float(weights.max()) if weights.size else 0.0
    for arr in (indptr, indices, weights):
        arr.setflags(write=False)
    return KnnGraph(n, k, indptr, indices, weights, max_w)


def _check_args(data: Dataset, k: int) -> None:
    if not 1 <= k < data.n:
        raise ValueError(f"k must satisfy 1 <= k < n, got k={k}, n={data.n}")


def build_knn_bruteforce(data: Dataset, k: int, metric: str = metrics.EUCLIDEAN) -> KnnGraph:
    """Exact kNN graph by scanning all pairs.  O(n^2) time, any metric."""
    _check_args(data, k)
    code = metrics.metric_code(metric)
    nbr, nbrd = _kernels.select_bruteforce(data.values, k, code)
    return _finish(data.n, k, nbr, nbrd)


def build_knn_tree(
    data: Dataset,
    k: int,
    metric: str = metrics.EUCLIDEAN,
    dim_limit: int = DEFAULT_TREE_DIM_LIMIT,
) -> KnnGraph:
    """Exact kNN graph through a kd-tree; Euclidean only.

    The tree supplies candidate neighbours; distances are then recomputed
    with the library's own accumulation order and the k nearest selected
    under the (distance, index) rule.  Rows whose selection could hinge
    on candidates the tree did not return (boundary ties, duplicate
    bursts) are resolved by an exhaustive rescan of that row, so the
    result always equals the brute-force graph.  Falls back to brute
    force above ``dim_limit`` dimensions where kd-trees degenerate.
    """
    if metric != metrics.EUCLIDEAN:
        raise ValueError("tree construction requires the euclidean metric")
    _check_args(data, k)
    if data.d > dim_limit:
        return build_knn_bruteforce(data, k, metric)
    x = data.values
    n = data.n
    tree = cKDTree(x)
    m0 = min(n, k + 1 + _QUERY_SLACK)
    _, idx = tree.query(x, k=m0, workers=-1)
    if m0 == 1:
        idx = idx[:, None]
    cand = np.ascontiguousarray(idx, dtype=np.int64)
    nbr, nbrd, unsafe = _kernels.select_from_candidates(
        x, cand, k, _kernels.EUCLIDEAN_CODE
    )
    for i in np.flatnonzero(unsafe):
        nbr[i], nbrd[i] = _exact_row(x, int(i), k)
    return _finish(n, k, nbr, nbrd)


def _exact_row(x: np.ndarray, i: int, k: int):
    """Brute-force one row's k nearest under the (distance, index) rule."""
    d = metrics.row_distances(x, i, metrics.EUCLIDEAN)
    order = np.lexsort((np.arange(x.shape[0]), d))
    order = order[order != i][:k]
    sel = np.sort(order)
    return sel, d[sel]


def build_knn(
    data: Dataset,
    k: int,
    metric: str = metrics.EUCLIDEAN,
    dim_limit: int = DEFAULT_TREE_DIM_LIMIT,
) -> KnnGraph:
    """Pick the fastest exact builder for the given metric and dimension."""
    if metric == metrics.EUCLIDEAN and data.d <= dim_limit:
        return build_knn_tree(data, k, metric, dim_limit)
    return build_knn_bruteforce(data, k, metric)


def within_walk_two(graph: KnnGraph, i: int, j: int) -> bool:
    """True when a walk of length <= 2 joins i and j (length 0 if i == j)."""
    if not (0 <= i < graph.n and 0 <= j < graph.n):
        raise IndexError(f"vertex out of range: i={i}, j={j}, n={graph.n}")
    if i == j:
        return True
    ni = graph.neighbors(i)
    pos = np.searchsorted(ni, j)
    if pos < ni.size and ni[pos] == j:
        return True
    # shared neighbour = walk of length two; adjacency rows are sorted
    nj = graph.neighbors(j)
    a = b = 0
    while a < ni.size and b < nj.size:
        if ni[a] == nj[b]:
            return True
        if ni[a] < nj[b]:
            a += 1
        else:
            b += 1
    return False


def write_edge_list(graph: KnnGraph, path) -> None:
    """Dump edges as ``i j weight`` lines, ascending i then j."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, j, w in graph.edge_list():
            fh.write(f"{i} {j} {w!r}\n")
