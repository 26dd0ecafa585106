"""Base clustering algorithms the hybrid pipeline can run on prototypes.

Lloyd k-means, agglomerative clustering with the classic linkage update
rules, and DBSCAN.  All three are deterministic given their inputs (and
the k-means seed); scan orders and tie rules are fixed by ascending
index.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import metrics
from .clustering import NOISE, Clustering
from .dataset import Dataset

LINKAGES = ("single", "complete", "average", "ward")

# quadratic distance matrix: 20k points ~ 3.2 GB, past that use
# instance selection first
DEFAULT_HAC_CAP = 20_000

INIT_RANDOM_UNITS = "random-units"
INIT_KMEANS_PP = "kmeans++"


@dataclass(frozen=True)
class KMeansConfig:
    """Knobs for Lloyd's algorithm.

    ``tolerance`` is the maximum center movement that still counts as
    converged; the default 0.0 iterates until the centers stop moving
    entirely (assignments repeat exactly).
    """

    k: int
    max_iterations: int = 300
    init: str = INIT_RANDOM_UNITS
    seed: int = 0
    tolerance: float = 0.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.tolerance < 0:
            raise ValueError(f"tolerance must be >= 0, got {self.tolerance}")
        if self.init not in (INIT_RANDOM_UNITS, INIT_KMEANS_PP):
            raise ValueError(f"unknown init {self.init!r}")


@dataclass(frozen=True)
class KMeansResult:
    clustering: Clustering
    centers: np.ndarray
    wcss: float
    iterations_used: int
    wcss_history: np.ndarray


def _init_centers(x: np.ndarray, config: KMeansConfig) -> np.ndarray:
    rng = np.random.default_rng(config.seed)
    n = x.shape[0]
    if config.init == INIT_RANDOM_UNITS:
        return x[rng.choice(n, size=config.k, replace=False)].copy()
    # kmeans++: spread starts out, weighting by squared distance
    centers = np.empty((config.k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    d2 = ((x - centers[0]) ** 2).sum(axis=1)
    for c in range(1, config.k):
        total = d2.sum()
        if total > 0:
            centers[c] = x[rng.choice(n, p=d2 / total)]
        else:  # all remaining points coincide with a chosen center
            centers[c] = x[rng.integers(n)]
        d2 = np.minimum(d2, ((x - centers[c]) ** 2).sum(axis=1))
    return centers


def kmeans(data: Dataset, config: KMeansConfig) -> KMeansResult:
    """Lloyd iterations: assign to nearest center by squared Euclidean
    distance, recompute means, repeat until the centers settle.

    Ties in the assignment go to the lowest center id.  A cluster that
    empties is reseeded at the point farthest from its current center,
    which cannot increase the objective.  The within-cluster sum of
    squares is recorded every iteration and verified to be nonincreasing.
    """
    if config.k > data.n:
        raise ValueError(f"k={config.k} exceeds n={data.n}")
    x = data.values
    n = x.shape[0]
    centers = _init_centers(x, config)
    history = []
    labels = None
    for iteration in range(1, config.max_iterations + 1):
        d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = d2.argmin(axis=1)
        point_d2 = d2[np.arange(n), labels]
        wcss = float(point_d2.sum())
        if history and wcss > history[-1] * (1.0 + 1e-12) + 1e-12:
            raise AssertionError(
                f"within-cluster sum of squares rose from {history[-1]!r}"
                f" to {wcss!r} at iteration {iteration}"
            )
        history.append(wcss)
        new_centers = np.empty_like(centers)
        counts = np.bincount(labels, minlength=config.k)
        for col in range(x.shape[1]):
            sums = np.bincount(labels, weights=x[:, col], minlength=config.k)
            new_centers[:, col] = np.divide(
                sums, counts, out=np.zeros(config.k), where=counts > 0
            )
        empties = np.flatnonzero(counts == 0)
        if empties.size:
            # reseed each empty cluster at a point far from its center
            farthest_order = np.argsort(point_d2)[::-1]
            used = 0
            for c in empties:
                new_centers[c] = x[farthest_order[used]]
                used += 1
        movement = float(np.abs(new_centers - centers).max())
        centers = new_centers
        if movement <= config.tolerance and not empties.size:
            break
    d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    wcss = float(d2[np.arange(n), labels].sum())
    counts = np.bincount(labels, minlength=config.k)
    if (counts == 0).any():
        raise RuntimeError(
            "k-means ended with an empty cluster: fewer than k distinct"
            " points, or max_iterations cut the repair short"
        )
    return KMeansResult(
        clustering=Clustering(labels.astype(np.int64), config.k),
        centers=centers,
        wcss=wcss,
        iterations_used=iteration,
        wcss_history=np.array(history),
    )


@dataclass(frozen=True)
class Dendrogram:
    """Full merge history of an agglomerative run.

    ``merges`` has one row per merge: (id_a, id_b, height, new_size) with
    id_a < id_b.  Leaves are 0..n-1 and merge m creates id n+m, mirroring
    the usual linkage-matrix convention.  Heights are nondecreasing for
    all four supported linkages.
    """

    merges: np.ndarray
    linkage: str
    n_leaves: int


def hac(data: Dataset, linkage: str = "ward", cap: int = DEFAULT_HAC_CAP) -> Dendrogram:
    """Agglomerative clustering over an explicit distance matrix.

    Starts from singletons and repeatedly merges the closest pair under
    the chosen linkage, updating distances with the standard recurrence
    for that linkage.  Ties pick the lexicographically smallest cluster
    id pair.  Refuses datasets past ``cap`` (quadratic memory): reduce
    with instance selection first, which is what this library is for.
    """
    if linkage not in LINKAGES:
        raise ValueError(f"unknown linkage {linkage!r}; expected one of {LINKAGES}")
    n = data.n
    if n < 2:
        raise ValueError("agglomerative clustering needs at least 2 units")
    if n > cap:
        raise ValueError(
            f"n={n} exceeds the agglomerative cap of {cap}; run instance"
            " selection (itis) first to reduce the data"
        )
    # ward's recurrence operates on squared distances; heights are sqrt'ed back
    squared = linkage == "ward"
    work = metrics.pairwise_matrix(data.values, metrics.EUCLIDEAN)
    if squared:
        work = work**2
    np.fill_diagonal(work, np.inf)

    active = np.ones(n, dtype=bool)
    sizes = np.ones(n, dtype=np.int64)
    ids = np.arange(n, dtype=np.int64)
    nn_dist = work.min(axis=1)
    nn_slot = work.argmin(axis=1)
    merges = np.empty((n - 1, 4))

    for step in range(n - 1):
        dmin = nn_dist[active].min()
        # exact distance ties: rescan tied rows and take the smallest
        # (id_a, id_b) pair, so the merge order is fully specified
        best = None
        for a in np.flatnonzero(active & (nn_dist == dmin)):
            for b in np.flatnonzero(work[a] == dmin):
                pair = (min(ids[a], ids[b]), max(ids[a], ids[b]))
                if best is None or pair < best[0]:
                    best = (pair, a, b)
        (id_a, id_b), a, b = best
        a, b = min(a, b), max(a, b)
        height = np.sqrt(dmin) if squared else dmin
        merges[step] = (id_a, id_b, height, sizes[a] + sizes[b])

        # fold cluster b into slot a
        sa, sb = sizes[a], sizes[b]
        row_a, row_b = work[a], work[b]
        if linkage == "single":
            merged = np.minimum(row_a, row_b)
        elif linkage == "complete":
            merged = np.maximum(row_a, row_b)
        elif linkage == "average":
            merged = (sa * row_a + sb * row_b) / (sa + sb)
        else:  # ward on squared distances
            sk = sizes
            merged = (
                (sa + sk) * row_a + (sb + sk) * row_b - sk * work[a, b]
            ) / (sa + sb + sk)
        merged[a] = np.inf
        merged[b] = np.inf
        work[a, :] = merged
        work[:, a] = merged
        work[b, :] = np.inf
        work[:, b] = np.inf
        active[b] = False
        sizes[a] = sa + sb
        ids[a] = n + step
        nn_dist[b] = np.inf

        if step == n - 2:
            break
        # refresh caches: rows that pointed at a merged slot rescan; the
        # merged row itself may also have moved closer to anyone else
        for s in np.flatnonzero(active & ((nn_slot == a) | (nn_slot == b))):
            nn_dist[s] = work[s].min()
            nn_slot[s] = work[s].argmin()
        closer = active & (work[:, a] < nn_dist)
        nn_slot[closer] = a
        nn_dist[closer] = work[closer, a]
        nn_dist[a] = work[a].min()
        nn_slot[a] = work[a].argmin()

    heights = merges[:, 2]
    if (np.diff(heights) < -1e-9 * np.maximum(heights[:-1], 1.0)).any():
        raise AssertionError(f"{linkage} linkage produced decreasing merge heights")
    merges.setflags(write=False)
    return Dendrogram(merges=merges, linkage=linkage, n_leaves=n)


def cut_dendrogram(dendrogram: Dendrogram, k: int) -> Clustering:
    """Undo the last k-1 merges, leaving exactly k clusters.

    Cluster ids are renumbered by first occurrence in unit order.
    """
    n = dendrogram.n_leaves
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    parent = np.arange(2 * n - 1, dtype=np.int64)

    def find(v: int) -> int:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for step in range(n - k):
        id_a = int(dendrogram.merges[step, 0])
        id_b = int(dendrogram.merges[step, 1])
        new_id = n + step
        parent[find(id_a)] = new_id
        parent[find(id_b)] = new_id

    raw = np.fromiter((find(i) for i in range(n)), dtype=np.int64, count=n)
    labels = np.empty(n, dtype=np.int64)
    seen: dict[int, int] = {}
    for i, root in enumerate(raw):
        r = int(root)
        if r not in seen:
            seen[r] = len(seen)
        labels[i] = seen[r]
    return Clustering(labels, k)


@dataclass(frozen=True)
class DbscanConfig:
    epsilon: float
    min_pts: int

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.min_pts < 1:
            raise ValueError(f"min_pts must be >= 1, got {self.min_pts}")


def _region_neighbor_lists(data: Dataset, epsilon: float, metric: str):
    """Indices within epsilon of each unit (self included)."""
    if metric == metrics.EUCLIDEAN:
        tree = cKDTree(data.values)
        neighborhoods = tree.query_ball_point(data.values, r=epsilon, workers=-1)
        return [np.sort(np.asarray(nb, dtype=np.int64)) for nb in neighborhoods]
    out = []
    for i in range(data.n):
        d = metrics.row_distances(data.values, i, metric)
        out.append(np.flatnonzero(d <= epsilon).astype(np.int64))
    return out


def dbscan(
    data: Dataset, config: DbscanConfig, metric: str = metrics.EUCLIDEAN
) -> Clustering:
    """Density clustering: core points chain through epsilon-neighbourhoods.

    A unit is core when its closed epsilon-ball holds at least min_pts
    units.  Clusters grow breadth-first from cores in ascending unit
    order; non-core units reachable from a core join the first cluster
    that reaches them, everything else is labelled -1 (noise).
    """
    neighborhoods = _region_neighbor_lists(data, config.epsilon, metric)
    counts = np.array([nb.size for nb in neighborhoods])
    core = counts >= config.min_pts
    labels = np.full(data.n, NOISE, dtype=np.int64)
    cluster = 0
    for start in range(data.n):
        if labels[start] != NOISE or not core[start]:
            continue
        labels[start] = cluster
        queue = deque([start])
        while queue:
            i = queue.popleft()
            if not core[i]:
                continue
            for j in neighborhoods[i]:
                if labels[j] == NOISE:
                    labels[j] = cluster
                    queue.append(j)
        cluster += 1
    return Clustering(labels, cluster)
