"""Threshold clustering: every cluster gets at least t_star units.

The algorithm grows clusters around a maximal independent set of the
second power of the (t_star - 1)-nearest-neighbour graph:

1. build the neighbour graph,
2. greedily pick seeds so no two are within a walk of length two and
   every other unit is,
3. each seed absorbs its graph neighbours,
4. leftover units attach to the closest reachable seed.

Seeds have at least t_star - 1 neighbours each, so every cluster meets
the size threshold, and walk lengths bound each cluster's diameter by
four times the largest graph edge.  That makes the construction a
4-approximation for the bottleneck objective (minimising the largest
within-cluster dissimilarity subject to the size threshold), which the
exhaustive optimiser below verifies on small instances.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import _kernels, knn_graph, metrics
from .clustering import Clustering
from .dataset import Dataset

SEED_ORDER_INDEX = "index"
SEED_ORDER_DEGREE = "degree"

# exhaustive partition enumeration is exponential; stay tiny
BTPP_MAX_N = 12


@dataclass(frozen=True)
class TcResult:
    """Outcome of one threshold clustering run.

    ``seeds[c]`` is the unit that anchored cluster c, and
    ``graph_max_edge`` is the largest edge weight of the neighbour graph
    used, which caps every cluster's diameter at four times its value.
    ``timings`` splits the wall-clock cost between graph construction and
    the clustering steps.
    """

    clustering: Clustering
    seeds: np.ndarray
    graph_max_edge: float
    timings: dict | None = None


def threshold_cluster(
    data: Dataset,
    t_star: int,
    metric: str = metrics.EUCLIDEAN,
    seed_order: str = SEED_ORDER_INDEX,
    graph: knn_graph.KnnGraph | None = None,
) -> TcResult:
    """Partition data so every cluster has at least ``t_star`` units.

    ``seed_order`` controls the greedy scan that picks seeds: ``index``
    (default, ascending unit index) or ``degree`` (ascending graph
    degree, ties by index).  Any maximal independent set of the graph's
    second power yields the same guarantees; a fixed order makes runs
    reproducible.  A prebuilt ``graph`` for the same data and
    k = t_star - 1 may be supplied to skip construction.
    """
    if t_star < 2:
        raise ValueError(f"t_star must be >= 2, got {t_star}")
    if data.n < t_star:
        raise ValueError(f"need at least t_star={t_star} units, got n={data.n}")

    t0 = time.perf_counter()
    if graph is None:
        graph = knn_graph.build_knn(data, t_star - 1, metric)
    elif graph.n != data.n or graph.k != t_star - 1:
        raise ValueError("supplied graph does not match data and t_star")
    t1 = time.perf_counter()

    n = data.n
    if seed_order == SEED_ORDER_INDEX:
        order = np.arange(n, dtype=np.int64)
    elif seed_order == SEED_ORDER_DEGREE:
        degrees = np.diff(graph.indptr)
        order = np.lexsort((np.arange(n), degrees)).astype(np.int64)
    else:
        raise ValueError(f"unknown seed_order {seed_order!r}")

    seeds = _kernels.greedy_seeds(graph.indptr, graph.indices, order)
    labels = _kernels.grow_from_seeds(graph.indptr, graph.indices, seeds, n)
    is_seed = np.zeros(n, dtype=np.uint8)
    is_seed[seeds] = 1
    unreached = _kernels.assign_remaining(
        graph.indptr,
        graph.indices,
        labels,
        seeds,
        is_seed,
        data.values,
        metrics.metric_code(metric),
    )
    if unreached:
        raise AssertionError(
            f"{unreached} units had no seed within walk length two;"
            " the seed set was not maximal"
        )
    t2 = time.perf_counter()

    clustering = Clustering(labels, int(seeds.shape[0]))
    return TcResult(
        clustering=clustering,
        seeds=seeds,
        graph_max_edge=graph.max_edge_weight,
        timings={"graph": t1 - t0, "steps": t2 - t1},
    )


def max_within_cluster_dissimilarity(
    data: Dataset, clustering: Clustering, metric: str = metrics.EUCLIDEAN
) -> float:
    """The bottleneck objective: the largest intra-cluster distance."""
    if clustering.n != data.n:
        raise ValueError("clustering does not cover this dataset")
    return float(
        _kernels.max_intra_cluster_dist(
            data.values,
            clustering.labels,
            clustering.num_clusters,
            metrics.metric_code(metric),
        )
    )


def btpp_bruteforce(data: Dataset, t_star: int, metric: str = metrics.EUCLIDEAN):
    """Exact optimum of the bottleneck threshold partitioning problem.

    Enumerates every partition whose blocks all hold >= t_star units and
    returns (optimal Clustering, lambda) where lambda is the smallest
    achievable maximum within-cluster dissimilarity.  Branch-and-bound
    pruning keeps the search fast for the n <= 12 instances it accepts;
    the answer is identical to full enumeration.
    """
    n = data.n
    if n > BTPP_MAX_N:
        raise ValueError(f"exhaustive search is capped at n={BTPP_MAX_N}, got {n}")
    if t_star < 2:
        raise ValueError(f"t_star must be >= 2, got {t_star}")
    if n < t_star:
        raise ValueError(f"need at least t_star={t_star} units, got n={n}")

    dist = metrics.pairwise_matrix(data.values, metric)
    best_value = np.inf
    best_assign: np.ndarray | None = None
    assign = np.full(n, -1, dtype=np.int64)
    block_max: list[float] = []
    block_size: list[int] = []

    def recurse(i: int, current_max: float) -> None:
        nonlocal best_value, best_assign
        if current_max >= best_value:
            return
        if i == n:
            if all(size >= t_star for size in block_size):
                best_value = current_max
                best_assign = assign.copy()
            return
        remaining = n - i
        deficit = sum(t_star - s for s in block_size if s < t_star)
        if deficit > remaining:
            return
        for b in range(len(block_size)):
            joined_max = block_max[b]
            for j in range(i):
                if assign[j] == b and dist[i, j] > joined_max:
                    joined_max = dist[i, j]
            candidate = max(current_max, joined_max)
            if candidate < best_value:
                assign[i] = b
                saved = block_max[b]
                block_max[b] = joined_max
                block_size[b] += 1
                recurse(i + 1, candidate)
                block_max[b] = saved
                block_size[b] -= 1
                assign[i] = -1
        if remaining >= t_star:
            assign[i] = len(block_size)
            block_size.append(1)
            block_max.append(0.0)
            recurse(i + 1, current_max)
            block_size.pop()
            block_max.pop()
            assign[i] = -1

    recurse(0, 0.0)
    assert best_assign is not None  # a single all-units block always qualifies
    clustering = Clustering(best_assign, int(best_assign.max()) + 1)
    return clustering, float(best_value)
