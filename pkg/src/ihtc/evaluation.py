"""Cluster quality measures: matched prediction accuracy and BSS/TSS."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .clustering import Clustering
from .clusterers import KMeansConfig, kmeans
from .dataset import Dataset


def prediction_accuracy(predicted: Clustering, truth: np.ndarray) -> float:
    """Best-case fraction of units whose cluster matches its true class.

    Cluster ids carry no meaning, so agreement is maximised over bijective
    matchings between predicted clusters and true classes (solved as an
    assignment problem, optimal for any cluster count).  Noise-labelled
    units can never match and count against the score.
    """
    truth = np.asarray(truth, dtype=np.int64)
    if truth.ndim != 1 or truth.shape[0] != predicted.n:
        raise ValueError(
            f"length mismatch: {predicted.n} predictions vs {truth.shape[0]} truths"
        )
    if truth.min() < 0:
        raise ValueError("true labels must be non-negative")
    mask = predicted.labels >= 0
    num_true = int(truth.max()) + 1
    contingency = np.zeros((max(predicted.num_clusters, 1), num_true))
    np.add.at(contingency, (predicted.labels[mask], truth[mask]), 1.0)
    rows, cols = linear_sum_assignment(contingency, maximize=True)
    return float(contingency[rows, cols].sum() / predicted.n)


def bss_tss(data: Dataset, clustering: Clustering) -> float:
    """Ratio of between-cluster to total sum of squares, in [0, 1].

    Noise-labelled units are excluded from both sums.  The decomposition
    TSS = BSS + WCSS is recomputed and verified on every call; all points
    identical (TSS = 0) yields 0 by convention.
    """
    if clustering.n != data.n:
        raise ValueError("clustering does not cover this dataset")
    mask = clustering.labels >= 0
    if not mask.any():
        return 0.0
    x = data.values[mask]
    labels = clustering.labels[mask]
    grand = x.mean(axis=0)
    tss = float(((x - grand) ** 2).sum())
    if tss == 0.0:
        return 0.0
    nc = clustering.num_clusters
    counts = np.bincount(labels, minlength=nc).astype(np.float64)
    centroids = np.empty((nc, x.shape[1]))
    for col in range(x.shape[1]):
        centroids[:, col] = np.divide(
            np.bincount(labels, weights=x[:, col], minlength=nc),
            counts,
            out=np.zeros(nc),
            where=counts > 0,
        )
    bss = float((counts[:, None] * (centroids - grand) ** 2).sum())
    wcss = float(((x - centroids[labels]) ** 2).sum())
    if abs(tss - (bss + wcss)) > 1e-6 * tss:
        raise AssertionError(
            f"sum-of-squares identity violated: TSS={tss!r} BSS={bss!r} WCSS={wcss!r}"
        )
    return bss / tss


def elbow_scan(data: Dataset, k_range, config_template: KMeansConfig):
    """Within-cluster sum of squares for each k, for elbow plots.

    Every k reuses the template's seed and settings so the scan is
    reproducible; only k varies.  Returns a list of (k, wcss) pairs.
    """
    ks = list(k_range)
    if not ks:
        raise ValueError("k_range is empty")
    if max(ks) > data.n:
        raise ValueError(f"largest k={max(ks)} exceeds n={data.n}")
    out = []
    for k in ks:
        config = KMeansConfig(
            k=int(k),
            max_iterations=config_template.max_iterations,
            init=config_template.init,
            seed=config_template.seed,
            tolerance=config_template.tolerance,
        )
        out.append((int(k), kmeans(data, config).wcss))
    return out
