"""Iterated threshold instance selection.

Each round replaces the current points by one center per threshold
cluster, shrinking the data by at least a factor of t_star per level.
The per-level parent maps are kept so cluster labels assigned to the
final prototypes can be pushed back down to the original units.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .clustering import Clustering
from .dataset import Dataset
from .threshold import SEED_ORDER_INDEX, threshold_cluster

CENTER_CENTROID = "centroid"
CENTER_MEDOID = "medoid"
CENTER_RULES = (CENTER_CENTROID, CENTER_MEDOID)


@dataclass(frozen=True)
class HierarchyLevel:
    """Prototypes of one reduction level plus the child-to-parent map."""

    prototypes: Dataset
    parent_map: np.ndarray  # for each unit of the previous level, its prototype
    timings: dict = field(default_factory=dict, compare=False)


@dataclass
class PrototypeHierarchy:
    """Level 0 is the original data; level L >= 1 holds (t_star^L)-sized merges.

    ``early_stopped`` marks runs that ran out of points before reaching
    the requested depth or reduction factor.
    """

    base: Dataset
    levels: list[HierarchyLevel]
    t_star: int
    center_rule: str
    early_stopped: bool = False

    @property
    def num_levels(self) -> int:
        return len(self.levels)

    @property
    def top(self) -> Dataset:
        return self.levels[-1].prototypes if self.levels else self.base

    @property
    def prototype_count(self) -> int:
        return self.top.n

    def level_sizes(self) -> list[int]:
        return [self.base.n] + [lvl.prototypes.n for lvl in self.levels]

    def compose_parent_map(self) -> np.ndarray:
        """Map every original unit to its top-level prototype index."""
        mapping = np.arange(self.base.n, dtype=np.int64)
        for level in self.levels:
            mapping = level.parent_map[mapping]
        return mapping

    def descendant_counts(self) -> np.ndarray:
        """Number of original units merged into each top-level prototype."""
        return np.bincount(self.compose_parent_map(), minlength=self.prototype_count)


def make_prototypes(
    data: Dataset,
    clustering: Clustering,
    center_rule: str = CENTER_CENTROID,
    metric: str = metrics.EUCLIDEAN,
):
    """One center per cluster: coordinate-wise mean, or the medoid.

    The medoid is the member with the smallest summed dissimilarity to
    its cluster mates, ties to the lowest unit index.  Returns the
    prototype Dataset (row c = cluster c) and the unit-to-prototype map.
    """
    if clustering.n != data.n:
        raise ValueError("clustering does not cover this dataset")
    if clustering.has_noise:
        raise ValueError("prototype formation requires a noise-free clustering")
    labels = clustering.labels
    nc = clustering.num_clusters
    if center_rule == CENTER_CENTROID:
        counts = np.bincount(labels, minlength=nc).astype(np.float64)
        centers = np.empty((nc, data.d))
        for col in range(data.d):
            centers[:, col] = (
                np.bincount(labels, weights=data.values[:, col], minlength=nc) / counts
            )
    elif center_rule == CENTER_MEDOID:
        centers = np.empty((nc, data.d))
        for c, members in enumerate(clustering.members):
            block = data.values[members]
            dsums = metrics.pairwise_matrix(block, metric).sum(axis=1)
            centers[c] = block[int(np.argmin(dsums))]  # argmin takes lowest index on ties
    else:
        raise ValueError(f"unknown center_rule {center_rule!r}; expected {CENTER_RULES}")
    return Dataset(centers), labels.copy()


def itis_run(
    data: Dataset,
    t_star: int,
    iterations: int | None = None,
    reduction_factor: float | None = None,
    metric: str = metrics.EUCLIDEAN,
    center_rule: str = CENTER_CENTROID,
    seed_order: str = SEED_ORDER_INDEX,
) -> PrototypeHierarchy:
    """Repeated threshold clustering + prototype formation.

    Exactly one stopping rule must be given: ``iterations`` runs that
    many levels, ``reduction_factor`` stops at the first level whose
    prototype count is at most n / reduction_factor.  Either way the run
    stops early (flagged, not an error) once fewer than t_star points
    remain, since no further threshold clustering is possible.
    """
    if (iterations is None) == (reduction_factor is None):
        raise ValueError("give exactly one of iterations or reduction_factor")
    if iterations is not None and iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    if reduction_factor is not None and reduction_factor <= 1.0:
        raise ValueError(f"reduction_factor must be > 1, got {reduction_factor}")
    if data.n < t_star:
        raise ValueError(f"need at least t_star={t_star} units, got n={data.n}")

    target = None if reduction_factor is None else data.n / reduction_factor
    hierarchy = PrototypeHierarchy(
        base=data, levels=[], t_star=t_star, center_rule=center_rule
    )
    current = data
    while True:
        if iterations is not None and hierarchy.num_levels >= iterations:
            break
        if target is not None and current.n <= target:
            break
        if current.n < t_star:
            hierarchy.early_stopped = True
            break
        tc = threshold_cluster(current, t_star, metric=metric, seed_order=seed_order)
        t0 = time.perf_counter()
        protos, parent_map = make_prototypes(
            current, tc.clustering, center_rule, metric
        )
        proto_seconds = time.perf_counter() - t0
        if protos.n * t_star > current.n:
            raise AssertionError(
                f"level produced {protos.n} prototypes from {current.n} units,"
                f" violating the 1/{t_star} reduction bound"
            )
        timings = dict(tc.timings or {})
        timings["prototypes"] = proto_seconds
        hierarchy.levels.append(
            HierarchyLevel(prototypes=protos, parent_map=parent_map, timings=timings)
        )
        current = protos
    return hierarchy


def back_out(hierarchy: PrototypeHierarchy, top_labels) -> Clustering:
    """Push prototype cluster labels down to the original units.

    ``top_labels`` is a Clustering of the top-level prototypes or a raw
    label array of that length; noise labels (-1) propagate to all
    descendants of a noise prototype.
    """
    if isinstance(top_labels, Clustering):
        num_clusters = top_labels.num_clusters
        labels = top_labels.labels
    else:
        labels = np.ascontiguousarray(top_labels, dtype=np.int64)
        num_clusters = int(labels.max()) + 1 if (labels >= 0).any() else 0
    if labels.shape[0] != hierarchy.prototype_count:
        raise ValueError(
            f"got {labels.shape[0]} labels for {hierarchy.prototype_count}"
            " top-level prototypes"
        )
    return Clustering(labels[hierarchy.compose_parent_map()], num_clusters)
