"""The cluster partition type shared by every algorithm in the library."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NOISE = -1


@dataclass(frozen=True)
class Clustering:
    """A partition of units 0..n-1 into labelled clusters.

    ``labels[i]`` is the cluster id of unit i, contiguous from 0.  Density
    methods may mark units as noise with label -1; everything else must
    be covered by exactly one non-empty cluster.
    """

    labels: np.ndarray
    num_clusters: int
    _members: list | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        validate_partition(labels, self.num_clusters)

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    @property
    def has_noise(self) -> bool:
        return bool((self.labels == NOISE).any())

    @property
    def members(self) -> list[np.ndarray]:
        """Per-cluster unit index lists, derived from labels and cached."""
        if self._members is None:
            order = np.argsort(self.labels, kind="stable")
            sorted_labels = self.labels[order]
            start = np.searchsorted(sorted_labels, np.arange(self.num_clusters))
            end = np.searchsorted(sorted_labels, np.arange(self.num_clusters), "right")
            members = [np.sort(order[s:e]) for s, e in zip(start, end)]
            object.__setattr__(self, "_members", members)
        return self._members

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels[self.labels >= 0], minlength=self.num_clusters)


def validate_partition(labels: np.ndarray, num_clusters: int) -> None:
    """Check the partition properties: spanning, disjoint, non-empty.

    Spanning and disjointness are structural with a label array (each
    unit has exactly one label); what can actually go wrong is a label
    outside [0, num_clusters) or an empty cluster id.  num_clusters of 0
    is allowed only for the all-noise result of a density method.
    """
    if labels.ndim != 1 or labels.shape[0] < 1:
        raise ValueError("labels must be a non-empty 1-D array")
    if num_clusters < 0:
        raise ValueError(f"num_clusters must be >= 0, got {num_clusters}")
    lo = labels.min()
    if lo < NOISE or labels.max() >= num_clusters:
        raise ValueError(
            f"labels must lie in [-1, {num_clusters}), got range [{lo}, {labels.max()}]"
        )
    if num_clusters > 0:
        counts = np.bincount(labels[labels >= 0], minlength=num_clusters)
        if (counts == 0).any():
            empty = int(np.flatnonzero(counts == 0)[0])
            raise ValueError(f"cluster {empty} is empty; ids must be contiguous")


def relabel_by_first_occurrence(raw: np.ndarray) -> Clustering:
    """Canonicalize arbitrary labels to contiguous ids in scan order.

    Noise labels (-1) pass through unchanged.
    """
    labels = np.full(raw.shape[0], NOISE, dtype=np.int64)
    mapping: dict[int, int] = {}
    for i, value in enumerate(raw):
        v = int(value)
        if v == NOISE:
            continue
        if v not in mapping:
            mapping[v] = len(mapping)
        labels[i] = mapping[v]
    return Clustering(labels, len(mapping))
