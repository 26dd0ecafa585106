"""The hybrid pipeline: reduce with instance selection, cluster the
prototypes with a base algorithm, push labels back to all units.

With zero reduction levels the base clusterer runs directly on the raw
data, which is the natural baseline to compare against.  Each phase is
timed separately and, when enabled, its allocator high-water mark is
recorded, because the whole point of the reduction is to shrink what the
base clusterer has to touch.
"""

from __future__ import annotations

import time
import tracemalloc
from dataclasses import dataclass, field

from . import metrics
from .clustering import Clustering
from .clusterers import (
    DbscanConfig,
    KMeansConfig,
    cut_dendrogram,
    dbscan,
    hac,
    kmeans,
)
from .dataset import Dataset
from .itis import (
    CENTER_CENTROID,
    HierarchyLevel,
    PrototypeHierarchy,
    back_out,
    make_prototypes,
)
from .knn_graph import build_knn
from .threshold import SEED_ORDER_INDEX, threshold_cluster

BASE_KMEANS = "kmeans"
BASE_HAC = "hac"
BASE_DBSCAN = "dbscan"
BASES = (BASE_KMEANS, BASE_HAC, BASE_DBSCAN)

PHASES = ("graph", "tc", "prototypes", "base", "back_out")


class InfeasibleRunError(RuntimeError):
    """The requested configuration cannot run on this data."""


@dataclass(frozen=True)
class HacConfig:
    """Agglomerative base: linkage rule plus the cut producing k clusters."""

    k: int
    linkage: str = "ward"
    cap: int = 20_000

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class IhtcConfig:
    """Hybrid run settings.

    ``iterations`` is the number of reduction levels; 0 means the base
    clusterer runs on the raw data.  ``base_config`` must match ``base``:
    KMeansConfig, HacConfig, or DbscanConfig.
    """

    t_star: int
    iterations: int
    base: str
    base_config: KMeansConfig | HacConfig | DbscanConfig
    metric: str = metrics.EUCLIDEAN
    center_rule: str = CENTER_CENTROID
    seed_order: str = SEED_ORDER_INDEX

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if self.iterations >= 1 and self.t_star < 2:
            raise ValueError("t_star must be >= 2 when reduction levels run")
        if self.base not in BASES:
            raise ValueError(f"unknown base {self.base!r}; expected one of {BASES}")
        expected = {
            BASE_KMEANS: KMeansConfig,
            BASE_HAC: HacConfig,
            BASE_DBSCAN: DbscanConfig,
        }[self.base]
        if not isinstance(self.base_config, expected):
            raise ValueError(
                f"base {self.base!r} needs a {expected.__name__},"
                f" got {type(self.base_config).__name__}"
            )


@dataclass
class IhtcResult:
    """Clustering over all n units plus instrumentation.

    ``timings`` has one entry per phase and a ``total``; ``memory_by_phase``
    holds each phase's allocator high-water mark in bytes (zeros when
    memory tracking was off) and ``peak_memory_bytes`` their maximum.
    Memory numbers are best effort: they track what this process
    allocates through the Python allocator while the phase runs.
    """

    clustering: Clustering
    hierarchy: PrototypeHierarchy
    prototype_count: int
    timings: dict
    memory_by_phase: dict
    peak_memory_bytes: int
    base_detail: dict = field(default_factory=dict)


class _PhaseMeter:
    """Accumulates wall-clock seconds and allocator peaks per phase.

    Per-phase peaks are net of the allocations alive when the phase
    starts (earlier phases' structures, like the neighbour graph, stay
    alive across phases), so each number is what that phase itself piled
    on top.  ``absolute_peak`` is the plain high-water mark of the whole
    run.
    """

    def __init__(self, track_memory: bool):
        self.seconds = dict.fromkeys(PHASES, 0.0)
        self.peaks = dict.fromkeys(PHASES, 0)
        self.absolute_peak = 0
        self.track_memory = track_memory
        self._started_tracing = False
        if track_memory and not tracemalloc.is_tracing():
            tracemalloc.start()
            self._started_tracing = True

    def run(self, phase: str, fn):
        if self.track_memory:
            tracemalloc.reset_peak()
            baseline = tracemalloc.get_traced_memory()[0]
        t0 = time.perf_counter()
        out = fn()
        self.seconds[phase] += time.perf_counter() - t0
        if self.track_memory:
            _, peak = tracemalloc.get_traced_memory()
            self.peaks[phase] = max(self.peaks[phase], int(peak) - int(baseline))
            self.absolute_peak = max(self.absolute_peak, int(peak))
        return out

    def close(self):
        if self._started_tracing:
            tracemalloc.stop()


def _cluster_prototypes(data: Dataset, config: IhtcConfig):
    """Run the base clusterer; returns (Clustering, detail dict)."""
    if config.base == BASE_KMEANS:
        result = kmeans(data, config.base_config)
        return result.clustering, {
            "wcss": result.wcss,
            "iterations_used": result.iterations_used,
        }
    if config.base == BASE_HAC:
        dendrogram = hac(data, config.base_config.linkage, config.base_config.cap)
        return cut_dendrogram(dendrogram, config.base_config.k), {
            "linkage": config.base_config.linkage
        }
    clustering = dbscan(data, config.base_config, config.metric)
    return clustering, {"num_clusters": clustering.num_clusters}


def ihtc_run(
    data: Dataset, config: IhtcConfig, track_memory: bool = True
) -> IhtcResult:
    """Reduce, cluster the prototypes, back the labels out.

    Raises :class:`InfeasibleRunError` when the data runs out before the
    requested number of reduction levels, or when the reduction leaves
    fewer prototypes than the base clusterer needs; the message reports
    the deepest iteration count that is feasible for this data.
    """
    meter = _PhaseMeter(track_memory)
    try:
        total0 = time.perf_counter()
        hierarchy = PrototypeHierarchy(
            base=data,
            levels=[],
            t_star=config.t_star,
            center_rule=config.center_rule,
        )
        current = data
        for _ in range(config.iterations):
            if current.n < config.t_star:
                hierarchy.early_stopped = True
                raise InfeasibleRunError(
                    f"data exhausted after {hierarchy.num_levels} of"
                    f" {config.iterations} requested iterations"
                )
            level_data = current
            graph = meter.run(
                "graph",
                lambda: build_knn(level_data, config.t_star - 1, config.metric),
            )
            tc = meter.run(
                "tc",
                lambda: threshold_cluster(
                    level_data,
                    config.t_star,
                    metric=config.metric,
                    seed_order=config.seed_order,
                    graph=graph,
                ),
            )
            prototypes, parent_map = meter.run(
                "prototypes",
                lambda: make_prototypes(
                    level_data, tc.clustering, config.center_rule, config.metric
                ),
            )
            hierarchy.levels.append(
                HierarchyLevel(prototypes=prototypes, parent_map=parent_map)
            )
            current = prototypes

        need = None
        if config.base in (BASE_KMEANS, BASE_HAC):
            need = config.base_config.k
        if need is not None and current.n < need:
            feasible = _max_feasible_iterations(hierarchy, need)
            raise InfeasibleRunError(
                f"{current.n} prototypes after {hierarchy.num_levels}"
                f" iterations is fewer than k={need};"
                f" at most {feasible} iterations are feasible here"
            )

        base_clustering, detail = meter.run(
            "base", lambda: _cluster_prototypes(current, config)
        )
        if config.iterations == 0:
            final = base_clustering
        else:
            final = meter.run("back_out", lambda: back_out(hierarchy, base_clustering))
        total = time.perf_counter() - total0
    finally:
        meter.close()

    timings = dict(meter.seconds)
    timings["total"] = total
    return IhtcResult(
        clustering=final,
        hierarchy=hierarchy,
        prototype_count=current.n,
        timings=timings,
        memory_by_phase=dict(meter.peaks),
        peak_memory_bytes=meter.absolute_peak,
        base_detail=detail,
    )


def _max_feasible_iterations(hierarchy: PrototypeHierarchy, need: int) -> int:
    feasible = 0
    for level, size in enumerate(hierarchy.level_sizes()):
        if size >= need:
            feasible = level
    return feasible
