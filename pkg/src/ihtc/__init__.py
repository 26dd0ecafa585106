"""Threshold clustering, instance selection, and hybrid clustering pipelines.

The core primitive partitions data so every cluster holds at least
``t_star`` units while keeping the largest within-cluster dissimilarity
within a factor of four of the best possible.  Iterating it and keeping
one center per cluster shrinks a dataset geometrically; running an
ordinary clusterer (k-means, agglomerative, DBSCAN) on the reduced
points and pushing the labels back out then clusters the full dataset at
a fraction of the cost.
"""

from .bench import BenchReport, BenchSpec, bench_aggregate, bench_run, mixture_spec
from .clusterers import (
    DbscanConfig,
    Dendrogram,
    KMeansConfig,
    KMeansResult,
    cut_dendrogram,
    dbscan,
    hac,
    kmeans,
)
from .clustering import Clustering
from .dataset import (
    Dataset,
    GaussianMixtureSpec,
    generate_gaussian_mixture,
    load_csv,
    pca_project,
    save_csv,
    standardize,
)
from .evaluation import bss_tss, elbow_scan, prediction_accuracy
from .itis import PrototypeHierarchy, back_out, itis_run, make_prototypes
from .knn_graph import (
    KnnGraph,
    build_knn,
    build_knn_bruteforce,
    build_knn_tree,
    within_walk_two,
    write_edge_list,
)
from .metrics import EUCLIDEAN, MANHATTAN, dissimilarity
from .pipeline import (
    HacConfig,
    IhtcConfig,
    IhtcResult,
    InfeasibleRunError,
    ihtc_run,
)
from .threshold import (
    TcResult,
    btpp_bruteforce,
    max_within_cluster_dissimilarity,
    threshold_cluster,
)

__version__ = "0.1.0"

__all__ = [
    "BenchReport",
    "BenchSpec",
    "Clustering",
    "Dataset",
    "DbscanConfig",
    "Dendrogram",
    "EUCLIDEAN",
    "GaussianMixtureSpec",
    "HacConfig",
    "IhtcConfig",
    "IhtcResult",
    "InfeasibleRunError",
    "KMeansConfig",
    "KMeansResult",
    "KnnGraph",
    "MANHATTAN",
    "PrototypeHierarchy",
    "TcResult",
    "back_out",
    "bench_aggregate",
    "bench_run",
    "bss_tss",
    "btpp_bruteforce",
    "build_knn",
    "build_knn_bruteforce",
    "build_knn_tree",
    "cut_dendrogram",
    "dbscan",
    "dissimilarity",
    "elbow_scan",
    "generate_gaussian_mixture",
    "hac",
    "ihtc_run",
    "itis_run",
    "kmeans",
    "load_csv",
    "make_prototypes",
    "max_within_cluster_dissimilarity",
    "mixture_spec",
    "pca_project",
    "prediction_accuracy",
    "save_csv",
    "standardize",
    "threshold_cluster",
    "within_walk_two",
    "write_edge_list",
]
