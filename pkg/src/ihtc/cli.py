"""Command-line front end.

Subcommands: ``tc`` (one threshold clustering), ``itis`` (instance
selection, writing per-level prototype and parent-map files), ``ihtc``
(the full hybrid pipeline), ``bench`` (the simulation harness), and
``aggregate`` (summarise a bench report).  Exit codes: 0 success, 1
configuration error, 2 infeasible run.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

from . import metrics
from .bench import (
    SCENARIO_CSV,
    SCENARIO_GAUSSIAN,
    BenchSpec,
    bench_aggregate,
    bench_run,
)
from .clusterers import DbscanConfig, KMeansConfig, INIT_RANDOM_UNITS, INIT_KMEANS_PP, LINKAGES
from .clustering import Clustering
from .dataset import load_csv, pca_project, save_csv, standardize
from .itis import CENTER_CENTROID, CENTER_MEDOID, itis_run
from .pipeline import BASES, HacConfig, IhtcConfig, InfeasibleRunError, ihtc_run
from .threshold import threshold_cluster

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2


def _add_input_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", required=True, help="input CSV file")
    parser.add_argument(
        "--no-header", action="store_true", help="input CSV has no header row"
    )
    parser.add_argument(
        "--columns",
        help="comma-separated column names (or 0-based indices) to use",
    )
    parser.add_argument(
        "--metric",
        choices=list(metrics.METRICS),
        default=metrics.EUCLIDEAN,
        help="dissimilarity measure",
    )
    parser.add_argument(
        "--standardize",
        action="store_true",
        help="z-score columns before clustering",
    )
    parser.add_argument(
        "--pca",
        type=int,
        metavar="COMPONENTS",
        help="project onto this many principal components",
    )
    parser.add_argument(
        "--pca-order",
        choices=["standardize-first", "pca-first"],
        default="standardize-first",
        help="order of standardization and PCA when both are requested",
    )


def _load_input(args) -> Dataset:
    columns = None
    if args.columns:
        columns = [
            int(c) if c.strip().lstrip("-").isdigit() else c.strip()
            for c in args.columns.split(",")
        ]
    data = load_csv(args.input, has_header=not args.no_header, selected_columns=columns)
    steps = []
    if args.standardize:
        steps.append("standardize")
    if args.pca is not None:
        steps.append("pca")
    if args.pca_order == "pca-first":
        steps.reverse()
    for step in steps:
        data = standardize(data) if step == "standardize" else pca_project(data, args.pca)
    return data


def _write_labels(clustering: Clustering, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["unit_index", "cluster_id"])
        for i, label in enumerate(clustering.labels):
            writer.writerow([i, int(label)])


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(","))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ihtc",
        description="Threshold clustering, instance selection, and hybrid pipelines",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_tc = sub.add_parser("tc", help="one threshold clustering pass")
    _add_input_flags(p_tc)
    p_tc.add_argument("--t-star", type=int, required=True, help="minimum cluster size")
    p_tc.add_argument("--out", required=True, help="labels CSV to write")
    p_tc.add_argument(
        "--dump-graph",
        metavar="PATH",
        help="also write the neighbour graph as 'i j weight' lines",
    )

    p_itis = sub.add_parser("itis", help="iterated threshold instance selection")
    _add_input_flags(p_itis)
    p_itis.add_argument("--t-star", type=int, required=True)
    stop = p_itis.add_mutually_exclusive_group(required=True)
    stop.add_argument("--iterations", type=int, help="number of reduction levels")
    stop.add_argument("--alpha", type=float, help="stop once reduced by this factor")
    p_itis.add_argument(
        "--center",
        choices=[CENTER_CENTROID, CENTER_MEDOID],
        default=CENTER_CENTROID,
    )
    p_itis.add_argument(
        "--out-prefix",
        required=True,
        help="write PREFIX_levelL.csv and PREFIX_levelL_parents.csv per level",
    )

    p_run = sub.add_parser("ihtc", help="reduce, cluster prototypes, back out labels")
    _add_input_flags(p_run)
    p_run.add_argument("--t-star", type=int, default=2)
    p_run.add_argument("--iterations", type=int, default=1, help="reduction levels (0 = none)")
    p_run.add_argument("--base", choices=list(BASES), default="kmeans")
    p_run.add_argument("--k", type=int, default=3, help="clusters for kmeans/hac")
    p_run.add_argument("--linkage", choices=list(LINKAGES), default="ward")
    p_run.add_argument("--eps", type=float, default=0.5, help="dbscan radius")
    p_run.add_argument("--min-pts", type=int, default=5, help="dbscan density threshold")
    p_run.add_argument(
        "--kmeans-init",
        choices=[INIT_RANDOM_UNITS, INIT_KMEANS_PP],
        default=INIT_RANDOM_UNITS,
    )
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument(
        "--center",
        choices=[CENTER_CENTROID, CENTER_MEDOID],
        default=CENTER_CENTROID,
    )
    p_run.add_argument("--out", required=True, help="labels CSV to write")
    p_run.add_argument("--report", help="JSON instrumentation report to write")

    p_bench = sub.add_parser("bench", help="benchmark harness")
    p_bench.add_argument(
        "--scenario",
        choices=[SCENARIO_GAUSSIAN, SCENARIO_CSV],
        default=SCENARIO_GAUSSIAN,
    )
    p_bench.add_argument("--input", help="CSV input for the csv-file scenario")
    p_bench.add_argument("--n", type=_int_list, default=(10_000,), help="dataset sizes")
    p_bench.add_argument("--t-star", type=_int_list, default=(2,), help="size thresholds")
    p_bench.add_argument("--m", type=_int_list, default=(0, 1), help="reduction levels")
    p_bench.add_argument("--base", choices=list(BASES), default="kmeans")
    p_bench.add_argument("--k", type=int, default=3)
    p_bench.add_argument("--linkage", choices=list(LINKAGES), default="ward")
    p_bench.add_argument("--eps", type=float, default=0.5)
    p_bench.add_argument("--min-pts", type=int, default=5)
    p_bench.add_argument(
        "--kmeans-init",
        choices=[INIT_RANDOM_UNITS, INIT_KMEANS_PP],
        default=INIT_RANDOM_UNITS,
    )
    p_bench.add_argument("--replicates", type=int, default=50)
    p_bench.add_argument("--seed-base", type=int, default=0)
    p_bench.add_argument("--standardize", action="store_true")
    p_bench.add_argument("--memory-budget-gb", type=float, default=8.0)
    p_bench.add_argument("--resume", action="store_true", help="skip rows already in --out")
    p_bench.add_argument("--workers", type=int, default=1)
    p_bench.add_argument("--out", required=True, help="report CSV to write")

    p_agg = sub.add_parser("aggregate", help="summarise a bench report")
    p_agg.add_argument("--input", required=True, help="bench report CSV")
    p_agg.add_argument("--out", required=True, help="aggregated CSV to write")
    p_agg.add_argument("--pivot-prefix", help="also write per-measure pivot CSVs")

    return parser


def _cmd_tc(args) -> int:
    data = _load_input(args)
    if args.dump_graph:
        from .knn_graph import build_knn, write_edge_list

        graph = build_knn(data, args.t_star - 1, args.metric)
        write_edge_list(graph, args.dump_graph)
        result = threshold_cluster(data, args.t_star, metric=args.metric, graph=graph)
    else:
        result = threshold_cluster(data, args.t_star, metric=args.metric)
    _write_labels(result.clustering, args.out)
    print(
        f"{result.clustering.num_clusters} clusters over {data.n} units;"
        f" bottleneck edge {result.graph_max_edge:.6g}"
    )
    return EXIT_OK


def _cmd_itis(args) -> int:
    data = _load_input(args)
    hierarchy = itis_run(
        data,
        args.t_star,
        iterations=args.iterations,
        reduction_factor=args.alpha,
        metric=args.metric,
        center_rule=args.center,
    )
    for level_index, level in enumerate(hierarchy.levels, start=1):
        save_csv(level.prototypes, f"{args.out_prefix}_level{level_index}.csv")
        parents_path = f"{args.out_prefix}_level{level_index}_parents.csv"
        with open(parents_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["unit_index", "prototype_index"])
            for i, p in enumerate(level.parent_map):
                writer.writerow([i, int(p)])
    sizes = hierarchy.level_sizes()
    note = " (stopped early: data exhausted)" if hierarchy.early_stopped else ""
    print(f"level sizes: {' -> '.join(str(s) for s in sizes)}{note}")
    return EXIT_OK


def _cmd_ihtc(args) -> int:
    data = _load_input(args)
    if args.base == "kmeans":
        base_config = KMeansConfig(k=args.k, init=args.kmeans_init, seed=args.seed)
    elif args.base == "hac":
        base_config = HacConfig(k=args.k, linkage=args.linkage)
    else:
        base_config = DbscanConfig(epsilon=args.eps, min_pts=args.min_pts)
    config = IhtcConfig(
        t_star=args.t_star,
        iterations=args.iterations,
        base=args.base,
        base_config=base_config,
        metric=args.metric,
        center_rule=args.center,
    )
    result = ihtc_run(data, config)
    _write_labels(result.clustering, args.out)
    if args.report:
        from .evaluation import bss_tss

        report = {
            "n": data.n,
            "t_star": args.t_star,
            "iterations": args.iterations,
            "base": args.base,
            "prototype_count": result.prototype_count,
            "prototype_counts_per_level": result.hierarchy.level_sizes(),
            "timings_seconds": result.timings,
            "memory_by_phase_bytes": result.memory_by_phase,
            "peak_memory_bytes": result.peak_memory_bytes,
            "bss_tss": bss_tss(data, result.clustering),
            "base_detail": result.base_detail,
        }
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
    print(
        f"{result.clustering.num_clusters} clusters over {data.n} units"
        f" via {result.prototype_count} prototypes"
        f" in {result.timings['total']:.3f}s"
    )
    return EXIT_OK


def _cmd_bench(args) -> int:
    if args.scenario == SCENARIO_CSV and not args.input:
        print("error: --input is required for the csv-file scenario", file=sys.stderr)
        return EXIT_CONFIG
    spec = BenchSpec(
        scenario=args.scenario,
        n_values=args.n,
        t_star_values=args.t_star,
        m_values=args.m,
        base=args.base,
        k=args.k,
        linkage=args.linkage,
        epsilon=args.eps,
        min_pts=args.min_pts,
        kmeans_init=args.kmeans_init,
        replicates=args.replicates,
        seed_base=args.seed_base,
        csv_path=args.input,
        standardize_input=args.standardize,
        memory_budget_bytes=int(args.memory_budget_gb * (1 << 30)),
    )
    report = bench_run(spec, args.out, resume=args.resume, workers=args.workers)
    ok = sum(1 for r in report.rows if r["status"] == "ok")
    print(f"{ok} rows ok, {len(report.rows) - ok} infeasible -> {report.path}")
    return EXIT_OK


def _cmd_aggregate(args) -> int:
    rows = bench_aggregate(args.input, args.out, pivot_prefix=args.pivot_prefix)
    print(f"{len(rows)} aggregated configurations -> {args.out}")
    return EXIT_OK


_COMMANDS = {
    "tc": _cmd_tc,
    "itis": _cmd_itis,
    "ihtc": _cmd_ihtc,
    "bench": _cmd_bench,
    "aggregate": _cmd_aggregate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except InfeasibleRunError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValueError, FileNotFoundError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
