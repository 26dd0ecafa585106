"""Benchmark harness: sweeps of (n, t_star, m) over a base clusterer.

Rows are produced in a fixed canonical order with per-replicate derived
seeds, streamed to CSV as they complete, and a crashed run can be
resumed without changing a byte of the final file.  The built-in
scenario draws from a three-component bivariate Gaussian mixture with
known component labels, so prediction accuracy can be scored; the
csv-file scenario benchmarks user data and reports BSS/TSS only.
"""

from __future__ import annotations

import csv
import math
import os
import time
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels, metrics
from .clusterers import DbscanConfig, KMeansConfig, INIT_RANDOM_UNITS
from .dataset import (
    Dataset,
    GaussianMixtureSpec,
    generate_gaussian_mixture,
    load_csv,
    standardize,
)
from .evaluation import bss_tss, prediction_accuracy
from .itis import CENTER_CENTROID
from .pipeline import (
    BASE_HAC,
    BASE_KMEANS,
    BASES,
    HacConfig,
    IhtcConfig,
    InfeasibleRunError,
    ihtc_run,
)

SCENARIO_GAUSSIAN = "gaussian-mixture"
SCENARIO_CSV = "csv-file"

# the simulation mixture: three bivariate Gaussians with weights
# 0.5/0.3/0.2, means (1,2), (7,8), (3,5), diagonal variances
# (1,0.5), (2,1), (3,4)
MIXTURE_WEIGHTS = (0.5, 0.3, 0.2)
MIXTURE_MEANS = ((1.0, 2.0), (7.0, 8.0), (3.0, 5.0))
MIXTURE_VARIANCES = ((1.0, 0.5), (2.0, 1.0), (3.0, 4.0))


def mixture_spec(seed: int) -> GaussianMixtureSpec:
    """The benchmark's default three-component mixture with a given seed."""
    return GaussianMixtureSpec(
        weights=np.array(MIXTURE_WEIGHTS),
        means=np.array(MIXTURE_MEANS),
        variances=np.array(MIXTURE_VARIANCES),
        seed=seed,
    )


COLUMNS = [
    "n",
    "t_star",
    "m",
    "base",
    "replicate",
    "status",
    "data_seconds",
    "graph_seconds",
    "tc_seconds",
    "prototypes_seconds",
    "base_seconds",
    "back_out_seconds",
    "total_seconds",
    "graph_peak_bytes",
    "tc_peak_bytes",
    "prototypes_peak_bytes",
    "base_peak_bytes",
    "back_out_peak_bytes",
    "peak_memory_bytes",
    "prototype_count",
    "accuracy",
    "bss_tss",
]

MEASURES = [
    "data_seconds",
    "graph_seconds",
    "tc_seconds",
    "prototypes_seconds",
    "base_seconds",
    "back_out_seconds",
    "total_seconds",
    "graph_peak_bytes",
    "tc_peak_bytes",
    "prototypes_peak_bytes",
    "base_peak_bytes",
    "back_out_peak_bytes",
    "peak_memory_bytes",
    "prototype_count",
    "accuracy",
    "bss_tss",
]


@dataclass(frozen=True)
class BenchSpec:
    """One benchmark campaign: the Cartesian product of the value lists."""

    scenario: str = SCENARIO_GAUSSIAN
    n_values: tuple = (10_000,)
    t_star_values: tuple = (2,)
    m_values: tuple = (0, 1)
    base: str = BASE_KMEANS
    k: int = 3
    linkage: str = "ward"
    hac_cap: int = 20_000
    epsilon: float = 0.5
    min_pts: int = 5
    kmeans_init: str = INIT_RANDOM_UNITS
    kmeans_max_iterations: int = 300
    kmeans_tolerance: float = 0.0
    metric: str = metrics.EUCLIDEAN
    center_rule: str = CENTER_CENTROID
    replicates: int = 1
    seed_base: int = 0
    csv_path: str | None = None
    standardize_input: bool = False
    memory_budget_bytes: int = 8 << 30

    def __post_init__(self):
        if self.scenario not in (SCENARIO_GAUSSIAN, SCENARIO_CSV):
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.scenario == SCENARIO_CSV and not self.csv_path:
            raise ValueError("csv-file scenario needs csv_path")
        for name in ("n_values", "t_star_values", "m_values"):
            if not tuple(getattr(self, name)):
                raise ValueError(f"{name} must be non-empty")
        if self.replicates < 1:
            raise ValueError(f"replicates must be >= 1, got {self.replicates}")
        if self.base not in BASES:
            raise ValueError(f"unknown base {self.base!r}")


@dataclass
class BenchReport:
    columns: list
    rows: list  # list of dicts, one per configuration x replicate
    path: str


def _derived_seeds(seed_base: int, n: int, replicate: int):
    """Two independent 63-bit seeds per (campaign, n, replicate) cell.

    Replicates never share streams, and the same replicate sees the same
    data across t_star and m values so comparisons are paired.
    """
    ss = np.random.SeedSequence([seed_base, n, replicate])
    data_state, base_state = ss.generate_state(2, dtype=np.uint64)
    return int(data_state >> 1), int(base_state >> 1)


def _estimate_bytes(n: int, d: int, t_star: int) -> int:
    # data + neighbour candidates + CSR adjacency, with slack for copies
    per_unit = 8 * d * 6 + 24 * (t_star + 2) * 2
    return n * per_unit


def check_feasible(spec: BenchSpec, d: int = 2) -> None:
    """Refuse campaigns whose largest cell would blow the memory budget,
    or whose hac cells cannot be guaranteed under the quadratic cap.

    Each reduction level shrinks the data by at least t_star, so a hac
    cell is provably safe once n / t_star**m fits under the cap; the
    error reports that minimum m.
    """
    estimate = _estimate_bytes(max(spec.n_values), d, max(spec.t_star_values))
    if estimate > spec.memory_budget_bytes:
        raise InfeasibleRunError(
            f"estimated {estimate} bytes for n={max(spec.n_values)},"
            f" t_star={max(spec.t_star_values)} exceeds the budget of"
            f" {spec.memory_budget_bytes} bytes"
        )
    if spec.base == BASE_HAC:
        for n in spec.n_values:
            for t_star in spec.t_star_values:
                for m in spec.m_values:
                    if n / max(t_star, 2) ** m <= spec.hac_cap:
                        continue
                    need_m = math.ceil(math.log(n / spec.hac_cap, max(t_star, 2)))
                    raise InfeasibleRunError(
                        f"hac base at n={n}, t_star={t_star}, m={m} may exceed"
                        f" the cap of {spec.hac_cap} prototypes; use at least"
                        f" m={need_m} reduction levels (or raise the cap)"
                    )


def _base_config(spec: BenchSpec, base_seed: int):
    if spec.base == BASE_KMEANS:
        return KMeansConfig(
            k=spec.k,
            max_iterations=spec.kmeans_max_iterations,
            init=spec.kmeans_init,
            seed=base_seed,
            tolerance=spec.kmeans_tolerance,
        )
    if spec.base == BASE_HAC:
        return HacConfig(k=spec.k, linkage=spec.linkage, cap=spec.hac_cap)
    return DbscanConfig(epsilon=spec.epsilon, min_pts=spec.min_pts)


def _load_csv_dataset(spec: BenchSpec) -> tuple[Dataset, None]:
    data = load_csv(spec.csv_path)
    if spec.standardize_input:
        data = standardize(data)
    return data, None


def compute_row(spec: BenchSpec, n: int, t_star: int, m: int, replicate: int) -> dict:
    """Run one configuration cell and return its CSV row values."""
    data_seed, base_seed = _derived_seeds(spec.seed_base, n, replicate)
    t0 = time.perf_counter()
    if spec.scenario == SCENARIO_GAUSSIAN:
        data, truth = generate_gaussian_mixture(mixture_spec(data_seed), n)
    else:
        data, truth = _load_csv_dataset(spec)
    data_seconds = time.perf_counter() - t0

    row = {
        "n": str(data.n),
        "t_star": str(t_star),
        "m": str(m),
        "base": spec.base,
        "replicate": str(replicate),
        "status": "ok",
        "data_seconds": f"{data_seconds:.6f}",
    }
    config = IhtcConfig(
        t_star=t_star,
        iterations=m,
        base=spec.base,
        base_config=_base_config(spec, base_seed),
        metric=spec.metric,
        center_rule=spec.center_rule,
    )
    try:
        result = ihtc_run(data, config)
    except InfeasibleRunError:
        row["status"] = "infeasible"
        for name in COLUMNS:
            row.setdefault(name, "")
        return row

    for phase in ("graph", "tc", "prototypes", "base", "back_out"):
        row[f"{phase}_seconds"] = f"{result.timings[phase]:.6f}"
        row[f"{phase}_peak_bytes"] = str(result.memory_by_phase[phase])
    row["total_seconds"] = f"{result.timings['total']:.6f}"
    row["peak_memory_bytes"] = str(result.peak_memory_bytes)
    row["prototype_count"] = str(result.prototype_count)
    row["accuracy"] = (
        f"{prediction_accuracy(result.clustering, truth):.6f}" if truth is not None else ""
    )
    row["bss_tss"] = f"{bss_tss(data, result.clustering):.6f}"
    return row


def _row_key(n: int, t_star: int, m: int, replicate: int) -> tuple:
    return (n, t_star, m, replicate)


def canonical_cells(spec: BenchSpec):
    for n in spec.n_values:
        for t_star in spec.t_star_values:
            for m in spec.m_values:
                for replicate in range(spec.replicates):
                    yield n, t_star, m, replicate


def _format_line(row: dict) -> str:
    return ",".join(row[c] for c in COLUMNS)


def _read_existing(path: str) -> dict:
    existing = {}
    if not os.path.exists(path):
        return existing
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != ",".join(COLUMNS):
            raise ValueError(f"{path}: header does not match this report format")
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(COLUMNS):
                continue  # torn trailing write from a crash; recompute it
            key = (int(parts[0]), int(parts[1]), int(parts[2]), int(parts[4]))
            existing[key] = line
    return existing


def bench_run(
    spec: BenchSpec,
    output_path: str,
    resume: bool = False,
    workers: int = 1,
    warmup: bool = True,
) -> BenchReport:
    """Execute the campaign, streaming rows to ``output_path``.

    With ``resume`` rows already present keep their exact bytes and only
    missing cells are computed; the final file is identical to an
    uninterrupted run either way.  ``workers`` > 1 computes cells in
    worker processes (each pipeline in its own process keeps memory
    numbers clean); the output does not depend on the worker count.
    JIT warmup runs once before any timed cell unless disabled.
    """
    if spec.scenario == SCENARIO_CSV:
        data = load_csv(spec.csv_path)
        spec = replace(spec, n_values=(data.n,))
        check_feasible(spec, data.d)
    else:
        check_feasible(spec)
    if warmup:
        _warmup(spec)

    existing = _read_existing(output_path) if resume else {}
    cells = list(canonical_cells(spec))
    pending = [c for c in cells if _row_key(*c) not in existing]

    computed: dict[tuple, str] = {}
    if workers > 1 and pending:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(compute_row, spec, *cell): cell for cell in pending
            }
            for future, cell in futures.items():
                computed[_row_key(*cell)] = _format_line(future.result())
    else:
        for cell in pending:
            computed[_row_key(*cell)] = _format_line(compute_row(spec, *cell))

    tmp_path = output_path + ".tmp"
    rows = []
    with open(tmp_path, "w", encoding="utf-8") as fh:
        fh.write(",".join(COLUMNS) + "\n")
        for cell in cells:
            key = _row_key(*cell)
            line = existing.get(key) or computed[key]
            fh.write(line + "\n")
            rows.append(dict(zip(COLUMNS, line.split(","))))
    os.replace(tmp_path, output_path)
    return BenchReport(columns=list(COLUMNS), rows=rows, path=output_path)


def _warmup(spec: BenchSpec) -> None:
    """Exercise the compiled kernels and hot code paths on a tiny input
    so JIT compilation never lands inside a timed cell."""
    _kernels.warmup()
    data, _ = generate_gaussian_mixture(mixture_spec(0), 512)
    t_star = max(2, min(spec.t_star_values))
    m = 1 if any(m > 0 for m in spec.m_values) else 0
    config = IhtcConfig(
        t_star=t_star,
        iterations=m,
        base=spec.base,
        base_config=_base_config(spec, 0),
        metric=spec.metric,
        center_rule=spec.center_rule,
    )
    try:
        ihtc_run(data, config)
    except InfeasibleRunError:
        pass  # warmup input is tiny; the real cells are checked separately


def bench_aggregate(report_csv: str, output_path: str, pivot_prefix: str | None = None):
    """Mean and standard deviation per configuration, plus optional pivots.

    The standard deviation uses the sample convention (n-1) and is left
    empty for single-replicate cells.  Pivot files, one per measure and
    (base, t_star) pair, put m on rows and n on columns, the layout used
    for eyeballing scale trends.  Malformed input rows are reported with
    their line number.
    """
    groups: dict[tuple, list] = {}
    with open(report_csv, encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != COLUMNS:
            raise ValueError(f"{report_csv}: unexpected columns {reader.fieldnames}")
        for lineno, row in enumerate(reader, start=2):
            try:
                key = (int(row["n"]), int(row["t_star"]), int(row["m"]), row["base"])
                status = row["status"]
                if status not in ("ok", "infeasible"):
                    raise ValueError(f"bad status {status!r}")
                if status == "ok":
                    values = {
                        m: float(row[m]) for m in MEASURES if row[m] != ""
                    }
                else:
                    values = None
            except (ValueError, TypeError, KeyError) as exc:
                raise ValueError(f"{report_csv}: malformed row at line {lineno}: {exc}")
            groups.setdefault(key, []).append(values)

    agg_columns = ["n", "t_star", "m", "base", "replicates", "infeasible"]
    for measure in MEASURES:
        agg_columns += [f"{measure}_mean", f"{measure}_sd"]
    agg_rows = []
    for key in sorted(groups, key=lambda k: (k[0], k[1], k[2], k[3])):
        entries = groups[key]
        ok = [e for e in entries if e is not None]
        row = {
            "n": str(key[0]),
            "t_star": str(key[1]),
            "m": str(key[2]),
            "base": key[3],
            "replicates": str(len(ok)),
            "infeasible": str(len(entries) - len(ok)),
        }
        for measure in MEASURES:
            samples = [e[measure] for e in ok if measure in e]
            if not samples:
                row[f"{measure}_mean"] = ""
                row[f"{measure}_sd"] = ""
                continue
            mean = sum(samples) / len(samples)
            row[f"{measure}_mean"] = f"{mean:.6f}"
            if len(samples) > 1:
                var = sum((s - mean) ** 2 for s in samples) / (len(samples) - 1)
                row[f"{measure}_sd"] = f"{math.sqrt(var):.6f}"
            else:
                row[f"{measure}_sd"] = ""
        agg_rows.append(row)

    with open(output_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=agg_columns)
        writer.writeheader()
        writer.writerows(agg_rows)

    if pivot_prefix:
        _write_pivots(agg_rows, pivot_prefix)
    return agg_rows


def _write_pivots(agg_rows: list, prefix: str) -> None:
    combos = sorted({(r["base"], r["t_star"]) for r in agg_rows})
    for base, t_star in combos:
        subset = [r for r in agg_rows if r["base"] == base and r["t_star"] == t_star]
        n_values = sorted({int(r["n"]) for r in subset})
        m_values = sorted({int(r["m"]) for r in subset})
        for measure in ("total_seconds", "peak_memory_bytes", "accuracy", "bss_tss", "prototype_count"):
            path = f"{prefix}_{base}_t{t_star}_{measure}.csv"
            with open(path, "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["m"] + [str(n) for n in n_values])
                for m in m_values:
                    line = [str(m)]
                    for n in n_values:
                        cell = ""
                        for r in subset:
                            if int(r["n"]) == n and int(r["m"]) == m:
                                cell = r[f"{measure}_mean"]
                        line.append(cell)
                    writer.writerow(line)
