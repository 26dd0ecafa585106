import csv
import json

import numpy as np
import pytest

from ihtc.bench import (
    COLUMNS,
    BenchSpec,
    bench_aggregate,
    bench_run,
    canonical_cells,
    mixture_spec,
)
from ihtc.cli import main
from ihtc.dataset import Dataset, generate_gaussian_mixture, save_csv
from ihtc.pipeline import InfeasibleRunError


# columns whose values are pure functions of the BenchSpec and seeds
DETERMINISTIC_COLUMNS = [
    "n",
    "t_star",
    "m",
    "base",
    "replicate",
    "status",
    "prototype_count",
    "accuracy",
    "bss_tss",
]


def small_spec(**overrides):
    settings = dict(
        n_values=(300,),
        t_star_values=(2,),
        m_values=(0, 1),
        replicates=2,
        seed_base=7,
    )
    settings.update(overrides)
    return BenchSpec(**settings)


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestBenchRun:
    def test_row_count_and_columns(self, tmp_path):
        out = tmp_path / "bench.csv"
        report = bench_run(small_spec(), str(out), warmup=False)
        assert report.columns == COLUMNS
        assert len(report.rows) == 1 * 1 * 2 * 2
        assert all(r["status"] == "ok" for r in report.rows)
        assert {r["m"] for r in report.rows} == {"0", "1"}

    def test_same_seed_identical_measurements_aside(self, tmp_path):
        # timings and memory are measurements; everything else repeats
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        bench_run(small_spec(), str(a), warmup=False)
        bench_run(small_spec(), str(b), warmup=False)
        for row_a, row_b in zip(read_rows(a), read_rows(b)):
            for column in DETERMINISTIC_COLUMNS:
                assert row_a[column] == row_b[column]

    def test_resume_of_complete_file_is_noop(self, tmp_path):
        full = tmp_path / "full.csv"
        bench_run(small_spec(), str(full), warmup=False)
        reference = full.read_bytes()
        bench_run(small_spec(), str(full), resume=True, warmup=False)
        assert full.read_bytes() == reference

    def test_resume_completes_crashed_run(self, tmp_path):
        full = tmp_path / "full.csv"
        bench_run(small_spec(), str(full), warmup=False)
        reference_rows = read_rows(full)

        # simulate a crash after two completed rows
        lines = full.read_text().splitlines(keepends=True)
        partial = tmp_path / "partial.csv"
        partial.write_text("".join(lines[:3]))
        bench_run(small_spec(), str(partial), resume=True, warmup=False)

        resumed = partial.read_text().splitlines(keepends=True)
        assert resumed[:3] == lines[:3]  # kept prefix byte for byte
        for row_full, row_resumed in zip(reference_rows, read_rows(partial)):
            for column in DETERMINISTIC_COLUMNS:
                assert row_full[column] == row_resumed[column]

    def test_resume_keeps_existing_rows_without_recomputing(self, tmp_path):
        out = tmp_path / "bench.csv"
        bench_run(small_spec(), str(out), warmup=False)
        # poison one row; resume must trust and keep it verbatim
        lines = out.read_text().splitlines()
        poisoned = lines[1].split(",")
        poisoned[COLUMNS.index("accuracy")] = "0.123456"
        lines[1] = ",".join(poisoned)
        out.write_text("\n".join(lines) + "\n")
        bench_run(small_spec(), str(out), resume=True, warmup=False)
        assert read_rows(out)[0]["accuracy"] == "0.123456"

    def test_infeasible_cell_marked(self, tmp_path):
        out = tmp_path / "bench.csv"
        report = bench_run(
            small_spec(n_values=(40,), m_values=(0, 8)), str(out), warmup=False
        )
        by_m = {r["m"]: r for r in report.rows if r["replicate"] == "0"}
        assert by_m["0"]["status"] == "ok"
        assert by_m["8"]["status"] == "infeasible"
        assert by_m["8"]["total_seconds"] == ""

    def test_workers_do_not_change_output(self, tmp_path):
        serial, parallel = tmp_path / "s.csv", tmp_path / "p.csv"
        bench_run(small_spec(), str(serial), warmup=False)
        bench_run(small_spec(), str(parallel), workers=2, warmup=False)
        for row_s, row_p in zip(read_rows(serial), read_rows(parallel)):
            for column in DETERMINISTIC_COLUMNS:
                assert row_s[column] == row_p[column]

    def test_memory_budget_guard(self, tmp_path):
        spec = small_spec(memory_budget_bytes=1000)
        with pytest.raises(InfeasibleRunError, match="budget"):
            bench_run(spec, str(tmp_path / "x.csv"), warmup=False)

    def test_hac_cap_guard_reports_minimum_m(self, tmp_path):
        spec = small_spec(
            base="hac", n_values=(100,), m_values=(0,), hac_cap=20, k=2
        )
        with pytest.raises(InfeasibleRunError, match="m=3"):
            bench_run(spec, str(tmp_path / "x.csv"), warmup=False)

    def test_csv_scenario_has_no_accuracy(self, tmp_path):
        data, _ = generate_gaussian_mixture(mixture_spec(3), 200)
        source = tmp_path / "input.csv"
        save_csv(data, source)
        spec = small_spec(
            scenario="csv-file", csv_path=str(source), replicates=1, m_values=(0, 1)
        )
        report = bench_run(spec, str(tmp_path / "bench.csv"), warmup=False)
        for row in report.rows:
            assert row["status"] == "ok"
            assert row["accuracy"] == ""
            assert row["bss_tss"] != ""
            assert row["n"] == "200"

    def test_canonical_order_is_product(self):
        spec = small_spec(n_values=(10, 20), t_star_values=(2, 3), m_values=(0,))
        cells = list(canonical_cells(spec))
        assert len(cells) == 2 * 2 * 1 * 2
        assert cells[0] == (10, 2, 0, 0)
        assert cells[-1] == (20, 3, 0, 1)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            BenchSpec(replicates=0)
        with pytest.raises(ValueError):
            BenchSpec(n_values=())
        with pytest.raises(ValueError):
            BenchSpec(scenario="csv-file")
        with pytest.raises(ValueError):
            BenchSpec(scenario="synthetic")


class TestAggregate:
    def test_mean_and_sample_sd(self, tmp_path):
        out = tmp_path / "bench.csv"
        bench_run(small_spec(), str(out), warmup=False)
        rows = read_rows(out)
        agg_path = tmp_path / "agg.csv"
        agg = bench_aggregate(str(out), str(agg_path))
        m0 = [float(r["accuracy"]) for r in rows if r["m"] == "0"]
        wanted_mean = sum(m0) / len(m0)
        wanted_sd = (sum((v - wanted_mean) ** 2 for v in m0) / (len(m0) - 1)) ** 0.5
        got = [a for a in agg if a["m"] == "0"][0]
        assert float(got["accuracy_mean"]) == pytest.approx(wanted_mean, abs=1e-6)
        assert float(got["accuracy_sd"]) == pytest.approx(wanted_sd, abs=1e-6)

    def test_single_replicate_sd_empty(self, tmp_path):
        out = tmp_path / "bench.csv"
        bench_run(small_spec(replicates=1), str(out), warmup=False)
        agg = bench_aggregate(str(out), str(tmp_path / "agg.csv"))
        assert agg[0]["accuracy_sd"] == ""

    def test_known_values(self, tmp_path):
        # two accuracies 0.92 and 0.94: mean 0.93, sample sd 0.014142
        path = tmp_path / "report.csv"
        header = ",".join(COLUMNS)
        template = {c: "" for c in COLUMNS}
        lines = [header]
        for rep, acc in [(0, "0.92"), (1, "0.94")]:
            row = dict(
                template,
                n="100",
                t_star="2",
                m="0",
                base="kmeans",
                replicate=str(rep),
                status="ok",
                accuracy=acc,
            )
            lines.append(",".join(row[c] for c in COLUMNS))
        path.write_text("\n".join(lines) + "\n")
        agg = bench_aggregate(str(path), str(tmp_path / "agg.csv"))
        assert float(agg[0]["accuracy_mean"]) == pytest.approx(0.93)
        assert float(agg[0]["accuracy_sd"]) == pytest.approx(0.0141421, abs=1e-6)

    def test_malformed_row_reports_line_number(self, tmp_path):
        out = tmp_path / "bench.csv"
        bench_run(small_spec(replicates=1), str(out), warmup=False)
        lines = out.read_text().splitlines()
        bad = lines[1].split(",")
        bad[COLUMNS.index("t_star")] = "two"
        lines.insert(2, ",".join(bad))
        out.write_text("\n".join(lines) + "\n")
        with pytest.raises(ValueError, match="line 3"):
            bench_aggregate(str(out), str(tmp_path / "agg.csv"))

    def test_pivot_layout(self, tmp_path):
        out = tmp_path / "bench.csv"
        spec = small_spec(n_values=(100, 200), m_values=(0, 1, 2), replicates=1)
        bench_run(spec, str(out), warmup=False)
        bench_aggregate(str(out), str(tmp_path / "agg.csv"), pivot_prefix=str(tmp_path / "p"))
        pivot = (tmp_path / "p_kmeans_t2_accuracy.csv").read_text().splitlines()
        assert pivot[0] == "m,100,200"
        assert len(pivot) == 4  # header + one line per m


class TestCli:
    def make_input(self, tmp_path, n=200):
        data, _ = generate_gaussian_mixture(mixture_spec(1), n)
        path = tmp_path / "input.csv"
        save_csv(data, path)
        return path

    def read_labels(self, path):
        with open(path) as fh:
            reader = csv.DictReader(fh)
            return [(int(r["unit_index"]), int(r["cluster_id"])) for r in reader]

    def test_tc_command(self, tmp_path, capsys):
        source = self.make_input(tmp_path)
        out = tmp_path / "labels.csv"
        code = main(["tc", "--input", str(source), "--t-star", "2", "--out", str(out)])
        assert code == 0
        labels = self.read_labels(out)
        assert len(labels) == 200
        assert labels[0][0] == 0

    def test_itis_command(self, tmp_path):
        source = self.make_input(tmp_path)
        prefix = tmp_path / "proto"
        code = main(
            [
                "itis",
                "--input", str(source),
                "--t-star", "2",
                "--iterations", "2",
                "--out-prefix", str(prefix),
            ]
        )
        assert code == 0
        assert (tmp_path / "proto_level1.csv").exists()
        assert (tmp_path / "proto_level2.csv").exists()
        assert (tmp_path / "proto_level1_parents.csv").exists()
        with open(tmp_path / "proto_level1_parents.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 200

    def test_ihtc_command_with_report(self, tmp_path):
        source = self.make_input(tmp_path)
        out = tmp_path / "labels.csv"
        report = tmp_path / "report.json"
        code = main(
            [
                "ihtc",
                "--input", str(source),
                "--t-star", "2",
                "--iterations", "1",
                "--base", "kmeans",
                "--k", "3",
                "--seed", "5",
                "--out", str(out),
                "--report", str(report),
            ]
        )
        assert code == 0
        assert len(self.read_labels(out)) == 200
        payload = json.loads(report.read_text())
        assert payload["prototype_count"] < 200
        assert set(payload["timings_seconds"]) >= {"graph", "tc", "base", "total"}
        assert 0.0 <= payload["bss_tss"] <= 1.0

    def test_bench_and_aggregate_commands(self, tmp_path):
        bench_out = tmp_path / "bench.csv"
        code = main(
            [
                "bench",
                "--n", "200",
                "--t-star", "2",
                "--m", "0,1",
                "--replicates", "2",
                "--out", str(bench_out),
            ]
        )
        assert code == 0
        agg_out = tmp_path / "agg.csv"
        code = main(["aggregate", "--input", str(bench_out), "--out", str(agg_out)])
        assert code == 0
        assert agg_out.exists()

    def test_config_error_exit_code(self, tmp_path):
        out = tmp_path / "labels.csv"
        code = main(
            ["tc", "--input", str(tmp_path / "missing.csv"), "--t-star", "2", "--out", str(out)]
        )
        assert code == 1

    def test_infeasible_exit_code(self, tmp_path):
        source = self.make_input(tmp_path, n=50)
        code = main(
            [
                "ihtc",
                "--input", str(source),
                "--t-star", "2",
                "--iterations", "10",
                "--base", "kmeans",
                "--k", "3",
                "--out", str(tmp_path / "x.csv"),
            ]
        )
        assert code == 2

    def test_standardize_and_pca_flags(self, tmp_path):
        source = self.make_input(tmp_path)
        out = tmp_path / "labels.csv"
        code = main(
            [
                "tc",
                "--input", str(source),
                "--standardize",
                "--pca", "1",
                "--t-star", "2",
                "--out", str(out),
            ]
        )
        assert code == 0

    def test_dbscan_labels_may_contain_noise(self, tmp_path):
        rng = np.random.default_rng(0)
        spread = Dataset(np.vstack([rng.normal(0, 0.1, (30, 2)), [[50.0, 50.0]]]))
        source = tmp_path / "sparse.csv"
        save_csv(spread, source)
        out = tmp_path / "labels.csv"
        code = main(
            [
                "ihtc",
                "--input", str(source),
                "--iterations", "0",
                "--base", "dbscan",
                "--eps", "0.5",
                "--min-pts", "3",
                "--out", str(out),
            ]
        )
        assert code == 0
        labels = dict(self.read_labels(out))
        assert labels[30] == -1
