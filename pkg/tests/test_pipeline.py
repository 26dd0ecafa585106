import numpy as np
import pytest

from ihtc.bench import mixture_spec
from ihtc.clusterers import DbscanConfig, KMeansConfig, cut_dendrogram, dbscan, hac, kmeans
from ihtc.dataset import Dataset, generate_gaussian_mixture
from ihtc.pipeline import (
    PHASES,
    HacConfig,
    IhtcConfig,
    InfeasibleRunError,
    ihtc_run,
)


def line(*xs):
    return Dataset(np.array([[float(v)] for v in xs]))


SIX_POINTS = line(0, 1, 10, 11, 20, 21)


def kmeans_config(k=2, seed=0):
    return KMeansConfig(k=k, seed=seed)


class TestComposition:
    def test_six_point_example(self):
        config = IhtcConfig(
            t_star=2, iterations=1, base="kmeans", base_config=kmeans_config()
        )
        result = ihtc_run(SIX_POINTS, config)
        sets = {frozenset(m.tolist()) for m in result.clustering.members}
        # prototypes {0.5, 10.5, 20.5}: 2-means must split at one gap
        assert sets in (
            {frozenset({0, 1}), frozenset({2, 3, 4, 5})},
            {frozenset({0, 1, 2, 3}), frozenset({4, 5})},
        )
        assert (result.clustering.sizes() >= 2).all()
        assert result.prototype_count == 3

    def test_m_zero_equals_direct_kmeans(self):
        data, _ = generate_gaussian_mixture(mixture_spec(5), 2_000)
        config = IhtcConfig(
            t_star=2, iterations=0, base="kmeans", base_config=kmeans_config(3, 7)
        )
        result = ihtc_run(data, config)
        direct = kmeans(data, kmeans_config(3, 7))
        assert (result.clustering.labels == direct.clustering.labels).all()
        assert result.prototype_count == data.n

    def test_m_zero_equals_direct_hac(self):
        rng = np.random.default_rng(8)
        data = Dataset(rng.normal(size=(60, 2)))
        config = IhtcConfig(
            t_star=2, iterations=0, base="hac", base_config=HacConfig(k=4)
        )
        result = ihtc_run(data, config)
        direct = cut_dendrogram(hac(data, "ward"), 4)
        assert (result.clustering.labels == direct.labels).all()

    def test_m_zero_equals_direct_dbscan(self):
        rng = np.random.default_rng(9)
        data = Dataset(rng.normal(size=(80, 2)))
        config = IhtcConfig(
            t_star=2,
            iterations=0,
            base="dbscan",
            base_config=DbscanConfig(epsilon=0.5, min_pts=4),
        )
        result = ihtc_run(data, config)
        direct = dbscan(data, DbscanConfig(epsilon=0.5, min_pts=4))
        assert (result.clustering.labels == direct.labels).all()

    def test_labels_span_all_units(self):
        data, _ = generate_gaussian_mixture(mixture_spec(6), 3_000)
        config = IhtcConfig(
            t_star=2, iterations=2, base="kmeans", base_config=kmeans_config(3, 1)
        )
        result = ihtc_run(data, config)
        assert result.clustering.n == data.n
        assert (result.clustering.labels >= 0).all()

    @pytest.mark.parametrize("base", ["kmeans", "hac"])
    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_min_final_cluster_size(self, base, m):
        rng = np.random.default_rng(10 * m + hash(base) % 97)
        data = Dataset(rng.normal(size=(600, 2)))
        base_config = kmeans_config(3, 5) if base == "kmeans" else HacConfig(k=3)
        config = IhtcConfig(t_star=2, iterations=m, base=base, base_config=base_config)
        result = ihtc_run(data, config)
        assert (result.clustering.sizes() >= 2**m).all()

    def test_dbscan_noise_propagates_to_descendants(self):
        # two tight pairs far apart plus two isolated pairs: prototype
        # dbscan marks the isolated prototypes noise
        data = line(0, 1, 0.5, 1.5, 100, 101, 300, 301)
        config = IhtcConfig(
            t_star=2,
            iterations=1,
            base="dbscan",
            base_config=DbscanConfig(epsilon=5.0, min_pts=2),
        )
        result = ihtc_run(data, config)
        labels = result.clustering.labels
        assert (labels[:4] == labels[0]).all() and labels[0] >= 0
        assert (labels[4:] == -1).all()


class TestInstrumentation:
    def test_phase_timings_cover_total(self):
        data, _ = generate_gaussian_mixture(mixture_spec(11), 5_000)
        config = IhtcConfig(
            t_star=2, iterations=1, base="kmeans", base_config=kmeans_config(3, 2)
        )
        result = ihtc_run(data, config)
        assert set(result.timings) == set(PHASES) | {"total"}
        phase_sum = sum(result.timings[p] for p in PHASES)
        assert abs(phase_sum - result.timings["total"]) <= 0.005 * len(PHASES)

    def test_memory_tracking_toggle(self):
        config = IhtcConfig(
            t_star=2, iterations=1, base="kmeans", base_config=kmeans_config()
        )
        tracked = ihtc_run(SIX_POINTS, config, track_memory=True)
        assert tracked.peak_memory_bytes > 0
        untracked = ihtc_run(SIX_POINTS, config, track_memory=False)
        assert untracked.peak_memory_bytes == 0
        assert (tracked.clustering.labels == untracked.clustering.labels).all()

    def test_kmeans_detail_reported(self):
        config = IhtcConfig(
            t_star=2, iterations=1, base="kmeans", base_config=kmeans_config()
        )
        result = ihtc_run(SIX_POINTS, config)
        assert result.base_detail["iterations_used"] >= 1
        assert result.base_detail["wcss"] >= 0.0


class TestFeasibility:
    def test_too_few_prototypes_for_k(self):
        config = IhtcConfig(
            t_star=2, iterations=2, base="kmeans", base_config=kmeans_config(k=2)
        )
        with pytest.raises(InfeasibleRunError, match="at most 1 iterations"):
            ihtc_run(SIX_POINTS, config)  # sizes 6 -> 3 -> 1 < k=2

    def test_data_exhausted_before_requested_depth(self):
        config = IhtcConfig(
            t_star=2, iterations=5, base="kmeans", base_config=kmeans_config(k=1)
        )
        with pytest.raises(InfeasibleRunError, match="exhausted"):
            ihtc_run(SIX_POINTS, config)

    def test_config_validation(self):
        with pytest.raises(ValueError, match="iterations"):
            IhtcConfig(t_star=2, iterations=-1, base="kmeans", base_config=kmeans_config())
        with pytest.raises(ValueError, match="t_star"):
            IhtcConfig(t_star=1, iterations=1, base="kmeans", base_config=kmeans_config())
        with pytest.raises(ValueError, match="unknown base"):
            IhtcConfig(t_star=2, iterations=1, base="spectral", base_config=kmeans_config())
        with pytest.raises(ValueError, match="needs a"):
            IhtcConfig(t_star=2, iterations=1, base="hac", base_config=kmeans_config())
