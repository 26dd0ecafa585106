import numpy as np
import pytest

from ihtc.bench import mixture_spec
from ihtc.dataset import (
    Dataset,
    GaussianMixtureSpec,
    explained_variance_ratio,
    generate_gaussian_mixture,
    load_csv,
    pca_project,
    save_csv,
    standardize,
)


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestDataset:
    def test_rejects_nan(self):
        with pytest.raises(ValueError, match="non-finite"):
            Dataset(np.array([[1.0, np.nan]]))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Dataset(np.empty((0, 2)))

    def test_values_immutable(self):
        data = Dataset(np.array([[1.0, 2.0]]))
        with pytest.raises(ValueError):
            data.values[0, 0] = 5.0

    def test_column_name_count_checked(self):
        with pytest.raises(ValueError, match="column names"):
            Dataset(np.ones((2, 2)), column_names=["only_one"])


class TestLoadCsv:
    def test_basic_with_header(self, tmp_path):
        data = load_csv(write(tmp_path, "a,b\n1,2\n3,4\n"))
        assert data.n == 2 and data.d == 2
        assert data.values.tolist() == [[1.0, 2.0], [3.0, 4.0]]
        assert data.column_names == ["a", "b"]

    def test_non_numeric_cell_names_row_and_column(self, tmp_path):
        path = write(tmp_path, "a,b\n1,x\n3,4\n")
        with pytest.raises(ValueError, match=r"row 1.*'b'"):
            load_csv(path)

    def test_single_cell_no_header(self, tmp_path):
        data = load_csv(write(tmp_path, "5.0\n"), has_header=False)
        assert data.n == 1 and data.d == 1
        assert data.values[0, 0] == 5.0

    def test_empty_file(self, tmp_path):
        with pytest.raises(ValueError, match="empty"):
            load_csv(write(tmp_path, ""))

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_csv(tmp_path / "nope.csv")

    def test_selected_columns_by_name_and_index(self, tmp_path):
        path = write(tmp_path, "a,b,c\n1,2,3\n4,5,6\n")
        by_name = load_csv(path, selected_columns=["c", "a"])
        assert by_name.values.tolist() == [[3.0, 1.0], [6.0, 4.0]]
        by_index = load_csv(path, selected_columns=[2, 0])
        assert by_index.values.tolist() == by_name.values.tolist()

    def test_missing_cell_is_error(self, tmp_path):
        path = write(tmp_path, "a,b\n1,\n")
        with pytest.raises(ValueError, match="missing value"):
            load_csv(path)

    def test_roundtrip(self, tmp_path):
        data = Dataset(np.array([[1.5, -2.25], [0.0, 3.125]]), column_names=["u", "v"])
        path = tmp_path / "out.csv"
        save_csv(data, path)
        back = load_csv(path)
        assert back.column_names == ["u", "v"]
        np.testing.assert_array_equal(back.values, data.values)


class TestStandardize:
    def test_two_point_column(self):
        # mean 2, sample sd sqrt(2): hand-computed +-1/sqrt(2)
        out = standardize(Dataset(np.array([[1.0], [3.0]])))
        np.testing.assert_allclose(
            out.values.ravel(), [-0.7071067811865475, 0.7071067811865475], rtol=0, atol=1e-15
        )

    def test_sample_moments(self):
        rng = np.random.default_rng(5)
        out = standardize(Dataset(rng.normal(3.0, 7.0, size=(40, 3))))
        np.testing.assert_allclose(out.values.mean(axis=0), 0.0, atol=1e-9)
        np.testing.assert_allclose(out.values.std(axis=0, ddof=1), 1.0, atol=1e-9)

    def test_constant_column_maps_to_zero(self):
        out = standardize(Dataset(np.array([[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]])))
        assert (out.values[:, 0] == 0).all()

    def test_idempotent(self):
        rng = np.random.default_rng(0)
        data = Dataset(rng.normal(3.0, 5.0, size=(100, 3)))
        once = standardize(data)
        twice = standardize(once)
        np.testing.assert_allclose(twice.values, once.values, atol=1e-9)

    def test_needs_two_rows(self):
        with pytest.raises(ValueError):
            standardize(Dataset(np.array([[1.0, 2.0]])))


class TestPca:
    def test_exact_line(self):
        # points on y = x: one component captures everything
        data = Dataset(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]))
        out = pca_project(data, 1)
        np.testing.assert_allclose(
            out.values.ravel(), [-np.sqrt(2.0), 0.0, np.sqrt(2.0)], atol=1e-12
        )
        # rank-1 data: scores alone reproduce the total variance
        centered = data.values - data.values.mean(axis=0)
        assert abs((out.values**2).sum() - (centered**2).sum()) < 1e-12

    def test_full_rank_preserves_variance_and_distances(self):
        rng = np.random.default_rng(1)
        data = Dataset(rng.normal(size=(50, 4)) @ rng.normal(size=(4, 4)))
        out = pca_project(data, 4)
        centered = data.values - data.values.mean(axis=0)
        assert abs((out.values**2).sum() - (centered**2).sum()) < 1e-9 * (centered**2).sum()
        for i, j in [(0, 1), (3, 40), (17, 17), (5, 49)]:
            before = np.linalg.norm(data.values[i] - data.values[j])
            after = np.linalg.norm(out.values[i] - out.values[j])
            assert abs(before - after) < 1e-9

    def test_isotropic_explained_variance_near_half(self):
        rng = np.random.default_rng(7)
        data = Dataset(rng.standard_normal((10_000, 2)))
        ratio = explained_variance_ratio(data, 1)
        assert 0.45 < ratio < 0.55

    def test_deterministic_sign(self):
        rng = np.random.default_rng(2)
        data = Dataset(rng.normal(size=(30, 3)))
        a = pca_project(data, 2)
        b = pca_project(data, 2)
        np.testing.assert_array_equal(a.values, b.values)

    def test_component_range_checked(self):
        data = Dataset(np.ones((3, 2)) * np.arange(3)[:, None])
        with pytest.raises(ValueError):
            pca_project(data, 0)
        with pytest.raises(ValueError):
            pca_project(data, 3)


class TestGaussianMixture:
    def test_component_frequencies_match_weights(self):
        spec = mixture_spec(seed=0)
        _, labels = generate_gaussian_mixture(spec, 100_000)
        freq = np.bincount(labels, minlength=3) / labels.size
        np.testing.assert_allclose(freq, [0.5, 0.3, 0.2], atol=0.01)

    def test_component_means_converge(self):
        spec = mixture_spec(seed=3)
        data, labels = generate_gaussian_mixture(spec, 50_000)
        for j in range(3):
            rows = data.values[labels == j]
            sigma = np.sqrt(np.asarray(spec.variances[j]))
            bound = 3 * sigma / np.sqrt(rows.shape[0])
            assert (np.abs(rows.mean(axis=0) - spec.means[j]) < bound).all()

    def test_single_component(self):
        spec = GaussianMixtureSpec(
            weights=[1.0], means=[[0.0, 0.0]], variances=[[1.0, 1.0]], seed=1
        )
        _, labels = generate_gaussian_mixture(spec, 10)
        assert (labels == 0).all()

    def test_same_seed_bit_identical(self):
        spec = mixture_spec(seed=99)
        a, la = generate_gaussian_mixture(spec, 5_000)
        b, lb = generate_gaussian_mixture(spec, 5_000)
        assert (a.values == b.values).all()
        assert (la == lb).all()

    def test_weight_sum_validated(self):
        with pytest.raises(ValueError, match="sum"):
            GaussianMixtureSpec(
                weights=[0.5, 0.4], means=[[0.0], [1.0]], variances=[[1.0], [1.0]]
            )

    def test_positive_variance_validated(self):
        with pytest.raises(ValueError, match="positive"):
            GaussianMixtureSpec(
                weights=[1.0], means=[[0.0]], variances=[[0.0]]
            )

    def test_n_validated(self):
        with pytest.raises(ValueError):
            generate_gaussian_mixture(mixture_spec(0), 0)
