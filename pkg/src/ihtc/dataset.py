"""The numeric data matrix and everything that produces one.

CSV ingestion, column standardization, PCA projection, and the Gaussian
mixture generator used by the benchmark harness all live here.  A
:class:`Dataset` is immutable once built; unit i is row i everywhere in
the library.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Dataset:
    """An n-by-d matrix of finite floats with optional column names."""

    values: np.ndarray
    column_names: list[str] | None = None

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"expected a 2-D matrix, got shape {values.shape}")
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError(f"dataset must be at least 1x1, got {values.shape}")
        if not np.isfinite(values).all():
            bad = np.argwhere(~np.isfinite(values))[0]
            raise ValueError(
                f"non-finite value at row {bad[0]}, column {bad[1]}"
            )
        if self.column_names is not None and len(self.column_names) != values.shape[1]:
            raise ValueError(
                f"{len(self.column_names)} column names for {values.shape[1]} columns"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


def load_csv(path, has_header: bool = True, selected_columns=None) -> Dataset:
    """Read a CSV file into a Dataset, one row per record.

    ``selected_columns`` may hold column names (requires a header) or
    0-based positions; other columns are dropped.  Any non-numeric or
    missing cell in a selected column is a hard error that names the
    offending data row (1-based) and column.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if not rows:
        raise ValueError(f"{path}: file is empty")
    if has_header:
        header = [c.strip() for c in rows[0]]
        records = rows[1:]
        if not records:
            raise ValueError(f"{path}: no data rows after header")
    else:
        header = [f"x{i}" for i in range(len(rows[0]))]
        records = rows

    if selected_columns is None:
        positions = list(range(len(header)))
    else:
        positions = []
        for col in selected_columns:
            if isinstance(col, int):
                if not 0 <= col < len(header):
                    raise ValueError(f"column index {col} out of range")
                positions.append(col)
            else:
                if col not in header:
                    raise ValueError(f"no column named {col!r} in header {header}")
                positions.append(header.index(col))
    names = [header[p] for p in positions]

    out = np.empty((len(records), len(positions)))
    for r, record in enumerate(records):
        for c, p in enumerate(positions):
            if p >= len(record) or record[p].strip() == "":
                raise ValueError(
                    f"{path}: missing value at row {r + 1}, column {names[c]!r}"
                )
            try:
                out[r, c] = float(record[p])
            except ValueError:
                raise ValueError(
                    f"{path}: non-numeric cell {record[p]!r} at row {r + 1},"
                    f" column {names[c]!r}"
                ) from None
    return Dataset(out, column_names=names)


def save_csv(data: Dataset, path) -> None:
    """Write a dataset as CSV with a header row."""
    names = data.column_names or [f"x{i}" for i in range(data.d)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in data.values:
            writer.writerow([repr(float(v)) for v in row])


def standardize(data: Dataset) -> Dataset:
    """Z-score every column: sample mean 0, sample standard deviation 1.

    The divisor is n - 1 (sample convention), so a column [1, 3] becomes
    [-0.7071..., +0.7071...].  Constant columns map to all zeros rather
    than dividing by zero.  Plain Euclidean distance on the result equals
    standardized Euclidean distance on the input.
    """
    if data.n < 2:
        raise ValueError("standardize needs at least 2 rows")
    mean = data.values.mean(axis=0)
    sd = data.values.std(axis=0, ddof=1)
    centered = data.values - mean
    out = np.where(sd > 0.0, centered / np.where(sd > 0.0, sd, 1.0), 0.0)
    return Dataset(out, column_names=data.column_names)


def pca_project(data: Dataset, num_components: int) -> Dataset:
    """Project onto the leading eigenvectors of the sample covariance.

    Eigenvector signs are fixed so the largest-magnitude entry of each is
    positive, making the projection deterministic.  Pass standardized
    data unless raw covariance scales are intended.
    """
    if not 1 <= num_components <= data.d:
        raise ValueError(
            f"num_components must be in [1, {data.d}], got {num_components}"
        )
    centered = data.values - data.values.mean(axis=0)
    denom = max(data.n - 1, 1)
    cov = centered.T @ centered / denom
    try:
        eigvals, eigvecs = np.linalg.eigh(cov)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"covariance eigendecomposition failed: {exc}") from exc
    order = np.argsort(eigvals)[::-1][:num_components]
    basis = eigvecs[:, order]
    for c in range(basis.shape[1]):
        peak = np.argmax(np.abs(basis[:, c]))
        if basis[peak, c] < 0:
            basis[:, c] = -basis[:, c]
    return Dataset(centered @ basis)


def explained_variance_ratio(data: Dataset, num_components: int) -> float:
    """Fraction of total variance captured by the leading components."""
    if not 1 <= num_components <= data.d:
        raise ValueError(
            f"num_components must be in [1, {data.d}], got {num_components}"
        )
    centered = data.values - data.values.mean(axis=0)
    denom = max(data.n - 1, 1)
    eigvals = np.linalg.eigvalsh(centered.T @ centered / denom)
    total = eigvals.sum()
    if total <= 0:
        return 0.0
    return float(np.sort(eigvals)[::-1][:num_components].sum() / total)


@dataclass(frozen=True)
class GaussianMixtureSpec:
    """Mixture of axis-aligned Gaussians: (weight, mean, variance) triples.

    ``variances`` holds the diagonal of each component's covariance
    matrix.  Weights must sum to one and every variance must be positive.
    """

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    seed: int = 0

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64)
        means = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        variances = np.atleast_2d(np.asarray(self.variances, dtype=np.float64))
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"mixture weights sum to {weights.sum()!r}, not 1")
        if (weights < 0).any():
            raise ValueError("mixture weights must be non-negative")
        if means.shape != variances.shape or means.shape[0] != weights.shape[0]:
            raise ValueError("weights, means and variances shapes disagree")
        if (variances <= 0).any():
            raise ValueError("every covariance diagonal entry must be positive")
        for name, arr in (("weights", weights), ("means", means), ("variances", variances)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def num_components(self) -> int:
        return self.weights.shape[0]

    @property
    def d(self) -> int:
        return self.means.shape[1]


def generate_gaussian_mixture(spec: GaussianMixtureSpec, n: int):
    """Draw n i.i.d. points from the mixture; returns (Dataset, labels).

    The RNG stream is split deterministically: one child stream picks
    component labels, and each component has its own stream for the
    coordinate draws, so results are reproducible bit for bit from the
    spec seed alone.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    root = np.random.SeedSequence(spec.seed)
    children = root.spawn(1 + spec.num_components)
    label_rng = np.random.default_rng(children[0])
    labels = label_rng.choice(spec.num_components, size=n, p=spec.weights)
    values = np.empty((n, spec.d))
    sd = np.sqrt(spec.variances)
    for j in range(spec.num_components):
        rows = np.flatnonzero(labels == j)
        comp_rng = np.random.default_rng(children[1 + j])
        values[rows] = spec.means[j] + sd[j] * comp_rng.standard_normal(
            (rows.size, spec.d)
        )
    return Dataset(values), labels.astype(np.int64)
