"""Dissimilarity measures used across the library.

Two metrics are supported: ``euclidean`` and ``manhattan``.  Both are
genuine metrics (non-negative, symmetric, zero on the diagonal, triangle
inequality), which the clustering guarantees in :mod:`ihtc.threshold`
rely on.  Standardized Euclidean distance is obtained by z-scoring the
dataset first (see :func:`ihtc.dataset.standardize`) and then using plain
``euclidean``.
"""

from __future__ import annotations

import numpy as np

from . import _kernels

EUCLIDEAN = "euclidean"
MANHATTAN = "manhattan"
METRICS = (EUCLIDEAN, MANHATTAN)

_CODES = {EUCLIDEAN: _kernels.EUCLIDEAN_CODE, MANHATTAN: _kernels.MANHATTAN_CODE}


def metric_code(metric: str) -> int:
    """Internal integer code for a metric name."""
    try:
        return _CODES[metric]
    except KeyError:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")


def dissimilarity(data, i: int, j: int, metric: str = EUCLIDEAN) -> float:
    """Distance between units i and j of a dataset.

    Symmetric by construction: the same accumulation order is used for
    (i, j) and (j, i).
    """
    code = metric_code(metric)
    n = data.n
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"unit index out of range: i={i}, j={j}, n={n}")
    return float(_kernels.point_dist(data.values, i, j, code))


def row_distances(values: np.ndarray, i: int, metric: str = EUCLIDEAN) -> np.ndarray:
    """Distances from unit i to every unit, as a length-n vector.

    Accumulates coordinate by coordinate in index order so the floats
    match :func:`ihtc._kernels.point_dist` bit for bit; exact-equality
    tie rules depend on that.
    """
    code = metric_code(metric)
    acc = np.zeros(values.shape[0])
    if code == _kernels.EUCLIDEAN_CODE:
        for t in range(values.shape[1]):
            diff = values[:, t] - values[i, t]
            acc += diff * diff
        return np.sqrt(acc)
    for t in range(values.shape[1]):
        acc += np.abs(values[:, t] - values[i, t])
    return acc


def pairwise_matrix(values: np.ndarray, metric: str = EUCLIDEAN) -> np.ndarray:
    """Dense n-by-n distance matrix.  Quadratic memory; keep n small."""
    return _kernels.pairwise_matrix(
        np.ascontiguousarray(values, dtype=np.float64), metric_code(metric)
    )
