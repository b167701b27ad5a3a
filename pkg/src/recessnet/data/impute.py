"""k-nearest-neighbour imputation of missing panel cells."""

import numpy as np

from ..errors import ParameterError, UnimputableColumnError

DEFAULT_K = 5


def row_distances(matrix, row):
    """Distance from ``matrix[row]`` to every row over mutually observed columns.

    The squared Euclidean distance is divided by the number of shared
    columns before the square root, so rows sharing few columns are not
    artificially close. Rows sharing no column get ``inf``.
    """
    observed = ~np.isnan(matrix)
    shared = observed & observed[row]
    diff = np.where(shared, matrix - np.where(observed[row], matrix[row], 0.0), 0.0)
    count = shared.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        dist = np.sqrt((diff**2).sum(axis=1) / count)
    dist[count == 0] = np.inf
    return dist


def impute_knn(features, k=DEFAULT_K, names=None):
    """Fill NaN cells with the mean of the ``k`` nearest donor rows.

    Donors for a cell are rows where that column was originally observed;
    ties in distance resolve to the earlier row. Observed cells are never
    touched.
    """
    x = np.array(features, dtype=float, copy=True)
    if x.ndim != 2:
        raise ValueError("features must be a 2-d matrix")
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    missing = np.isnan(x)
    if not missing.any():
        return x
    observed = ~missing
    empty_rows = np.flatnonzero(observed.sum(axis=1) == 0)
    if empty_rows.size:
        raise UnimputableColumnError(f"row {int(empty_rows[0])} has no observed values")
    for j in np.flatnonzero(missing.all(axis=0)):
        label = names[j] if names is not None else f"column {j}"
        raise UnimputableColumnError(f"{label} is entirely missing")

    original = np.array(features, dtype=float)
    for i in np.flatnonzero(missing.any(axis=1)):
        dist = row_distances(original, i)
        order = np.argsort(dist, kind="stable")
        for j in np.flatnonzero(missing[i]):
            donors = [r for r in order if observed[r, j] and np.isfinite(dist[r])]
            if len(donors) < k:
                label = names[j] if names is not None else f"column {j}"
                raise ParameterError(
                    f"k={k} exceeds the {len(donors)} donor rows available for {label}"
                )
            x[i, j] = original[donors[:k], j].mean()
    return x
