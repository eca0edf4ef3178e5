"""Input checks shared by the models, the tree and the estimator wrappers."""

from __future__ import annotations

import numpy as np


def as_feature_matrix(X, n_features: int) -> np.ndarray:
    """Coerce ``X`` to a float64 matrix with ``n_features`` columns.

    A single sample may be passed as a 1d array. Raises ``ValueError`` on a
    column-count mismatch or non-finite entries.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise ValueError(f"expected a 2d feature matrix, got ndim={X.ndim}")
    if X.shape[1] != n_features:
        raise ValueError(
            f"feature matrix has {X.shape[1]} columns, expected {n_features}"
        )
    if not np.all(np.isfinite(X)):
        raise ValueError("feature matrix contains non-finite values")
    return X


def as_label_vector(y, n_classes: int, n_rows: int | None = None) -> np.ndarray:
    """Coerce ``y`` to an int64 vector with labels in ``[0, n_classes)``."""
    y = np.asarray(y)
    if y.ndim != 1:
        y = y.reshape(-1)
    if not np.issubdtype(y.dtype, np.integer):
        rounded = np.rint(np.asarray(y, dtype=np.float64))
        if not np.array_equal(rounded, np.asarray(y, dtype=np.float64)):
            raise ValueError("labels must be integers")
        y = rounded
    y = y.astype(np.int64)
    if y.size and (y.min() < 0 or y.max() >= n_classes):
        raise ValueError(
            f"labels must lie in [0, {n_classes}), got range "
            f"[{y.min()}, {y.max()}]"
        )
    if n_rows is not None and y.shape[0] != n_rows:
        raise ValueError(
            f"got {y.shape[0]} labels for {n_rows} feature rows"
        )
    return y
