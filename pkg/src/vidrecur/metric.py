"""Dense distance matrices for frames and delay vectors."""
from __future__ import annotations

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .embed import FrameCoords, PointCloud

MAX_POINTS = 2000


class MetricError(ValueError):
    pass


def _rows(x) -> np.ndarray:
    if isinstance(x, FrameCoords):
        x = x.coords
    elif isinstance(x, PointCloud):
        x = x.points
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    return x


def pairwise_sq_dist(fc, max_points: int = MAX_POINTS) -> np.ndarray:
    """Squared Euclidean distances between rows; exactly symmetric, zero diagonal."""
    X = _rows(fc)
    if X.shape[0] > max_points:
        raise MetricError(f"{X.shape[0]} rows exceeds the dense cap of {max_points}")
    if X.shape[0] < 2:
        return np.zeros((X.shape[0], X.shape[0]))
    return squareform(pdist(X, "sqeuclidean"))


def delay_distance(d2x: np.ndarray, d: int, counter: dict | None = None) -> np.ndarray:
    """Distances between integer-lag delay vectors from squared frame distances.

    Entry (i, j) of the result is the root of the sum of ``d2x[i+m, j+m]``
    over ``m = 0..d``: a length ``d+1`` moving sum along every diagonal,
    done with one cumulative sum per diagonal so the cost is O(n^2) for
    any ``d``. If ``counter`` is given, the number of scalar additions and
    subtractions is accumulated under ``counter["adds"]``.
    """
    d2x = np.asarray(d2x, dtype=np.float64)
    n = d2x.shape[0]
    if d < 0 or d + 1 > n:
        raise MetricError(f"need 0 <= d < n, got d={d} for n={n}")
    m = n - d
    if d == 0:
        out = d2x.copy()
        adds = 0
    else:
        # C[i, j] = sum_{k >= 0} d2x[i-k, j-k], the running sum down each diagonal
        C = np.empty((n + 1, n + 1))
        C[0, :] = 0.0
        C[:, 0] = 0.0
        for i in range(n):
            C[i + 1, 1:] = d2x[i] + C[i, :-1]
        out = C[d + 1:, d + 1:] - C[:m, :m]
        adds = n * n + m * m
    if counter is not None:
        counter["adds"] = counter.get("adds", 0) + adds
    np.maximum(out, 0.0, out=out)
    out = np.triu(out, 1)
    out = out + out.T
    return np.sqrt(out)


def cloud_distances(c, max_points: int = MAX_POINTS) -> np.ndarray:
    """Euclidean distances between the points of a cloud."""
    D = np.sqrt(pairwise_sq_dist(c, max_points))
    if isinstance(c, PointCloud) and c.normalized:
        # sphere points; rounding can only push the bound by a few ulps
        np.minimum(D, 2.0, out=D)
    return D


def check_distance_matrix(D, tol: float = 1e-9) -> None:
    D = np.asarray(D)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise MetricError(f"not square: {D.shape}")
    if not np.all(np.isfinite(D)):
        raise MetricError("non-finite entries")
    if np.any(D < 0):
        raise MetricError("negative entries")
    if np.any(np.diag(D) != 0):
        raise MetricError("nonzero diagonal")
    if np.abs(D - D.T).max(initial=0.0) > tol:
        raise MetricError("not symmetric")


def save_distance_csv(D, path) -> None:
    np.savetxt(path, np.asarray(D), delimiter=",", fmt="%.17g")


def load_distance_csv(path) -> np.ndarray:
    D = np.loadtxt(path, delimiter=",", ndmin=2)
    check_distance_matrix(D)
    return D
