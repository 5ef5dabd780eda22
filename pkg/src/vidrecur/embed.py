"""Sliding-window point clouds from videos.

Pipeline order: temporal derivative-of-Gaussian filter per pixel, SVD
reduction of the frames to an orthonormal basis of their span, delay
embedding with a possibly fractional delay, and per-window centring plus
projection onto the unit sphere.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .tensorio import VideoTensor


class EmbeddingError(ValueError):
    """Embedding parameters are incompatible with the data."""


@dataclass
class FrameCoords:
    """Frames expressed in an orthonormal basis of their span.

    ``coords[i]`` has the same pairwise distances as the pixels of frame
    ``i`` when the full rank is kept.
    """

    coords: np.ndarray
    basis_energy: float
    degenerate: bool = False

    @property
    def count(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]


@dataclass
class PointCloud:
    points: np.ndarray
    d: int
    tau: float
    times: np.ndarray
    normalized: bool = False

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True)
class WindowPlan:
    period_len: float
    d: int
    tau: float
    window: float
    k: int = 1
    L: float = 0.0


def dog_kernel(sigma: float, half_width: int) -> np.ndarray:
    """Samples of -t exp(-t^2 / 2 sigma^2) on [-half_width, half_width], sum |g| = 1."""
    if sigma <= 0:
        raise EmbeddingError(f"sigma must be positive, got {sigma}")
    if half_width < 1:
        raise EmbeddingError(f"half_width must be >= 1, got {half_width}")
    t = np.arange(-half_width, half_width + 1, dtype=np.float64)
    g = -t * np.exp(-t ** 2 / (2 * sigma ** 2))
    return g / np.abs(g).sum()


def dog_filter(v: VideoTensor, sigma: float | None = None, half_width: int = 5) -> VideoTensor:
    """Convolve every pixel's time series with a derivative-of-Gaussian kernel.

    Output has the input's length. Samples beyond either end are taken to
    equal the nearest end frame, so constants map to exactly zero.
    """
    if sigma is None:
        sigma = half_width / 2.0
    g = dog_kernel(sigma, int(half_width))
    X = v.data.astype(np.float64)
    # convolve1d flips the weights, giving a true convolution
    out = ndimage.convolve1d(X, g, axis=0, mode="nearest")
    return v.with_data(out)


def svd_frame_reduce(v: VideoTensor | np.ndarray, energy: float = 1.0) -> FrameCoords:
    """Coordinates of the frames in the left singular basis of the frame matrix.

    With more pixels than frames the ``N x N`` Gram matrix is diagonalized
    instead of the full frame matrix. ``energy`` keeps the fewest leading
    components whose squared singular values reach that share of the total.
    """
    if not 0 < energy <= 1:
        raise EmbeddingError(f"energy must be in (0, 1], got {energy}")
    X = v.data if isinstance(v, VideoTensor) else np.asarray(v)
    X = X.astype(np.float64)
    N, P = X.shape
    if P > N:
        G = X @ X.T
        lam, V = np.linalg.eigh(G)
        lam, V = lam[::-1], V[:, ::-1]
        lam = np.clip(lam, 0.0, None)
        s = np.sqrt(lam)
        coords = V * s
    else:
        U, s, _ = np.linalg.svd(X, full_matrices=False)
        lam = s ** 2
        coords = U * s
    total = lam.sum()
    if total <= 0:
        warnings.warn("all-zero video: frame coordinates are degenerate", RuntimeWarning,
                      stacklevel=2)
        return FrameCoords(np.zeros((N, 1)), 0.0, degenerate=True)
    if energy >= 1.0:
        # everything numerically nonzero; tiny components only carry rounding noise
        r = int(np.count_nonzero(lam > lam[0] * max(N, P) * np.finfo(float).eps))
    else:
        share = np.cumsum(lam) / total
        r = int(np.searchsorted(share, energy - 1e-12) + 1)
    r = max(1, min(r, coords.shape[1]))
    return FrameCoords(np.ascontiguousarray(coords[:, :r]), float(lam[:r].sum() / total))


def sliding_window(fc: FrameCoords | np.ndarray, d: int, tau: float,
                   n_points: int) -> PointCloud:
    """Delay vectors [x(t), x(t+tau), ..., x(t+d tau)] at evenly spaced t.

    Frames at non-integer times are linearly interpolated between
    neighbours. ``t`` runs over ``n_points`` values from 0 to
    ``N - 1 - d*tau`` inclusive.
    """
    X = fc.coords if isinstance(fc, FrameCoords) else np.asarray(fc, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    N = X.shape[0]
    if d < 0 or int(d) != d:
        raise EmbeddingError(f"d must be a nonnegative integer, got {d}")
    if not tau > 0:
        raise EmbeddingError(f"tau must be positive, got {tau}")
    if n_points < 1:
        raise EmbeddingError(f"n_points must be >= 1, got {n_points}")
    span = N - 1 - d * tau
    if span < -1e-9:
        raise EmbeddingError(
            f"window d*tau = {d * tau:g} frames is longer than the video ({N} frames)")
    span = max(span, 0.0)
    if n_points > 1 and span == 0:
        raise EmbeddingError("window covers the whole video; only one point is possible")
    times = np.linspace(0.0, span, n_points)
    lags = times[:, None] + tau * np.arange(d + 1)[None, :]
    lags = np.minimum(lags, N - 1)
    base = np.minimum(np.floor(lags).astype(np.int64), max(N - 2, 0))
    frac = lags - base
    if N == 1:
        pts = np.repeat(X[None, 0], lags.size, axis=0)
    else:
        pts = (1.0 - frac)[..., None] * X[base] + frac[..., None] * X[base + 1]
    points = pts.reshape(n_points, (d + 1) * X.shape[1])
    return PointCloud(points, int(d), float(tau), times, normalized=False)


def normalize_cloud(c: PointCloud) -> PointCloud:
    """Subtract each point's component mean, then scale it to unit length."""
    if c.normalized:
        raise EmbeddingError("point cloud is already normalized")
    P = c.points - c.points.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(P, axis=1)
    scale = np.linalg.norm(c.points, axis=1)
    bad = norms <= 1e-12 * np.maximum(scale, 1e-300)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise EmbeddingError(
            f"window at t={c.times[i]:g} is constant; it has no direction after centring")
    return PointCloud(P / norms[:, None], c.d, c.tau, c.times.copy(), normalized=True)


def plan_window(period_len: float, d: int) -> WindowPlan:
    """Window just under one period: d*tau = period_len * d / (d + 1)."""
    if not period_len > 0:
        raise EmbeddingError(f"period length must be positive, got {period_len}")
    if d < 1:
        raise EmbeddingError(f"d must be >= 1, got {d}")
    tau = period_len / (d + 1)
    return WindowPlan(float(period_len), int(d), tau, d * tau, 1, np.pi / period_len)
