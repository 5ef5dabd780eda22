"""Fundamental period of a video from a 1D diffusion-map surrogate.

The surrogate is the first non-trivial diffusion coordinate of the
(time-differentiated) frames. Its period is the lag of the highest peak
of the normalized autocorrelation n(tau) = 2 r(tau) / m(tau) past the
first zero crossing, after tilting n by a linear envelope that falls
from 1 to 0.9 so that shorter periods win near-ties.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from .embed import dog_filter, svd_frame_reduce
from .metric import pairwise_sq_dist
from .tensorio import VideoTensor


class PeriodError(ValueError):
    pass


@dataclass
class Surrogate1D:
    samples: np.ndarray
    source: dict = field(default_factory=dict)


@dataclass
class PeriodEstimate:
    """``period`` is ``None`` when no zero crossing exists (no period)."""

    period: float | None
    clarity: float
    nacf: np.ndarray = field(repr=False)

    @property
    def found(self) -> bool:
        return self.period is not None


def _diffusion_coordinate(D2: np.ndarray, k: int) -> tuple[np.ndarray, bool]:
    N = D2.shape[0]
    D = np.sqrt(D2)
    # k-th smallest distance per row, self included; ties at the radius all count
    kth = np.partition(D, min(k, N - 1), axis=1)[:, min(k, N - 1)]
    A = D <= kth[:, None]
    A = A | A.T
    n_comp, _ = connected_components(A, directed=False)
    if n_comp > 1:
        return np.zeros(N), False
    eps = float(np.median(D[A & ~np.eye(N, dtype=bool)])) if N > 1 else 1.0
    if not eps > 0:
        eps = 1.0
    W = np.where(A, np.exp(-D2 / (eps * eps)), 0.0)
    deg = W.sum(axis=1)
    s = 1.0 / np.sqrt(deg)
    M = W * s[:, None] * s[None, :]
    lam, V = np.linalg.eigh((M + M.T) / 2)
    psi = V[:, -2] * s
    return psi, True


def diffusion_1d(v: VideoTensor, knn_frac: float = 0.1, deriv_width: int = 5) -> Surrogate1D:
    """First non-trivial diffusion-map coordinate of the frames.

    The frames are first passed through ``dog_filter`` with half-width
    ``deriv_width`` (0 disables it). The graph joins each frame to its
    ``ceil(knn_frac * N)`` nearest frames, symmetrized, with Gaussian
    weights whose bandwidth is the median edge length. The eigenvector of
    the random-walk matrix for its second-largest eigenvalue is returned,
    with the sign fixed so the first nonzero entry is positive. A
    disconnected graph gets one retry with twice the neighbours.
    """
    if not 0 < knn_frac <= 1:
        raise PeriodError(f"knn_frac must be in (0, 1], got {knn_frac}")
    N = v.frames
    if N < 8:
        raise PeriodError(f"need at least 8 frames, got {N}")
    if deriv_width > 0:
        v = dog_filter(v, deriv_width / 2.0, deriv_width)
    D2 = pairwise_sq_dist(svd_frame_reduce(v, 1.0), max_points=max(N, 2))
    k = math.ceil(knn_frac * N)
    if not D2.max() > 0:
        # all frames coincide: only the trivial (constant) coordinate exists
        return Surrogate1D(np.full(N, 1.0 / math.sqrt(N)),
                           {"knn_frac": knn_frac, "k": int(k), "deriv_width": deriv_width,
                            "degenerate": True})
    psi, ok = _diffusion_coordinate(D2, k)
    if not ok:
        k = min(N, 2 * k)
        psi, ok = _diffusion_coordinate(D2, k)
        if not ok:
            raise PeriodError(f"nearest-neighbour graph is disconnected even with k={k}")
    nz = np.flatnonzero(np.abs(psi) > 1e-12 * max(np.abs(psi).max(), 1e-300))
    if nz.size and psi[nz[0]] < 0:
        psi = -psi
    return Surrogate1D(psi, {"knn_frac": knn_frac, "k": int(k), "deriv_width": deriv_width})


def normalized_autocorr(x) -> np.ndarray:
    """n(tau) = 2 r(tau) / m(tau) for tau = 0 .. N-2 over the whole signal.

    r is the lagged inner product and m the summed energy of the two
    overlapping segments. The curve stops early at the first lag whose
    overlap has zero energy.
    """
    x = np.asarray(x.samples if isinstance(x, Surrogate1D) else x, dtype=np.float64)
    N = x.shape[0]
    if N < 4:
        raise PeriodError(f"need at least 4 samples, got {N}")
    r = np.correlate(x, x, mode="full")[N - 1:N - 1 + N - 1]
    cs = np.concatenate([[0.0], np.cumsum(x * x)])
    tau = np.arange(N - 1)
    m = cs[N - tau] + (cs[N] - cs[tau])
    zero = np.flatnonzero(m <= 0)
    stop = zero[0] if zero.size else N - 1
    out = 2.0 * r[:stop] / m[:stop]
    if stop > 0:
        out[0] = 1.0
    return np.clip(out, -1.0, 1.0)


def estimate_period(nacf, max_lag: int | None = None) -> PeriodEstimate:
    """Highest local maximum of the tilted curve after its first zero crossing.

    Peaks are searched up to ``max_lag`` (default: half the curve), so a
    candidate period always has at least half the signal in its overlap.
    Beyond that the curve rests on a few samples and its noise dominates.
    """
    n = np.asarray(nacf, dtype=np.float64)
    if n.shape[0] < 4:
        raise PeriodError("autocorrelation curve is too short")
    if max_lag is None:
        max_lag = n.shape[0] // 2
    env = np.linspace(1.0, 0.9, n.shape[0])
    e = n * env
    below = np.flatnonzero(e <= 0)
    if below.size == 0:
        return PeriodEstimate(None, 0.0, n)
    z = below[0]
    interior = np.arange(max(z, 1), min(n.shape[0] - 1, max_lag + 1))
    is_max = (e[interior] > e[interior - 1]) & (e[interior] >= e[interior + 1])
    cand = interior[is_max]
    cand = cand[e[cand] > 0]
    if cand.size == 0:
        return PeriodEstimate(None, 0.0, n)
    # argmax returns the first (smallest-lag) maximum on exact ties
    lag = int(cand[np.argmax(e[cand])])
    if lag < 2:
        return PeriodEstimate(None, 0.0, n)
    return PeriodEstimate(float(lag), float(n[lag]), n)


def estimate_video_period(v: VideoTensor, knn_frac: float = 0.1,
                          deriv_width: int = 5) -> tuple[PeriodEstimate, Surrogate1D]:
    x = diffusion_1d(v, knn_frac, deriv_width)
    return estimate_period(normalized_autocorr(x)), x
