"""Recurrence scores from persistence diagrams, plus two SSM baselines.

The topological scores compare lifetimes against sqrt(3), the lifetime
of the single H1 class of a densely sampled great circle under the
Rips filtration.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage, signal

from .ph import PersistenceDiagrams, mp

log = logging.getLogger(__name__)

SQRT3 = math.sqrt(3.0)
NO_LATTICE = math.inf


class ScoreError(ValueError):
    pass


def _clamp(x: float, name: str) -> float:
    if x > 1.0:
        log.info("%s = %.6g clamped to 1", name, x)
        return 1.0
    return max(0.0, x)


def periodicity_score(dgms: PersistenceDiagrams) -> float:
    """PS = mp1(H1) / sqrt(3)."""
    if dgms.max_dim < 1:
        raise ScoreError("periodicity score needs H1")
    return _clamp(mp(dgms, 1, 1) / SQRT3, "PS")


def modified_periodicity_score(dgms: PersistenceDiagrams) -> float:
    """MPS = (mp1(H1) - mp2(H1)) / sqrt(3); low when a second loop is present."""
    if dgms.max_dim < 1:
        raise ScoreError("modified periodicity score needs H1")
    return _clamp((mp(dgms, 1, 1) - mp(dgms, 1, 2)) / SQRT3, "MPS")


def quasiperiodicity_score(dgms: PersistenceDiagrams) -> float:
    """QPS = sqrt(mp2(H1) * mp1(H2) / 3)."""
    if dgms.max_dim < 2:
        raise ScoreError("quasiperiodicity score needs H2; compute diagrams with max_dim=2")
    return _clamp(math.sqrt(mp(dgms, 1, 2) * mp(dgms, 2, 1) / 3.0), "QPS")


@dataclass
class RecurrenceReport:
    ps: float
    mps: float
    qps: float | None
    freq_score: float
    cd_score: float
    clarity: float
    period_len: float | None
    params: dict = field(default_factory=dict)
    diagrams: PersistenceDiagrams | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "v": 1,
            "ps": self.ps,
            "mps": self.mps,
            "qps": self.qps,
            "freq_score": self.freq_score,
            "cd_score": "no-lattice" if self.cd_score == NO_LATTICE else self.cd_score,
            "clarity": self.clarity,
            "period_len": self.period_len,
            "params": self.params,
        }


# ----------------------------------------------------------------------------
# frequency-domain baseline

def frequency_score(ssm: np.ndarray) -> float:
    """Peak prominence of the column-averaged power spectrum of an SSM.

    Every column is linearly detrended and Hann windowed before its
    periodogram; the score is (max - mean) / std over the nonzero
    frequency bins of the average.
    """
    S = np.asarray(ssm, dtype=np.float64)
    if S.ndim != 2 or S.shape[1] < 2 or S.shape[0] < 4:
        raise ScoreError("frequency score needs at least 4 rows and 2 columns")
    # unscaled |DFT|^2: scipy's one-sided density scaling doubles every bin
    # but Nyquist, which would bias the std for even lengths
    win = signal.get_window("hann", S.shape[0])[:, None]
    R = signal.detrend(S, axis=0, type="linear")
    # columns that are lines up to rounding carry no spectrum
    if not np.abs(R).max() > 1e-10 * max(np.abs(S).max(), 1e-300):
        return 0.0
    power = (np.abs(np.fft.rfft(R * win, axis=0)) ** 2).mean(axis=1)[1:]
    sd = power.std()
    if not sd > 1e-12 * power.max():
        return 0.0
    return float((power.max() - power.mean()) / sd)


# ----------------------------------------------------------------------------
# lattice baseline

def ssm_autocorrelation(ssm: np.ndarray, smooth: float = 1.0) -> np.ndarray:
    """2D autocorrelation of the Gaussian-smoothed, mean-removed SSM.

    Each lag is averaged over its overlap and the image is scaled so lag
    (0, 0) equals 1. Lags run over ``[-n//2, n//2]`` on both axes with the
    zero lag at the centre of the returned array.
    """
    S = np.asarray(ssm, dtype=np.float64)
    n = S.shape[0]
    if smooth > 0:
        S = ndimage.gaussian_filter(S, smooth, mode="nearest")
    S = S - S.mean()
    full = signal.fftconvolve(S, S[::-1, ::-1], mode="full")
    ones = np.ones_like(S)
    overlap = signal.fftconvolve(ones, ones, mode="full")
    A = full / np.maximum(np.rint(overlap), 1.0)
    if A[n - 1, n - 1] <= 0:
        return np.zeros((2 * (n // 2) + 1,) * 2)
    A = A / A[n - 1, n - 1]
    h = n // 2
    return A[n - 1 - h:n + h, n - 1 - h:n + h]


def find_peaks_2d(img: np.ndarray, size: int = 5) -> np.ndarray:
    """Strict local maxima in a ``size x size`` window, as (row, col) lags from the centre."""
    mx = ndimage.maximum_filter(img, size=size, mode="constant", cval=-np.inf)
    cand = np.argwhere(img == mx)
    c = img.shape[0] // 2
    keep = []
    h = size // 2
    for r, q in cand:
        win = img[max(r - h, 0):r + h + 1, max(q - h, 0):q + h + 1]
        if np.count_nonzero(win == img[r, q]) == 1:
            keep.append((r - c, q - c))
    return np.array(keep, dtype=np.int64).reshape(-1, 2)


def lattice_points(kind: str, spacing: int, radius: int) -> np.ndarray:
    """Lattice points within ``|lag| <= radius``.

    ``square`` is every multiple of ``spacing`` on both axes; ``diamond``
    keeps the points ``(a, b) * spacing`` with ``a + b`` even, a square
    lattice of twice the spacing plus its cell centres.
    """
    if kind == "square":
        ks = np.arange(-(radius // spacing), radius // spacing + 1) * spacing
        a, b = np.meshgrid(ks, ks, indexing="ij")
        pts = np.column_stack([a.ravel(), b.ravel()])
    elif kind == "diamond":
        h = spacing
        ks = np.arange(-(radius // h), radius // h + 1)
        a, b = np.meshgrid(ks, ks, indexing="ij")
        keep = (a + b) % 2 == 0
        pts = np.column_stack([a[keep] * h, b[keep] * h])
    else:
        raise ValueError(kind)
    return pts


def cd_score_from_peaks(peaks: np.ndarray, kind: str, spacing: int, radius: int,
                        tol_frac: float = 0.25) -> tuple[float, float, float, float]:
    """(score, E, r1, r2) for one candidate lattice.

    Each lattice point takes the nearest peak within ``tol_frac`` of the
    lattice's nearest-neighbour distance; E sums the distances of those
    matches.
    """
    lat = lattice_points(kind, spacing, radius)
    if peaks.shape[0] == 0 or lat.shape[0] == 0:
        return NO_LATTICE, 0.0, 0.0, 0.0
    nn = spacing if kind == "square" else spacing * math.sqrt(2.0)
    tol = tol_frac * nn
    dist = np.sqrt(((lat[:, None, :] - peaks[None, :, :]) ** 2).sum(-1))
    best = dist.argmin(axis=1)
    bd = dist[np.arange(lat.shape[0]), best]
    # one peak per lattice point and one lattice point per peak, closest first
    used = set()
    E = 0.0
    matched_lat = 0
    for li in np.argsort(bd, kind="stable"):
        if bd[li] > tol or best[li] in used:
            continue
        used.add(int(best[li]))
        E += float(bd[li])
        matched_lat += 1
    if matched_lat == 0:
        return NO_LATTICE, 0.0, 0.0, 0.0
    r1 = matched_lat / lat.shape[0]
    r2 = len(used) / peaks.shape[0]
    return (1.0 + E / r1) / (r1 * r2) ** 3, E, r1, r2


@dataclass
class LatticeFit:
    score: float
    kind: str | None
    spacing: int | None
    E: float = 0.0
    r1: float = 0.0
    r2: float = 0.0
    peaks: np.ndarray | None = field(default=None, repr=False)


def fit_lattice(peaks: np.ndarray, n: int, radius: int | None = None) -> LatticeFit:
    """Best square or diamond lattice through ``peaks`` over spacings 2..n/2."""
    if radius is None:
        radius = n // 2
    best = LatticeFit(NO_LATTICE, None, None, peaks=peaks)
    if peaks.shape[0] == 0:
        return best
    for spacing in range(2, n // 2 + 1):
        for kind in ("square", "diamond"):
            s, E, r1, r2 = cd_score_from_peaks(peaks, kind, spacing, radius)
            if s < best.score:
                best = LatticeFit(s, kind, spacing, E, r1, r2, peaks)
    return best


def cd_lattice_fit(ssm: np.ndarray, smooth: float = 1.0, neighborhood: int = 5) -> LatticeFit:
    S = np.asarray(ssm, dtype=np.float64)
    n = S.shape[0]
    if S.ndim != 2 or S.shape[1] != n:
        raise ScoreError("SSM must be square")
    if n < 16:
        raise ScoreError(f"lattice score needs at least 16 frames, got {n}")
    A = ssm_autocorrelation(S, smooth)
    peaks = find_peaks_2d(A, neighborhood)
    return fit_lattice(peaks, n)


def cd_lattice_score(ssm: np.ndarray, smooth: float = 1.0, neighborhood: int = 5) -> float:
    """(1 + E/r1) / (r1 r2)^3 for the best-fitting lattice; 1 is a perfect fit.

    Returns ``NO_LATTICE`` (infinity, ranked last) when no lattice matches.
    """
    return cd_lattice_fit(ssm, smooth, neighborhood).score
