import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from oracles import convolve_direct, pairwise_sq_dist_loop
from vidrecur.embed import (EmbeddingError, FrameCoords, PointCloud, dog_filter, dog_kernel,
                            normalize_cloud, plan_window, sliding_window, svd_frame_reduce)
from vidrecur.tensorio import VideoTensor


def series_video(x):
    x = np.asarray(x, dtype=np.float64)
    return VideoTensor(x.reshape(-1, 1), 1, 1, 30)


# ---------------------------------------------------------------------------
# derivative-of-Gaussian filter

@pytest.mark.parametrize("sigma,hw", [(2.5, 5), (1.0, 3), (5.0, 10)])
def test_dog_kernel_shape(sigma, hw):
    g = dog_kernel(sigma, hw)
    assert g.shape == (2 * hw + 1,)
    assert math.isclose(np.abs(g).sum(), 1.0, rel_tol=1e-12)
    np.testing.assert_allclose(g, -g[::-1], atol=0)
    assert g[hw] == 0.0
    # g(t) = -a t exp(...): negative for t > 0
    assert g[hw + 1] < 0 < g[hw - 1]


def test_dog_filter_matches_direct_convolution():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(40, 6))
    v = VideoTensor(x, 3, 2, 30)
    out = dog_filter(v, 2.0, 4).data
    g = dog_kernel(2.0, 4)
    for j in range(6):
        np.testing.assert_allclose(out[:, j], convolve_direct(v.data[:, j].astype(float), g),
                                   atol=1e-5)


def test_constant_video_filters_to_zero():
    v = VideoTensor(np.full((30, 4), 0.7), 2, 2, 30)
    assert np.all(dog_filter(v).data == 0.0)


def test_ramp_interior_is_constant():
    hw, sigma = 5, 2.5
    t = np.arange(60, dtype=np.float64)
    out = dog_filter(series_video(0.5 * t), sigma, hw).data[:, 0]
    g = dog_kernel(sigma, hw)
    k = np.arange(-hw, hw + 1)
    # (g * x)(t) = sum_k g[k] x(t - k) = -slope * sum_k k g[k] for a ramp
    expect = -0.5 * np.sum(k * g)
    np.testing.assert_allclose(out[hw:-hw], expect, rtol=1e-5)
    assert expect > 0


def test_cosine_gets_quarter_period_shift():
    hw, sigma, period = 5, 2.5, 20.0
    w = 2 * np.pi / period
    t = np.arange(200, dtype=np.float64)
    x = np.cos(w * t)
    out = dog_filter(series_video(x), sigma, hw).data[:, 0].astype(np.float64)
    g = dog_kernel(sigma, hw)
    k = np.arange(-hw, hw + 1)
    # odd kernel: sum_k g[k] cos(w(t - k)) = sin(wt) * 2 sum_{k>0} g[k] sin(wk)
    gain = 2.0 * np.sum(g[k > 0] * np.sin(w * k[k > 0]))
    expect = gain * np.sin(w * t)
    np.testing.assert_allclose(out[hw:-hw], expect[hw:-hw], atol=1e-6)


@settings(max_examples=25, deadline=None)
@given(c=st.floats(-50, 50), seed=st.integers(0, 1000))
def test_dog_filter_ignores_constant_offsets(c, seed):
    x = np.random.default_rng(seed).random((25, 3))
    a = dog_filter(VideoTensor(x, 3, 1, 30)).data
    b = dog_filter(VideoTensor(x + c, 3, 1, 30)).data
    np.testing.assert_allclose(a, b, atol=1e-5 * (1 + abs(c)))


def test_dog_filter_rejects_bad_widths():
    with pytest.raises(EmbeddingError):
        dog_kernel(0.0, 3)
    with pytest.raises(EmbeddingError):
        dog_kernel(1.0, 0)


# ---------------------------------------------------------------------------
# SVD frame reduction

@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 20), w=st.integers(1, 8), h=st.integers(1, 8), seed=st.integers(0, 10 ** 6))
def test_full_energy_preserves_frame_distances(n, w, h, seed):
    X = np.random.default_rng(seed).normal(size=(n, w * h)).astype(np.float32)
    fc = svd_frame_reduce(VideoTensor(X, w, h, 30), 1.0)
    D_raw = pairwise_sq_dist_loop(X.astype(np.float64))
    D_red = pairwise_sq_dist_loop(fc.coords)
    scale = max(D_raw.max(), 1e-300)
    np.testing.assert_allclose(np.sqrt(D_red), np.sqrt(D_raw), atol=1e-6 * math.sqrt(scale))
    assert fc.dim <= n
    assert math.isclose(fc.basis_energy, 1.0, rel_tol=1e-9)


def test_gram_route_and_direct_route_agree():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(6, 4))
    wide = np.hstack([X, np.zeros((6, 10))])  # more pixels than frames
    a = svd_frame_reduce(X)
    b = svd_frame_reduce(wide)
    np.testing.assert_allclose(pairwise_sq_dist_loop(a.coords), pairwise_sq_dist_loop(b.coords),
                               atol=1e-9)


@pytest.mark.parametrize("energy", [0.1, 0.5, 1.0])
def test_rank_one_video(energy):
    frame = np.random.default_rng(1).random(64)
    weights = np.array([1.0, 2.0, -0.5, 3.0, 0.25])
    v = VideoTensor(weights[:, None] * frame[None, :], 8, 8, 30)
    fc = svd_frame_reduce(v, energy)
    assert fc.dim == 1


def test_energy_truncation_keeps_enough():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(30, 5)) * np.array([10, 5, 1, 0.5, 0.1])
    fc = svd_frame_reduce(X, 0.9)
    assert fc.basis_energy >= 0.9
    assert fc.dim < 5


def test_identical_frames_have_zero_distances():
    v = VideoTensor(np.tile(np.arange(12.0), (7, 1)), 4, 3, 30)
    fc = svd_frame_reduce(v)
    assert np.abs(pairwise_sq_dist_loop(fc.coords)).max() < 1e-9


def test_all_zero_video_is_degenerate():
    v = VideoTensor(np.zeros((5, 9)), 3, 3, 30)
    with pytest.warns(RuntimeWarning):
        fc = svd_frame_reduce(v)
    assert fc.degenerate and fc.dim == 1
    assert np.all(fc.coords == 0)


def test_energy_out_of_range():
    with pytest.raises(EmbeddingError):
        svd_frame_reduce(np.ones((3, 3)), 0.0)
    with pytest.raises(EmbeddingError):
        svd_frame_reduce(np.ones((3, 3)), 1.5)


# ---------------------------------------------------------------------------
# sliding windows

def test_d_zero_gives_the_frames():
    X = np.random.default_rng(0).normal(size=(10, 3))
    c = sliding_window(X, 0, 1.0, 10)
    np.testing.assert_array_equal(c.points, X)


def test_fractional_time_interpolates():
    c = sliding_window(np.array([0.0, 1.0, 2.0, 3.0]), 1, 1.0, 5)
    np.testing.assert_allclose(c.times, [0, 0.5, 1, 1.5, 2])
    np.testing.assert_allclose(c.points[1], [0.5, 1.5])


def test_integer_tau_is_exact_concatenation():
    X = np.random.default_rng(4).normal(size=(20, 3))
    d, tau = 4, 2
    n = 20 - d * tau
    c = sliding_window(X, d, float(tau), n)
    brute = np.stack([np.concatenate([X[t + tau * j] for j in range(d + 1)]) for t in range(n)])
    np.testing.assert_array_equal(c.points, brute)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(3, 40), d=st.integers(0, 6), tau=st.floats(0.1, 3.0),
       m=st.integers(1, 50), seed=st.integers(0, 1000))
def test_window_shapes_and_times(n, d, tau, m, seed):
    X = np.random.default_rng(seed).normal(size=(n, 2))
    if d * tau > n - 1 or (m > 1 and d * tau >= n - 1):
        with pytest.raises(EmbeddingError):
            sliding_window(X, d, tau, m)
        return
    c = sliding_window(X, d, tau, m)
    assert c.points.shape == (m, 2 * (d + 1))
    assert np.all(np.diff(c.times) > 0)
    assert c.times[-1] + d * tau <= n - 1 + 1e-9
    lo, hi = X.min(axis=0), X.max(axis=0)
    pts = c.points.reshape(m, d + 1, 2)
    assert np.all(pts >= lo - 1e-12) and np.all(pts <= hi + 1e-12)


def test_window_longer_than_video():
    with pytest.raises(EmbeddingError):
        sliding_window(np.zeros((10, 1)), 5, 2.0, 3)


def test_bad_parameters():
    X = np.zeros((10, 1))
    for d, tau, m in [(-1, 1.0, 3), (2, 0.0, 3), (2, 1.0, 0), (1.5, 1.0, 3)]:
        with pytest.raises(EmbeddingError):
            sliding_window(X, d, tau, m)


# ---------------------------------------------------------------------------
# normalization

def test_normalize_example():
    c = normalize_cloud(PointCloud(np.array([[1.0, 3.0]]), 1, 1.0, np.array([0.0])))
    np.testing.assert_allclose(c.points[0], [-1 / math.sqrt(2), 1 / math.sqrt(2)], atol=1e-15)
    assert c.normalized


@settings(max_examples=40, deadline=None)
@given(hnp.arrays(np.float64, st.tuples(st.integers(1, 20), st.integers(2, 12)),
                  elements=st.floats(-1e3, 1e3)))
def test_normalized_points_are_centred_unit_vectors(P):
    spread = P.max(axis=1) - P.min(axis=1)
    c = PointCloud(P, 1, 1.0, np.arange(P.shape[0], dtype=float))
    if np.any(spread <= 1e-6 * (1 + np.abs(P).max(axis=1))):
        return
    out = normalize_cloud(c)
    assert np.abs(out.points.mean(axis=1)).max() < 1e-12
    np.testing.assert_allclose(np.linalg.norm(out.points, axis=1), 1.0, atol=1e-12)


def test_normalize_is_idempotent_with_flag_cleared():
    P = np.random.default_rng(0).normal(size=(15, 6))
    once = normalize_cloud(PointCloud(P, 1, 1.0, np.arange(15.0)))
    again = normalize_cloud(PointCloud(once.points, 1, 1.0, np.arange(15.0)))
    np.testing.assert_allclose(again.points, once.points, atol=1e-12)


def test_constant_window_is_reported():
    P = np.array([[1.0, 2.0], [5.0, 5.0]])
    with pytest.raises(EmbeddingError, match="t=7"):
        normalize_cloud(PointCloud(P, 1, 1.0, np.array([3.0, 7.0])))


def test_normalizing_twice_is_refused():
    c = normalize_cloud(PointCloud(np.array([[0.0, 1.0]]), 1, 1.0, np.array([0.0])))
    with pytest.raises(EmbeddingError):
        normalize_cloud(c)


# ---------------------------------------------------------------------------
# window planning

def test_plan_window_example():
    p = plan_window(25.0, 10)
    assert math.isclose(p.window, 250 / 11, rel_tol=1e-12)
    assert math.isclose(p.tau, 25 / 11, rel_tol=1e-12)
    assert p.k == 1
    assert math.isclose(p.L, math.pi / 25)


def test_plan_window_grows_towards_the_period():
    windows = [plan_window(25.0, d).window for d in range(1, 200)]
    assert all(b > a for a, b in zip(windows, windows[1:]))
    assert windows[-1] < 25.0 and windows[-1] > 24.8


def test_plan_window_errors():
    with pytest.raises(EmbeddingError):
        plan_window(0.0, 5)
    with pytest.raises(EmbeddingError):
        plan_window(10.0, 0)


def test_frame_coords_accessors():
    fc = FrameCoords(np.zeros((4, 2)), 1.0)
    assert fc.count == 4 and fc.dim == 2
