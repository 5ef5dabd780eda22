import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import naive_rips_diagrams
from vidrecur.ph import (PersistenceDiagrams, PersistenceInputError, enclosing_radius,
                         load_diagrams_csv, mp, rips_persistence, save_diagrams_csv)


def as_multiset(dgm):
    return sorted((float(b), float(d)) for b, d in dgm)


def random_matrix(rng, n, ties):
    A = rng.random((n, n))
    if ties:
        A = np.round(A * 5) / 5 + 0.2
    D = np.triu(A, 1)
    return D + D.T


def polygon(k, radius=1.0):
    ang = 2 * np.pi * np.arange(k) / k
    P = radius * np.column_stack([np.cos(ang), np.sin(ang)])
    return np.sqrt(((P[:, None] - P[None]) ** 2).sum(-1))


@settings(max_examples=120, deadline=None)
@given(n=st.integers(1, 8), seed=st.integers(0, 2 ** 32 - 1), ties=st.booleans(),
       prime=st.sampled_from([2, 3, 5, 7]), max_dim=st.integers(0, 2),
       thr=st.sampled_from(["auto", math.inf, 0.5]))
def test_matches_naive_reduction(n, seed, ties, prime, max_dim, thr):
    D = random_matrix(np.random.default_rng(seed), n, ties)
    got = rips_persistence(D, max_dim, prime, thr)
    want = naive_rips_diagrams(D, max_dim, prime, got.threshold)
    for k in range(max_dim + 1):
        assert as_multiset(got[k]) == want[k], f"dimension {k}"


def test_two_points():
    g = rips_persistence(np.array([[0.0, 0.7], [0.7, 0.0]]), 1)
    assert as_multiset(g[0]) == [(0.0, 0.7), (0.0, math.inf)]
    assert g[1].shape == (0, 2)


@pytest.mark.parametrize("prime", [2, 3])
def test_unit_square(prime):
    D = polygon(4, 1 / math.sqrt(2))
    g = rips_persistence(D, 1, prime, math.inf)
    assert g[1].shape == (1, 2)
    np.testing.assert_allclose(g[1][0], [1.0, math.sqrt(2)], atol=1e-12)


@pytest.mark.parametrize("prime", [2, 3])
def test_hexagon(prime):
    g = rips_persistence(polygon(6), 2, prime, math.inf)
    assert g[1].shape == (1, 2)
    np.testing.assert_allclose(g[1][0], [1.0, math.sqrt(3)], atol=1e-9)
    assert math.isclose(mp(g, 1, 1), math.sqrt(3) - 1, rel_tol=1e-9)
    # K6 minus the three diameters is an octahedron boundary
    np.testing.assert_allclose(g[2], [[math.sqrt(3), 2.0]], atol=1e-9)


def test_hexagon_auto_threshold_keeps_the_loop():
    g = rips_persistence(polygon(6), 1)
    np.testing.assert_allclose(g[1], [[1.0, math.sqrt(3)]], atol=1e-9)


def test_octahedron_has_a_void():
    P = np.vstack([np.eye(3), -np.eye(3)])
    D = np.sqrt(((P[:, None] - P[None]) ** 2).sum(-1))
    g = rips_persistence(D, 2, 3, math.inf)
    np.testing.assert_allclose(g[2], [[math.sqrt(2), 2.0]], atol=1e-12)


def test_one_essential_component_when_connected():
    D = random_matrix(np.random.default_rng(0), 30, False)
    g = rips_persistence(D, 1)
    assert np.isinf(g[0][:, 1]).sum() == 1
    fin = g.finite(1)
    assert np.all(fin[:, 0] <= fin[:, 1]) and np.all(fin[:, 1] <= g.threshold)


@pytest.mark.parametrize("prime", [2, 3])
def test_primes_agree_on_circle_samples(prime):
    rng = np.random.default_rng(1)
    ang = np.sort(rng.random(40)) * 2 * np.pi
    P = np.column_stack([np.cos(ang), np.sin(ang)]) + 0.05 * rng.normal(size=(40, 2))
    D = np.sqrt(((P[:, None] - P[None]) ** 2).sum(-1))
    a = rips_persistence(D, 2, 2)
    b = rips_persistence(D, 2, prime)
    for k in range(3):
        np.testing.assert_array_equal(a[k], b[k])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10 ** 6), c=st.sampled_from([0.5, 2.0, 4.0, 0.125]))
def test_scaling_by_powers_of_two_is_exact(seed, c):
    D = random_matrix(np.random.default_rng(seed), 9, False)
    a = rips_persistence(D, 2)
    b = rips_persistence(c * D, 2)
    for k in range(3):
        np.testing.assert_array_equal(a[k] * c, b[k])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10 ** 6), delta=st.floats(1e-4, 0.05))
def test_lifetimes_are_stable(seed, delta):
    rng = np.random.default_rng(seed)
    D = random_matrix(rng, 10, False)
    E = np.triu(rng.uniform(-delta, delta, D.shape), 1)
    D2 = np.clip(D + E + E.T, 0, None)
    np.fill_diagonal(D2, 0)
    a = rips_persistence(D, 1, 3, math.inf)
    b = rips_persistence(D2, 1, 3, math.inf)
    for i in (1, 2, 3):
        assert abs(mp(a, 1, i) - mp(b, 1, i)) <= 2 * delta + 1e-12


def _clique_counts(D, t):
    n = D.shape[0]
    adj = D <= t
    counts = []
    for k in range(1, n + 1):
        c = sum(1 for s in itertools.combinations(range(n), k)
                if all(adj[a, b] for a, b in itertools.combinations(s, 2)))
        if c == 0:
            break
        counts.append(c)
    return counts


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10 ** 6), n=st.integers(2, 7), q=st.floats(0, 1))
def test_euler_characteristic(seed, n, q):
    D = random_matrix(np.random.default_rng(seed), n, False)
    t = float(np.quantile(D[np.triu_indices(n, 1)], q))
    g = rips_persistence(D, 2, 3, math.inf)
    # with at most 7 vertices a flag complex has no homology above dimension 2
    betti = [int(np.sum((g[k][:, 0] <= t) & (g[k][:, 1] > t))) for k in range(3)]
    chi = sum((-1) ** k * c for k, c in enumerate(_clique_counts(D, t)))
    assert betti[0] - betti[1] + betti[2] == chi


def test_mp_examples():
    g = PersistenceDiagrams(3, 1, [np.zeros((0, 2)), np.array([[0, 1.0], [0.2, 0.5]])], 2.0)
    assert mp(g, 1, 1) == 1.0
    assert math.isclose(mp(g, 1, 2), 0.3)
    assert mp(g, 1, 3) == 0.0
    assert mp(g, 0, 1) == 0.0
    assert mp(g, 2, 1) == 0.0


def test_mp_ignores_essential_classes():
    g = PersistenceDiagrams(3, 0, [np.array([[0.0, 0.5], [0.0, math.inf]])], 1.0)
    assert mp(g, 0, 1) == 0.5
    assert mp(g, 0, 2) == 0.0


def test_enclosing_radius():
    D = np.array([[0, 1, 3], [1, 0, 2], [3, 2, 0]], dtype=float)
    assert enclosing_radius(D) == 2.0


@pytest.mark.parametrize("bad", [
    np.array([[0.0, 1.0], [2.0, 0.0]]),
    np.array([[0.0, -1.0], [-1.0, 0.0]]),
    np.array([[0.0, np.nan], [np.nan, 0.0]]),
    np.zeros((2, 3)),
])
def test_rejects_invalid_matrices(bad):
    with pytest.raises(PersistenceInputError):
        rips_persistence(bad)


def test_rejects_bad_options():
    D = polygon(4)
    with pytest.raises(PersistenceInputError):
        rips_persistence(D, 3)
    with pytest.raises(PersistenceInputError):
        rips_persistence(D, 1, 4)
    with pytest.raises(PersistenceInputError):
        rips_persistence(D, 1, 3, -1.0)


def test_empty_and_single_point():
    g = rips_persistence(np.zeros((0, 0)), 1)
    assert g[0].shape == (0, 2)
    g = rips_persistence(np.zeros((1, 1)), 1)
    assert as_multiset(g[0]) == [(0.0, math.inf)]


def test_csv_roundtrip(tmp_path):
    g = rips_persistence(polygon(6), 1, 3, math.inf)
    save_diagrams_csv(g, tmp_path / "d.csv")
    back = load_diagrams_csv(tmp_path / "d.csv")
    for k in range(2):
        np.testing.assert_array_equal(back[k], g[k])


def test_output_is_deterministic():
    D = random_matrix(np.random.default_rng(9), 40, True)
    a = rips_persistence(D, 2)
    b = rips_persistence(D, 2)
    for k in range(3):
        assert a[k].tobytes() == b[k].tobytes()
