import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import periodogram_score
from vidrecur.ph import PersistenceDiagrams
from vidrecur.pipeline import frame_ssm
from vidrecur.scores import (NO_LATTICE, RecurrenceReport, ScoreError, cd_lattice_fit,
                             cd_lattice_score, cd_score_from_peaks, fit_lattice, frequency_score,
                             modified_periodicity_score, periodicity_score,
                             quasiperiodicity_score)
from vidrecur.tensorio import SynthSpec, synthesize

EMPTY = np.zeros((0, 2))


def dgms(h1, h2=None):
    pairs = [EMPTY, np.array(h1, dtype=float).reshape(-1, 2)]
    if h2 is not None:
        pairs.append(np.array(h2, dtype=float).reshape(-1, 2))
    return PersistenceDiagrams(3, len(pairs) - 1, pairs, 2.0)


def test_periodicity_score_examples():
    assert math.isclose(periodicity_score(dgms([[0, math.sqrt(3)]])), 1.0, abs_tol=1e-12)
    assert periodicity_score(dgms([])) == 0.0
    assert math.isclose(periodicity_score(dgms([[0.5, 1.5]])), 1 / math.sqrt(3), rel_tol=1e-12)


def test_modified_score_examples():
    assert math.isclose(modified_periodicity_score(dgms([[0, math.sqrt(3)]])), 1.0)
    assert modified_periodicity_score(dgms([[0, 1], [0, 1]])) == 0.0


def test_quasiperiodicity_score_examples():
    g = dgms([[0, 1], [0, 0.8]], [[0.9, 1.2]])
    assert math.isclose(quasiperiodicity_score(g), math.sqrt(0.8 * 0.3 / 3), rel_tol=1e-12)
    assert quasiperiodicity_score(dgms([[0, 1], [0, 0.8]], [])) == 0.0
    with pytest.raises(ScoreError):
        quasiperiodicity_score(dgms([[0, 1]]))


def test_scores_are_clamped():
    g = dgms([[0, 5.0], [0, 4.0]], [[0, 5.0]])
    assert periodicity_score(g) == 1.0
    assert quasiperiodicity_score(g) == 1.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 2)), max_size=8), st.randoms())
def test_scores_ignore_point_order_and_mps_below_ps(pairs, rnd):
    pairs = [(b, b + d) for b, d in pairs]
    shuffled = list(pairs)
    rnd.shuffle(shuffled)
    a, b = dgms(pairs, pairs), dgms(shuffled, shuffled)
    for f in (periodicity_score, modified_periodicity_score, quasiperiodicity_score):
        assert f(a) == f(b)
        assert 0.0 <= f(a) <= 1.0
    assert modified_periodicity_score(a) <= periodicity_score(a)


# ---------------------------------------------------------------------------
# frequency score

def _cos_columns(N=128, cols=4):
    t = np.arange(N)
    return np.column_stack([np.cos(2 * np.pi * t / 16 + k) for k in range(cols)])


def test_frequency_score_of_a_cosine():
    C = _cos_columns()
    s = frequency_score(C)
    assert s >= 5
    assert math.isclose(s, periodogram_score(C), rel_tol=1e-9)


@pytest.mark.parametrize("N", [64, 65])
def test_frequency_score_matches_explicit_dft(N):
    C = np.random.default_rng(N).normal(size=(N, 3))
    assert math.isclose(frequency_score(C), periodogram_score(C), rel_tol=1e-9)


def test_noise_scores_below_a_cosine():
    rng = np.random.default_rng(0)
    noise = np.median([frequency_score(rng.normal(size=(128, 4))) for _ in range(100)])
    assert noise < frequency_score(_cos_columns())


def test_constant_columns_score_zero():
    assert frequency_score(np.full((50, 5), 3.0)) == 0.0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10 ** 6), c=st.floats(-100, 100), scale=st.floats(0.01, 100))
def test_frequency_score_invariances(seed, c, scale):
    C = np.random.default_rng(seed).normal(size=(60, 3))
    base = frequency_score(C)
    assert math.isclose(frequency_score(C + c), base, rel_tol=1e-6)
    assert math.isclose(frequency_score(scale * C), base, rel_tol=1e-9)


def test_frequency_score_needs_columns():
    with pytest.raises(ScoreError):
        frequency_score(np.zeros((10, 1)))


# ---------------------------------------------------------------------------
# lattice score

def lattice_ssm(n, period):
    c = np.cos(2 * np.pi * np.arange(n) / period)
    return c[:, None] + c[None, :]


@pytest.mark.parametrize("n,period", [(64, 8), (80, 10), (96, 12)])
def test_exact_square_lattice_scores_one(n, period):
    fit = cd_lattice_fit(lattice_ssm(n, period))
    assert fit.score == 1.0
    assert (fit.kind, fit.spacing) == ("square", period)


def test_missing_peak_scores_above_one():
    fit = cd_lattice_fit(lattice_ssm(64, 8))
    for k in (0, 17, len(fit.peaks) // 2):
        assert fit_lattice(np.delete(fit.peaks, k, axis=0), 64).score > 1.0


def test_single_lattice_formula():
    pts = np.array([[0, 0], [0, 4], [4, 0], [0, -4], [-4, 0], [4, 4], [4, -4], [-4, 4], [-4, -4]])
    assert cd_score_from_peaks(pts, "square", 4, 4)[0] == 1.0
    # one peak off by one lag: E = 1
    moved = pts.copy()
    moved[1] = [0, 5]
    score, E, r1, r2 = cd_score_from_peaks(moved, "square", 4, 4)
    assert (E, r1, r2) == (1.0, 1.0, 1.0) and score == 2.0


def test_no_peaks_is_no_lattice():
    assert fit_lattice(np.zeros((0, 2), dtype=np.int64), 32).score == NO_LATTICE
    assert cd_lattice_score(np.zeros((20, 20))) == NO_LATTICE


def test_small_ssm_is_rejected():
    with pytest.raises(ScoreError):
        cd_lattice_score(np.zeros((10, 10)))


def test_pendulum_ssm_prefers_diamond():
    v = synthesize(SynthSpec("pendulum", frames=144, params={"period": 24}))
    fit = cd_lattice_fit(frame_ssm(v))
    assert fit.kind == "diamond" and fit.spacing == 12


def test_report_serialization():
    r = RecurrenceReport(0.5, 0.25, None, 3.0, NO_LATTICE, 0.9, 25.0, {"d": 20})
    out = r.to_dict()
    assert out["v"] == 1 and out["cd_score"] == "no-lattice" and out["qps"] is None
    assert RecurrenceReport(0.5, 0.25, 0.1, 3.0, 1.5, 0.9, None).to_dict()["cd_score"] == 1.5
