import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from oracles import brute_bottleneck, brute_wasserstein, random_diagram
from topoconverge.diagrams import (
    CleanDiagram,
    SilhouetteCurve,
    bottleneck,
    clean,
    grid,
    heat,
    heat_at,
    heat_kernel,
    landscape,
    silhouette,
    tent,
    vector_distance,
    wasserstein,
)
from topoconverge.errors import CapacityExceeded, EmptyDiagram, GridMismatch
from topoconverge.persistence import PersistenceDiagram

INF = math.inf


def D(*pairs, dim=0):
    return CleanDiagram(dim, list(pairs))


# clean ----------------------------------------------------------------------

def test_clean_replaces_infinity():
    assert clean(PersistenceDiagram(0, [(0, INF)]), 0.01).as_pairs() == [(0.0, 1.0)]


def test_clean_drops_short_interval():
    assert clean(PersistenceDiagram(1, [(0.5, 0.505)]), 0.01).as_pairs() == []


def test_clean_keeps_lifespan_equal_to_eta():
    # 0.99 -> 1.0 after replacement; computed lifespan is 1.0 - 0.99 in floating point
    out = clean(PersistenceDiagram(1, [(0.99, INF)]), eta=1.0 - 0.99)
    assert out.as_pairs() == [(0.99, 1.0)]


def test_clean_replacement_happens_before_filter():
    assert clean(PersistenceDiagram(1, [(1 - 0.005, INF)]), 0.01).as_pairs() == []


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1) | st.just(INF)), max_size=20), st.floats(0, 0.2))
def test_clean_idempotent(pairs, eta):
    pairs = [(b, max(b, d)) for b, d in pairs]
    once = clean(PersistenceDiagram(0, pairs), eta)
    twice = clean(once, eta)
    np.testing.assert_array_equal(once.intervals, twice.intervals)
    assert np.all(once.intervals[:, 1] - once.intervals[:, 0] >= eta)


# tents, silhouette, landscape -----------------------------------------------

@pytest.mark.parametrize("interval,t,expected", [((0, 1), 0.5, 0.5), ((0, 1), -0.2, 0.0), ((0.2, 0.6), 0.5, 0.1)])
def test_tent(interval, t, expected):
    assert tent(interval, t) == pytest.approx(expected, abs=1e-15)


def test_silhouette_of_single_interval_is_its_tent():
    for p in (0.5, 1.0, 3.0):
        s = silhouette(D((0, 1)), power=p, n_bins=101)
        np.testing.assert_allclose(s.values, tent((0, 1), s.grid), atol=1e-12, rtol=0)
        assert s.values.max() == pytest.approx(0.5, abs=1e-12)


def test_silhouette_duplicate_interval_unchanged():
    a = silhouette(D((0, 1)), n_bins=50)
    b = silhouette(D((0, 1), (0, 1)), n_bins=50)
    np.testing.assert_allclose(a.values, b.values, atol=1e-15)


def test_silhouette_weighted_example():
    s = silhouette(D((0, 1), (0.4, 0.6)), power=1, n_bins=3)
    # grid is 0, 0.5, 1; at 0.5: (1 * 0.5 + 0.2 * 0.1) / 1.2
    assert s.values[1] == pytest.approx(0.52 / 1.2, abs=1e-12)


def test_silhouette_empty_raises():
    with pytest.raises(EmptyDiagram):
        silhouette(D())


def test_landscape_examples():
    lay = landscape(D((0, 1)), k_max=2, n_bins=3).layers
    np.testing.assert_allclose(lay[0], [0, 0.5, 0])
    np.testing.assert_allclose(lay[1], 0)
    lay = landscape(D((0, 1), (0.25, 0.75)), k_max=3, n_bins=3).layers
    assert (lay[0, 1], lay[1, 1], lay[2, 1]) == (0.5, 0.25, 0.0)
    lay = landscape(D((0, 0.4), (0.6, 1)), n_bins=3).layers
    assert lay[0, 1] == 0.0


def test_landscape_layers_monotone(rng):
    for _ in range(20):
        d = CleanDiagram(0, random_diagram(rng, 10))
        lay = landscape(d, k_max=4, n_bins=64).layers
        assert np.all(lay >= 0)
        assert np.all(np.diff(lay, axis=0) <= 0)


def test_summaries_vanish_outside_supports(rng):
    for _ in range(20):
        iv = random_diagram(rng, 6)
        if len(iv) == 0:
            continue
        d = CleanDiagram(0, iv)
        t = grid(200)
        covered = np.any((t[None, :] > iv[:, :1]) & (t[None, :] < iv[:, 1:]), axis=0)
        assert np.all(silhouette(d, n_bins=200).values[~covered] == 0)
        assert np.all(landscape(d, n_bins=200).layers[:, ~covered] == 0)


# heat -----------------------------------------------------------------------

def test_heat_kernel_integrates_to_one():
    t_heat = 0.1**2 / 2
    val, _ = integrate.dblquad(
        lambda y, x: heat_kernel(x * x + y * y, t_heat), -1, 1, -1, 1, epsabs=1e-12
    )
    assert val == pytest.approx(1.0, abs=1e-9)


def test_heat_empty_is_zero():
    assert np.all(heat(D(), 0.1, 20).values == 0)


def test_heat_closed_form_at_point():
    sigma = 0.1
    t_heat = sigma**2 / 2
    expected = (1 / (4 * math.pi * t_heat)) * (1 - math.exp(-2 * 0.36 / (4 * t_heat)))
    d = D((0.2, 0.8))
    assert heat_at(d, sigma, 0.2, 0.8) == pytest.approx(expected, rel=0, abs=1e-9)
    img = heat(d, sigma, n_bins=6)  # grid 0, 0.2, ..., 1.0 contains the point
    assert img.values[1, 4] == pytest.approx(expected, rel=0, abs=1e-9)


def test_heat_grid_agrees_with_pointwise(rng):
    d = CleanDiagram(1, random_diagram(rng, 8))
    img = heat(d, 0.07, n_bins=30)
    x1, x2 = np.meshgrid(img.grid, img.grid, indexing="ij")
    np.testing.assert_allclose(img.values, heat_at(d, 0.07, x1, x2), atol=1e-9, rtol=0)


def test_heat_antisymmetric_and_zero_on_diagonal(rng):
    for _ in range(10):
        d = CleanDiagram(0, random_diagram(rng, 10))
        img = heat(d, 0.1, n_bins=40)
        np.testing.assert_array_equal(img.values, -img.values.T)
        assert np.all(np.diag(img.values) == 0)
        v = np.linspace(0, 1, 17)
        assert np.all(heat_at(d, 0.1, v, v) == 0)


# vector distance ------------------------------------------------------------

def test_vector_distance_constant_curves():
    t = grid(100)
    a = SilhouetteCurve(t, np.ones(100), 1.0)
    b = SilhouetteCurve(t, np.zeros(100), 1.0)
    assert vector_distance(a, b) == pytest.approx(1.0, abs=1e-12)
    assert vector_distance(a, a) == 0.0


def test_vector_distance_symmetric(rng):
    for _ in range(10):
        d1 = CleanDiagram(0, random_diagram(rng, 5))
        d2 = CleanDiagram(0, random_diagram(rng, 5))
        a, b = heat(d1, 0.1, 25), heat(d2, 0.1, 25)
        assert vector_distance(a, b) == vector_distance(b, a)


def test_vector_distance_grid_mismatch():
    with pytest.raises(GridMismatch):
        vector_distance(heat(D((0, 1)), 0.1, 10), heat(D((0, 1)), 0.1, 11))
    with pytest.raises(GridMismatch):
        vector_distance(heat(D((0, 1)), 0.1, 10), heat(D((0, 1)), 0.2, 10))
    with pytest.raises(GridMismatch):
        vector_distance(heat(D((0, 1)), 0.1, 10), silhouette(D((0, 1)), 1, 10))


def test_vector_distance_of_landscapes():
    a = landscape(D((0, 1)), k_max=2, n_bins=3)
    b = landscape(D(), k_max=2, n_bins=3)
    # only the middle sample differs, by 0.5
    assert vector_distance(a, b) == pytest.approx(math.sqrt(0.25 / 3))


def test_silhouette_distance_is_stable(rng):
    for _ in range(10):
        iv = random_diagram(rng, 6)
        if len(iv) < 2:
            continue
        other = random_diagram(rng, 6)
        ref = CleanDiagram(0, other if len(other) else [(0.2, 0.7)])
        base = vector_distance(silhouette(CleanDiagram(0, iv), n_bins=200), silhouette(ref, n_bins=200))
        for delta in (1e-2, 1e-3, 1e-4):
            moved = iv.copy()
            moved[0, 1] = min(1.0, moved[0, 1] + delta)
            shifted = vector_distance(silhouette(CleanDiagram(0, moved), n_bins=200), silhouette(ref, n_bins=200))
            assert abs(shifted - base) <= 5 * delta


# matching distances -----------------------------------------------------------

def test_bottleneck_examples():
    assert bottleneck(D((0.1, 0.5), (0.2, 0.9)), D((0.1, 0.5), (0.2, 0.9))) == 0
    assert bottleneck(D((0, 1)), D()) == 0.5
    assert bottleneck(D((0, 1)), D((0.1, 1))) == pytest.approx(0.1, abs=1e-15)
    assert bottleneck(D(), D()) == 0


def test_wasserstein_examples():
    assert wasserstein(D((0.1, 0.5)), D((0.1, 0.5)), 1) == 0
    assert wasserstein(D((0, 1)), D(), 1) == 0.5
    assert wasserstein(D(), D(), 2) == 0


def test_exact_distance_point_limit():
    big = D(*[(0.0, 0.5)] * 40)
    with pytest.raises(CapacityExceeded):
        bottleneck(big, big)
    with pytest.raises(CapacityExceeded):
        wasserstein(big, big, 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_matching_distances_match_enumeration(seed):
    rng = np.random.default_rng(seed)
    a, b = random_diagram(rng, 5), random_diagram(rng, 5)
    assert bottleneck(a, b) == pytest.approx(brute_bottleneck(a, b), abs=1e-9)
    for p in (1, 2):
        assert wasserstein(a, b, p) == pytest.approx(brute_wasserstein(a, b, p), abs=1e-9)


def test_pseudometric_properties(rng):
    for _ in range(50):
        a, b, c = (CleanDiagram(0, random_diagram(rng, 6)) for _ in range(3))
        assert bottleneck(a, b) == bottleneck(b, a)
        assert bottleneck(a, c) <= bottleneck(a, b) + bottleneck(b, c) + 1e-9
        for p in (1, 2):
            assert wasserstein(a, b, p) == pytest.approx(wasserstein(b, a, p), abs=1e-12)
            assert wasserstein(a, c, p) <= wasserstein(a, b, p) + wasserstein(b, c, p) + 1e-9


def test_high_order_wasserstein_approaches_bottleneck(rng):
    for _ in range(50):
        a, b = random_diagram(rng, 6), random_diagram(rng, 6)
        assert abs(wasserstein(a, b, 64) - bottleneck(a, b)) <= 0.05
