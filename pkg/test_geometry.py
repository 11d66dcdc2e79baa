import math

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from errors import DomainError, InvalidVertexError
from geometry.grid import SQRT2, GridIndex, brute_force_neighbors, radius_neighbors
from geometry.probability import (
    pair_adjacency_probability,
    pair_probability_by_quadrature,
    pair_probability_lower_bound,
)
from geometry.sampling import Point, sample_positions, substream


def test_point_rejects_outside_square():
    assert Point(0.0, 1.0).as_tuple() == (0.0, 1.0)
    with pytest.raises(DomainError):
        Point(1.5, 0.2)


def test_sample_positions_empty():
    assert sample_positions(0, substream(1)).shape == (0, 2)


def test_sample_positions_deterministic():
    a = sample_positions(1000, substream(42, 3, 1))
    b = sample_positions(1000, substream(42, 3, 1))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample_positions(1000, substream(42, 3, 2)))


def test_sample_positions_uniform():
    points = sample_positions(10 ** 5, substream(2024))
    assert abs(points[:, 0].mean() - 0.5) < 0.005
    assert abs((points[:, 0] < 0.25).mean() - 0.25) < 0.01
    assert points.min() >= 0.0 and points.max() <= 1.0


def test_negative_vertex_count_rejected():
    with pytest.raises(DomainError):
        sample_positions(-1, substream(0))


def test_radius_query_closed_ball():
    index = GridIndex(np.array([[0.0, 0.0], [0.0, 0.5], [0.0, 1.0]]), 0.5)
    assert list(radius_neighbors(index, 0, 0.5)) == [1]
    assert list(radius_neighbors(index, 1, 0.5)) == [0, 2]


def test_isolated_vertex_has_no_neighbours():
    index = GridIndex(np.array([[0.1, 0.1], [0.9, 0.9]]), 0.2)
    assert len(index.neighbors(0)) == 0


def test_zero_radius_has_no_neighbours():
    index = GridIndex(np.array([[0.3, 0.3], [0.3, 0.3]]), 0.0)
    assert len(index.neighbors(0)) == 0
    i, j = index.pairs()
    assert len(i) == 0


def test_unknown_vertex_rejected():
    index = GridIndex(np.array([[0.3, 0.3]]), 0.1)
    with pytest.raises(InvalidVertexError):
        index.neighbors(5)


def test_radius_must_match_index():
    index = GridIndex(np.array([[0.3, 0.3]]), 0.1)
    with pytest.raises(DomainError):
        radius_neighbors(index, 0, 0.2)


@pytest.mark.parametrize("r", [0.01, 0.1, 0.5, 1.0, 1.4])
def test_grid_equals_brute_force(r):
    points = sample_positions(2000, substream(11, int(r * 100)))
    index = GridIndex(points, r)
    for v in range(0, 2000, 97):
        assert set(index.neighbors(v)) == set(brute_force_neighbors(points, v, r))


def test_grid_equals_brute_force_n500():
    points = sample_positions(500, substream(5))
    index = GridIndex(points, 0.1)
    for v in range(500):
        assert set(index.neighbors(v)) == set(brute_force_neighbors(points, v, 0.1))


@hsettings(max_examples=40, deadline=None)
@given(
    n=st.integers(min_value=0, max_value=60),
    r=st.floats(min_value=0.0, max_value=SQRT2),
    seed=st.integers(min_value=0, max_value=2 ** 32),
)
def test_pairs_match_brute_force(n, r, seed):
    points = sample_positions(n, substream(seed))
    i, j = GridIndex(points, r).pairs()
    found = set(zip(i.tolist(), j.tolist()))
    expected = {
        (a, b) for a in range(n) for b in brute_force_neighbors(points, a, r).tolist() if a < b
    }
    assert found == expected
    assert all(a < b for a, b in found)


def test_pair_probability_endpoints():
    assert pair_adjacency_probability(0.0) == 0.0
    assert pair_adjacency_probability(SQRT2) == 1.0


def test_pair_probability_value():
    assert pair_adjacency_probability(0.1) == pytest.approx(0.0287993, abs=1e-6)
    assert pair_adjacency_probability(0.5) == pytest.approx(math.pi / 4 - 1 / 3 + 1 / 32, abs=1e-12)


def test_pair_probability_domain():
    with pytest.raises(DomainError):
        pair_adjacency_probability(-0.1)
    with pytest.raises(DomainError):
        pair_adjacency_probability(1.5)


def test_pair_probability_continuous_at_one():
    left = pair_adjacency_probability(1.0)
    right = pair_adjacency_probability(1.0 + 1e-12)
    assert abs(left - right) < 1e-8


def test_quadrature_agrees_with_closed_form():
    for r in (0.05, 0.3, 0.7, 1.0):
        assert pair_probability_by_quadrature(r) == pytest.approx(pair_adjacency_probability(r), abs=1e-10)


def test_pair_probability_monotone():
    radii = np.linspace(0.0, SQRT2, 301)
    values = [pair_adjacency_probability(float(r)) for r in radii]
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_pair_probability_bounds_small_radius():
    for r in np.linspace(0.0, 0.5, 51):
        p = pair_adjacency_probability(float(r))
        assert pair_probability_lower_bound(float(r)) - 1e-15 <= p <= math.pi * r * r + 1e-15


def test_empirical_adjacency_frequency():
    for r in (0.1, 0.2):
        rng = substream(99, int(r * 10))
        a = rng.random((10 ** 6, 2))
        b = rng.random((10 ** 6, 2))
        hits = np.count_nonzero(((a - b) ** 2).sum(axis=1) <= r * r) / 10 ** 6
        p = pair_adjacency_probability(r)
        assert abs(hits - p) <= 4 * math.sqrt(p * (1 - p) / 10 ** 6)
