"""Tests for hull construction and the edge-side membership test."""
from __future__ import annotations

import itertools

import numpy as np
import pytest

from src.core_model import DegenerateCluster
from src.utils.hull import (
    hull_contains,
    hull_edges,
    left_of_edge,
    quickhull,
    rectangle_hull,
    signed_area,
    within_hull,
)


def _inside_by_winding(point: np.ndarray, vertices: tuple) -> bool:
    # a point is inside a convex CCW polygon when every cross product is non-negative
    for (x1, y1), (x2, y2) in hull_edges(vertices):
        cross = (x2 - x1) * (point[1] - y1) - (y2 - y1) * (point[0] - x1)
        if cross < -1e-9:
            return False
    return True


def test_quickhull_drops_interior_points() -> None:
    points = [(0, 0), (4, 0), (4, 4), (0, 4), (2, 2), (1, 3)]
    vertices = quickhull(points)
    assert set(vertices) == {(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0)}
    assert signed_area(vertices) == pytest.approx(16.0)


def test_quickhull_rejects_collinear_points() -> None:
    with pytest.raises(DegenerateCluster):
        quickhull([(0, 0), (1, 1), (2, 2), (3, 3)])


def test_quickhull_rejects_two_distinct_points() -> None:
    with pytest.raises(DegenerateCluster):
        quickhull([(0, 0), (0, 0), (1, 1)])


def test_rectangle_hull_is_counterclockwise() -> None:
    vertices = rectangle_hull([(10, 2), (12, 2)], margin=0.5)
    assert vertices[0] == (9.5, 1.5)
    assert signed_area(vertices) > 0
    assert within_hull(11, 2, vertices)
    assert not within_hull(11, 3, vertices)


def test_points_on_edges_count_as_inside() -> None:
    vertices = ((0.0, 0.0), (4.0, 0.0), (0.0, 4.0))
    assert within_hull(2.0, 2.0, vertices)
    assert within_hull(0.0, 0.0, vertices)
    assert not within_hull(2.1, 2.1, vertices)


def test_left_of_edge_rejects_zero_length_edge() -> None:
    with pytest.raises(ValueError):
        left_of_edge(0.0, 0.0, ((1.0, 1.0), (1.0, 1.0)))


def test_membership_agrees_with_cross_product_oracle() -> None:
    rng = np.random.default_rng(5)
    for _ in range(20):
        cloud = rng.uniform(0, 100, size=(12, 2))
        vertices = quickhull(cloud)
        queries = rng.uniform(-10, 110, size=(50, 2))
        vectorized = hull_contains(vertices, queries)
        for query, inside in zip(queries, vectorized):
            assert inside == _inside_by_winding(query, vertices)
            assert inside == within_hull(query[0], query[1], vertices)
        assert hull_contains(vertices, cloud).all()


def _extreme_points(points: np.ndarray) -> set[tuple[float, float]]:
    # (i, j) is a hull edge when every other point lies strictly to its left
    extreme = set()
    for i, j in itertools.permutations(range(len(points)), 2):
        (x1, y1), (x2, y2) = points[i], points[j]
        others = np.delete(points, [i, j], axis=0)
        cross = (x2 - x1) * (others[:, 1] - y1) - (y2 - y1) * (others[:, 0] - x1)
        if (cross > 0).all():
            extreme.update({(float(x1), float(y1)), (float(x2), float(y2))})
    return extreme


def test_quickhull_matches_edge_enumeration() -> None:
    rng = np.random.default_rng(17)
    for size in (3, 5, 8, 13, 21):
        for _ in range(10):
            points = rng.uniform(0, 1440, size=(size, 2))
            vertices = quickhull(points)
            assert set(vertices) == _extreme_points(points)
            assert signed_area(vertices) > 0
