"""Convex-hull geometry over (arrival, duration) points."""
from __future__ import annotations

from typing import Any, Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from ..core_model import DegenerateCluster

Vertex = tuple[float, float]

EDGE_TOLERANCE = 1e-7
RECTANGLE_MARGIN = 0.5


def _as_points(points: Any) -> np.ndarray:
    array = np.asarray(points, dtype=float)
    if array.size == 0:
        return np.zeros((0, 2))
    return array.reshape(-1, 2)


def quickhull(points: Any) -> tuple[Vertex, ...]:
    """Return the hull vertices of a point set in counterclockwise order.

    Raises:
        DegenerateCluster: If fewer than three distinct points remain or they are collinear.
    """

    distinct = np.unique(_as_points(points), axis=0)
    if len(distinct) < 3:
        raise DegenerateCluster(f"Need 3 distinct points for a hull; got {len(distinct)}.")
    try:
        hull = ConvexHull(distinct)
    except QhullError as exc:
        raise DegenerateCluster("Points are collinear; no hull with positive area.") from exc
    # scipy lists 2-D hull vertices counterclockwise
    return tuple((float(x), float(y)) for x, y in distinct[hull.vertices])


def rectangle_hull(points: Any, margin: float = RECTANGLE_MARGIN) -> tuple[Vertex, ...]:
    """Axis-aligned bounding rectangle inflated by ``margin``, counterclockwise."""

    array = _as_points(points)
    if len(array) == 0:
        raise ValueError("Cannot build a rectangle around zero points.")
    x_min, y_min = array.min(axis=0) - margin
    x_max, y_max = array.max(axis=0) + margin
    return (
        (float(x_min), float(y_min)),
        (float(x_max), float(y_min)),
        (float(x_max), float(y_max)),
        (float(x_min), float(y_max)),
    )


def signed_area(vertices: Sequence[Vertex]) -> float:
    array = _as_points(vertices)
    x, y = array[:, 0], array[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def edge_expression(t1: Any, t2: Any, start: Vertex, end: Vertex) -> Any:
    """Signed side test of (t1, t2) against the edge start->end (<= 0 means left or on)."""

    x1, y1 = start
    x2, y2 = end
    return t1 * (y2 - y1) - t2 * (x2 - x1) - (x1 * y2 - x2 * y1)


def left_of_edge(t1: float, t2: float, edge: tuple[Vertex, Vertex]) -> bool:
    """True when the point lies left of, or on, a counterclockwise hull edge."""

    start, end = edge
    if tuple(start) == tuple(end):
        raise ValueError("Edge endpoints must differ.")
    return bool(edge_expression(t1, t2, start, end) <= EDGE_TOLERANCE)


def hull_edges(vertices: Sequence[Vertex]) -> list[tuple[Vertex, Vertex]]:
    count = len(vertices)
    return [(tuple(vertices[i]), tuple(vertices[(i + 1) % count])) for i in range(count)]


def within_hull(t1: float, t2: float, vertices: Sequence[Vertex]) -> bool:
    return all(left_of_edge(t1, t2, edge) for edge in hull_edges(vertices))


def hull_contains(vertices: Sequence[Vertex], points: Any) -> np.ndarray:
    """Vectorized membership for an [n, 2] point array."""

    array = _as_points(points)
    inside = np.ones(len(array), dtype=bool)
    for start, end in hull_edges(vertices):
        inside &= edge_expression(array[:, 0], array[:, 1], start, end) <= EDGE_TOLERANCE
    return inside


__all__ = [
    "EDGE_TOLERANCE",
    "RECTANGLE_MARGIN",
    "Vertex",
    "edge_expression",
    "hull_contains",
    "hull_edges",
    "left_of_edge",
    "quickhull",
    "rectangle_hull",
    "signed_area",
    "within_hull",
]
