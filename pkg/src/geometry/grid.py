"""
Fixed-radius neighbour queries over a uniform grid of cells.

Adjacency uses the closed ball: two points are neighbours when their
Euclidean distance is <= r. The grid, the brute-force scan and the graph
builder all share `_within` so they agree on every boundary case.
"""

import math
from typing import Dict, Iterator, List, Tuple

import numpy as np

from errors import DomainError, InvalidVertexError

SQRT2 = math.sqrt(2.0)

# Self plus the four forward neighbours: each unordered cell pair is visited once.
_FORWARD_CELLS = ((0, 0), (1, -1), (1, 0), (1, 1), (0, 1))
_BLOCK_CELLS = tuple((dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1))
_PAIR_CHUNK = 4_000_000  # distance-matrix entries per block

Cell = Tuple[int, int]


def _within(d2: np.ndarray, r: float) -> np.ndarray:
    return d2 <= r * r


def _check_radius(r: float) -> float:
    r = float(r)
    if not (0.0 <= r <= SQRT2):
        raise DomainError(f"radius must lie in [0, sqrt(2)], got {r}")
    return r


class GridIndex:
    """
    Buckets points by cell so a radius-r query only inspects the 3x3 block
    around the query cell. Immutable after construction.
    """

    def __init__(self, points: np.ndarray, r: float):
        self.r = _check_radius(r)
        self.points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        # r >= 1: the 3x3 block would cover the square anyway, use one bucket
        self.dense = self.r >= 1.0
        self.cell_size = self.r if 0.0 < self.r < 1.0 else 1.0
        self.buckets: Dict[Cell, np.ndarray] = self._build_buckets()

    def __len__(self) -> int:
        return len(self.points)

    def _build_buckets(self) -> Dict[Cell, np.ndarray]:
        n = len(self.points)
        if n == 0:
            return {}
        if self.dense:
            return {(0, 0): np.arange(n, dtype=np.int64)}

        cells = np.floor(self.points / self.cell_size).astype(np.int64)
        order = np.lexsort((cells[:, 1], cells[:, 0]))
        sorted_cells = cells[order]
        breaks = np.flatnonzero(np.any(np.diff(sorted_cells, axis=0) != 0, axis=1)) + 1
        starts = np.r_[0, breaks]
        buckets = {}
        for key, ids in zip(sorted_cells[starts], np.split(order, breaks)):
            buckets[(int(key[0]), int(key[1]))] = ids
        return buckets

    def cell_of(self, v: int) -> Cell:
        if self.dense:
            return (0, 0)
        p = self.points[v]
        return (math.floor(p[0] / self.cell_size), math.floor(p[1] / self.cell_size))

    def _check_vertex(self, v: int) -> None:
        if not (0 <= v < len(self.points)):
            raise InvalidVertexError(f"vertex {v} is not indexed (n={len(self.points)})")

    def neighbors(self, v: int) -> np.ndarray:
        """Ids u != v with dist(u, v) <= r, ascending."""
        self._check_vertex(v)
        if self.r == 0.0:
            return np.empty(0, dtype=np.int64)

        cx, cy = self.cell_of(v)
        if self.dense:
            candidates = self.buckets[(0, 0)]
        else:
            found = [self.buckets.get((cx + dx, cy + dy)) for dx, dy in _BLOCK_CELLS]
            found = [ids for ids in found if ids is not None]
            candidates = np.concatenate(found)

        p = self.points[v]
        dx = self.points[candidates, 0] - p[0]
        dy = self.points[candidates, 1] - p[1]
        hits = candidates[_within(dx * dx + dy * dy, self.r) & (candidates != v)]
        return np.sort(hits)

    def _cell_pairs(self) -> Iterator[Tuple[np.ndarray, np.ndarray, bool]]:
        for (cx, cy), ids in self.buckets.items():
            for dx, dy in _FORWARD_CELLS:
                other = self.buckets.get((cx + dx, cy + dy))
                if other is not None:
                    yield ids, other, (dx, dy) == (0, 0)

    def pairs(self) -> Tuple[np.ndarray, np.ndarray]:
        """Every unordered pair (i < j) within distance r, each exactly once."""
        if self.r == 0.0 or len(self.points) < 2:
            empty = np.empty(0, dtype=np.int64)
            return empty, empty

        sources: List[np.ndarray] = []
        targets: List[np.ndarray] = []
        for a, b, same_cell in self._cell_pairs():
            step = max(1, _PAIR_CHUNK // len(b))
            for start in range(0, len(a), step):
                rows = a[start:start + step]
                dx = self.points[rows, 0][:, None] - self.points[b, 0][None, :]
                dy = self.points[rows, 1][:, None] - self.points[b, 1][None, :]
                hit = _within(dx * dx + dy * dy, self.r)
                if same_cell:
                    hit &= np.arange(start, start + len(rows))[:, None] < np.arange(len(b))[None, :]
                ia, ib = np.nonzero(hit)
                if ia.size:
                    i, j = rows[ia], b[ib]
                    sources.append(np.minimum(i, j))
                    targets.append(np.maximum(i, j))

        if not sources:
            empty = np.empty(0, dtype=np.int64)
            return empty, empty
        return np.concatenate(sources), np.concatenate(targets)


def radius_neighbors(index: GridIndex, v: int, r: float) -> np.ndarray:
    """Neighbours of v within r; the index must have been built for r."""
    if _check_radius(r) != index.r:
        raise DomainError(f"index was built for r={index.r}, queried with r={r}")
    return index.neighbors(v)


def brute_force_neighbors(points: np.ndarray, v: int, r: float) -> np.ndarray:
    """O(n) scan with the same distance predicate as the grid."""
    r = _check_radius(r)
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if not (0 <= v < len(points)):
        raise InvalidVertexError(f"vertex {v} is not in the point set (n={len(points)})")
    if r == 0.0:
        return np.empty(0, dtype=np.int64)
    dx = points[:, 0] - points[v, 0]
    dy = points[:, 1] - points[v, 1]
    hit = _within(dx * dx + dy * dy, r)
    hit[v] = False
    return np.flatnonzero(hit)
