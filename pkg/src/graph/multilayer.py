"""
Multilayered geometric graphs: h geometric graphs on a shared vertex set,
one per layer, where an edge of layer k carries colour k.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np
from scipy import sparse

from errors import ConfigError, DomainError, InvalidVertexError, ShapeError
from geometry.grid import SQRT2, GridIndex
from geometry.sampling import Point, sample_positions, substream
from settings import settings

logger = logging.getLogger(__name__)

MAX_LAYERS = 16
_GATHER_BYTES = 32 * 1024 ** 2
_DENSE_ROW_BYTES = 16 * 1024 ** 2


@dataclass(frozen=True)
class GraphParams:
    n: int
    r: float
    h: int

    def __post_init__(self):
        if self.n < 0:
            raise ConfigError(f"n must be non-negative, got {self.n}")
        if not (0.0 <= self.r <= SQRT2):
            raise DomainError(f"r must lie in [0, sqrt(2)], got {self.r}")
        if not (1 <= self.h <= MAX_LAYERS):
            raise ConfigError(f"h must lie in [1, {MAX_LAYERS}], got {self.h}")


class PositionAssignment:
    """positions[i, k] is the point of vertex i in layer k."""

    def __init__(self, coords):
        try:
            array = np.asarray(coords, dtype=np.float64)
        except (ValueError, TypeError) as e:
            raise ShapeError(f"position array is ragged: {e}") from e
        if array.ndim == 1 and array.size == 0:
            raise ShapeError("position array has no layer dimension; use shape (0, h, 2)")
        if array.ndim != 3 or array.shape[2] != 2:
            raise ShapeError(f"position array must have shape (n, h, 2), got {array.shape}")
        if array.shape[1] < 1:
            raise ShapeError("position array must have at least one layer")
        if array.size and (np.any(array < 0.0) or np.any(array > 1.0) or np.any(np.isnan(array))):
            raise DomainError("every position must lie in the unit square")
        array.setflags(write=False)
        self.coords = array

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def h(self) -> int:
        return self.coords.shape[1]

    def layer(self, k: int) -> np.ndarray:
        return self.coords[:, k, :]

    def point(self, i: int, k: int) -> Point:
        x, y = self.coords[i, k]
        return Point(float(x), float(y))

    def __eq__(self, other) -> bool:
        return isinstance(other, PositionAssignment) and np.array_equal(self.coords, other.coords)


def _layer_from_pairs(n: int, i: np.ndarray, j: np.ndarray) -> sparse.csr_matrix:
    rows = np.concatenate([i, j])
    cols = np.concatenate([j, i])
    data = np.ones(rows.size, dtype=bool)
    layer = sparse.csr_matrix((data, (rows, cols)), shape=(n, n))
    layer.sum_duplicates()
    layer.sort_indices()
    return layer


def _gather(indptr: np.ndarray, indices: np.ndarray, ids: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Concatenated CSR rows of ids, plus each row's length."""
    starts = indptr[ids]
    lengths = indptr[ids + 1] - starts
    total = int(lengths.sum())
    if total == 0:
        return indices[:0], lengths
    offsets = np.repeat(starts - np.cumsum(lengths) + lengths, lengths) + np.arange(total)
    return indices[offsets], lengths


class MultilayerGraph:
    """
    Colored multigraph on vertices 0..n-1 with one symmetric, irreflexive
    CSR adjacency per layer. Adjacency lists are the source of truth; dense
    bit rows are derived lazily for the rainbow DP when n is small enough.
    """

    def __init__(
        self,
        n: int,
        layers: Sequence[sparse.csr_matrix],
        r: Optional[float] = None,
        positions: Optional[PositionAssignment] = None,
        seed: Optional[int] = None,
        labels: Optional[Dict[int, str]] = None,
        bit_rows_max_n: Optional[int] = None,
    ):
        if not 1 <= len(layers) <= MAX_LAYERS:
            raise ConfigError(f"h must lie in [1, {MAX_LAYERS}], got {len(layers)}")
        self.n = n
        self.h = len(layers)
        self.r = r
        self.positions = positions
        self.seed = seed
        self.labels = dict(labels or {})
        self.layers: List[sparse.csr_matrix] = list(layers)
        self.bit_rows_max_n = settings.simulation.bit_rows_max_n if bit_rows_max_n is None else bit_rows_max_n
        self._bit_rows: Dict[int, np.ndarray] = {}
        self._int_layers: Dict[int, sparse.csr_matrix] = {}

    @property
    def params(self) -> Optional[GraphParams]:
        """None for adjacency-override graphs, which have no radius."""
        if self.r is None:
            return None
        return GraphParams(self.n, self.r, self.h)

    @property
    def words(self) -> int:
        return (self.n + 7) // 8

    def label(self, v: int) -> str:
        return self.labels.get(v, str(v))

    def check_vertex(self, v: int) -> None:
        if not (0 <= v < self.n):
            raise InvalidVertexError(f"vertex {v} out of range (n={self.n})")

    def check_layer(self, k: int) -> None:
        if not (0 <= k < self.h):
            raise InvalidVertexError(f"layer {k} out of range (h={self.h})")

    def neighbors(self, k: int, v: int) -> np.ndarray:
        self.check_layer(k)
        self.check_vertex(v)
        layer = self.layers[k]
        return layer.indices[layer.indptr[v]:layer.indptr[v + 1]]

    def ball(self, k: int, v: int) -> Set[int]:
        return set(int(u) for u in self.neighbors(k, v))

    def degrees(self, k: int) -> np.ndarray:
        self.check_layer(k)
        return np.diff(self.layers[k].indptr)

    def edge_counts(self) -> List[int]:
        return [int(layer.nnz // 2) for layer in self.layers]

    def edges(self, k: int) -> List[Tuple[int, int]]:
        """Edges of layer k as (i, j) with i < j, sorted."""
        self.check_layer(k)
        coo = sparse.triu(self.layers[k], k=1).tocoo()
        order = np.lexsort((coo.col, coo.row))
        return [(int(i), int(j)) for i, j in zip(coo.row[order], coo.col[order])]

    def bit_rows(self, k: int) -> Optional[np.ndarray]:
        """Packed little-endian adjacency rows of layer k, or None above the size cap."""
        if self.n > self.bit_rows_max_n:
            return None
        if k not in self._bit_rows:
            self._bit_rows[k] = self._pack_layer(self.layers[k])
        return self._bit_rows[k]

    def bit_rows_bytes(self) -> int:
        if self.n > self.bit_rows_max_n:
            return 0
        return self.h * self.n * self.words

    def _pack_layer(self, layer: sparse.csr_matrix) -> np.ndarray:
        rows = np.zeros((self.n, self.words), dtype=np.uint8)
        step = max(1, _DENSE_ROW_BYTES // max(1, self.n))
        for start in range(0, self.n, step):
            block = layer[start:start + step].toarray()
            rows[start:start + step] = np.packbits(block, axis=1, bitorder="little")
        return rows

    def _int_layer(self, k: int) -> sparse.csr_matrix:
        if k not in self._int_layers:
            self._int_layers[k] = self.layers[k].astype(np.int32)
        return self._int_layers[k]

    def neighborhood_union(self, k: int, bits: np.ndarray) -> np.ndarray:
        """
        For each packed row of `bits` (a vertex set), the packed union of the
        layer-k neighbourhoods of its members.
        """
        out = np.zeros_like(bits)
        members = np.unpackbits(bits, axis=1, count=self.n, bitorder="little")
        src, dst = np.nonzero(members)
        if src.size == 0:
            return out

        rows = self.bit_rows(k)
        if rows is not None:
            step = max(1, _GATHER_BYTES // max(1, self.words))
            for start in range(0, src.size, step):
                s = src[start:start + step]
                d = dst[start:start + step]
                seg = np.flatnonzero(np.r_[True, s[1:] != s[:-1]])
                out[s[seg]] |= np.bitwise_or.reduceat(rows[d], seg, axis=0)
            return out

        selector = sparse.csr_matrix(
            (np.ones(src.size, dtype=np.int32), (src, dst)), shape=(bits.shape[0], self.n)
        )
        hit_rows, hit_cols = (selector @ self._int_layer(k)).nonzero()
        dense = np.zeros((bits.shape[0], self.n), dtype=bool)
        dense[hit_rows, hit_cols] = True
        return np.packbits(dense, axis=1, bitorder="little")

    def expand(self, k: int, frontier: np.ndarray, excluded: np.ndarray) -> np.ndarray:
        """
        Boolean mask of vertices outside `excluded` adjacent in layer k to a
        vertex of `frontier`. Scans whichever side has fewer adjacency entries.
        """
        self.check_layer(k)
        layer = self.layers[k]
        degrees = np.diff(layer.indptr)
        frontier_ids = np.flatnonzero(frontier)
        candidate_ids = np.flatnonzero(~excluded)
        out = np.zeros(self.n, dtype=bool)
        if frontier_ids.size == 0 or candidate_ids.size == 0:
            return out

        if degrees[frontier_ids].sum() <= degrees[candidate_ids].sum():
            reached, _ = _gather(layer.indptr, layer.indices, frontier_ids)
            out[reached] = True
            out &= ~excluded
        else:
            neighbours, lengths = _gather(layer.indptr, layer.indices, candidate_ids)
            owners = np.repeat(candidate_ids, lengths)
            out[owners[frontier[neighbours]]] = True
        return out

    def same_as(self, other: "MultilayerGraph") -> bool:
        """Structural equality: parameters, positions and every layer."""
        if (self.n, self.h, self.r) != (other.n, other.h, other.r):
            return False
        if (self.positions is None) != (other.positions is None):
            return False
        if self.positions is not None and self.positions != other.positions:
            return False
        return all((a != b).nnz == 0 for a, b in zip(self.layers, other.layers))

    def __eq__(self, other) -> bool:
        return isinstance(other, MultilayerGraph) and self.same_as(other)

    __hash__ = None

    def __repr__(self) -> str:
        return f"MultilayerGraph(n={self.n}, h={self.h}, r={self.r}, edges={self.edge_counts()})"


def from_assignment(
    positions: PositionAssignment, r: float, seed: Optional[int] = None
) -> MultilayerGraph:
    """The deterministic graph G(n, r, h, b) for position assignment b."""
    if not isinstance(positions, PositionAssignment):
        positions = PositionAssignment(positions)
    params = GraphParams(positions.n, float(r), positions.h)
    layers = []
    for k in range(params.h):
        i, j = GridIndex(positions.layer(k), params.r).pairs()
        layers.append(_layer_from_pairs(params.n, i, j))
    graph = MultilayerGraph(params.n, layers, r=params.r, positions=positions, seed=seed)
    logger.debug(f"Built {graph!r}")
    return graph


def generate_random(params: GraphParams, seed: int, stream: Tuple[int, ...] = ()) -> MultilayerGraph:
    """
    G(n, r, h) with layer k positions drawn from substream (seed, *stream, k).
    Seed provenance is kept only for top-level graphs (empty stream).
    """
    coords = np.empty((params.n, params.h, 2), dtype=np.float64)
    for k in range(params.h):
        coords[:, k, :] = sample_positions(params.n, substream(seed, *stream, k))
    return from_assignment(PositionAssignment(coords), params.r, seed=seed if not stream else None)


def from_edge_lists(
    n: int,
    edge_lists: Sequence[Sequence[Tuple[int, int]]],
    labels: Optional[Dict[int, str]] = None,
) -> MultilayerGraph:
    """Adjacency-override graph: layers given directly, no positions or radius."""
    if n < 0:
        raise ConfigError(f"n must be non-negative, got {n}")
    layers = []
    for k, edges in enumerate(edge_lists):
        pairs = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if pairs.size and (pairs.min() < 0 or pairs.max() >= n):
            raise InvalidVertexError(f"layer {k} has an edge outside 0..{n - 1}")
        if np.any(pairs[:, 0] == pairs[:, 1]):
            raise ConfigError(f"layer {k} has a self-loop")
        layers.append(_layer_from_pairs(n, pairs[:, 0], pairs[:, 1]))
    return MultilayerGraph(n, layers, labels=labels)


def ball(g: MultilayerGraph, k: int, v: int) -> Set[int]:
    """B_k(v): the neighbours of v in layer k."""
    return g.ball(k, v)
