"""
Rainbow reachability and connectivity of multilayered graphs.

A rainbow path uses pairwise distinct colours (layers), so it has at most
h edges. Reachability is a dynamic programme over colour subsets:

    R(empty) = {u},   R(S) = union over c in S of N_c(R(S - {c}))

where N_c is the layer-c neighbourhood union. R(S) is the set reached by
walks using each colour of S exactly once. A colour-distinct walk always
contains a colour-distinct simple path between its endpoints (cutting out
a cycle only removes edges), so walk and path semantics agree.

Vertex sets are packed little-endian bit rows, and the DP runs for a whole
block of sources at once.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from errors import BudgetError, ConfigError
from graph.multilayer import MultilayerGraph
from settings import settings

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ColorSet:
    """Subset of layer indices, stored as a bit mask."""

    mask: int

    @classmethod
    def of(cls, colors: Iterable[int]) -> "ColorSet":
        mask = 0
        for c in colors:
            mask |= 1 << c
        return cls(mask)

    @property
    def colors(self) -> Tuple[int, ...]:
        return tuple(c for c in range(self.mask.bit_length()) if self.mask >> c & 1)

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def __contains__(self, c: int) -> bool:
        return bool(self.mask >> c & 1)

    def without(self, c: int) -> "ColorSet":
        return ColorSet(self.mask & ~(1 << c))


@dataclass(frozen=True)
class ColorPermutation:
    """An ordering sigma of the layers 0..h-1."""

    sigma: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "sigma", tuple(int(c) for c in self.sigma))
        if sorted(self.sigma) != list(range(len(self.sigma))):
            raise ConfigError(f"{self.sigma} is not a permutation of 0..{len(self.sigma) - 1}")

    @property
    def h(self) -> int:
        return len(self.sigma)

    def __getitem__(self, i: int) -> int:
        return self.sigma[i]

    def __iter__(self) -> Iterator[int]:
        return iter(self.sigma)

    def reversed(self) -> "ColorPermutation":
        return ColorPermutation(self.sigma[::-1])


def all_permutations(h: int) -> List[ColorPermutation]:
    return [ColorPermutation(p) for p in itertools.permutations(range(h))]


@dataclass
class RainbowReport:
    connected: bool
    unconnected_pairs: int
    per_source_unconnected: List[int]
    first_failure: Optional[Tuple[int, int]] = None


@dataclass(frozen=True)
class WitnessPath:
    vertices: Tuple[int, ...]
    colors: Tuple[int, ...]

    @property
    def length(self) -> int:
        return len(self.colors)

    @property
    def color_set(self) -> ColorSet:
        return ColorSet.of(self.colors)


@dataclass(frozen=True)
class ExpansionProfile:
    source: int
    sigma: ColorPermutation
    sizes: Tuple[int, ...]
    frontiers: Tuple[Tuple[int, ...], ...] = field(default=(), compare=False, repr=False)


def _masks_by_popcount(h: int) -> List[int]:
    return sorted(range(1, 1 << h), key=lambda m: (bin(m).count("1"), m))


def _colors_of(mask: int) -> List[int]:
    return [c for c in range(mask.bit_length()) if mask >> c & 1]


def required_bytes(n: int, h: int, bit_rows_max_n: int) -> int:
    """Single-source DP states plus dense bit rows, when the graph would build them."""
    words = (n + 7) // 8
    rows = h * n * words if n <= bit_rows_max_n else 0
    return (1 << h) * words + rows


def _test_bits(row: np.ndarray, ids: np.ndarray) -> np.ndarray:
    return ((row[ids >> 3] >> (ids & 7).astype(np.uint8)) & 1).astype(bool)


class RainbowEngine:
    """
    Runs the colour-subset DP under a memory budget. Pure reads of the
    graph plus private scratch, so one engine can serve many workers.
    """

    def __init__(self, memory_budget_bytes: Optional[int] = None, scratch_bytes: Optional[int] = None):
        self._memory_budget_bytes = memory_budget_bytes
        self._scratch_bytes = scratch_bytes

    @property
    def memory_budget_bytes(self) -> int:
        return self._memory_budget_bytes or settings.simulation.memory_budget_bytes

    @property
    def scratch_bytes(self) -> int:
        return self._scratch_bytes or settings.simulation.scratch_bytes

    def check_budget(self, g: MultilayerGraph) -> None:
        self.check_budget_for(g.n, g.h, g.bit_rows_max_n)

    def check_budget_for(self, n: int, h: int, bit_rows_max_n: int) -> None:
        needed = required_bytes(n, h, bit_rows_max_n)
        if needed > self.memory_budget_bytes:
            raise BudgetError(
                f"rainbow DP for n={n}, h={h} needs {needed} bytes, "
                f"budget is {self.memory_budget_bytes}"
            )

    def block_size(self, g: MultilayerGraph) -> int:
        per_source = ((1 << g.h) + 8) * max(1, g.words)
        return max(1, min(g.n, self.scratch_bytes // per_source))

    def _initial_block(self, g: MultilayerGraph, sources: np.ndarray) -> np.ndarray:
        block = np.zeros((len(sources), g.words), dtype=np.uint8)
        block[np.arange(len(sources)), sources >> 3] = (1 << (sources & 7)).astype(np.uint8)
        return block

    def _run_block(
        self, g: MultilayerGraph, sources: np.ndarray, keep_states: bool
    ) -> Tuple[Optional[List[np.ndarray]], np.ndarray]:
        start = self._initial_block(g, sources)
        states: List[Optional[np.ndarray]] = [None] * (1 << g.h)
        states[0] = start
        union = start.copy()
        full = self._full_row(g)
        level = 0
        for mask in _masks_by_popcount(g.h):
            popcount = bin(mask).count("1")
            if popcount != level:
                level = popcount
                if not keep_states and np.all(union == full):
                    break
            acc = np.zeros_like(start)
            for c in _colors_of(mask):
                prev = states[mask ^ (1 << c)]
                if prev.any():
                    acc |= g.neighborhood_union(c, prev)
            states[mask] = acc
            union |= acc
        return (states if keep_states else None), union

    @staticmethod
    def _full_row(g: MultilayerGraph) -> np.ndarray:
        return np.packbits(np.ones(g.n, dtype=bool), bitorder="little")

    def _reach_rows(self, g: MultilayerGraph, union: np.ndarray) -> np.ndarray:
        return np.unpackbits(union, axis=1, count=g.n, bitorder="little").astype(bool)

    def _blocks(self, g: MultilayerGraph) -> Iterator[np.ndarray]:
        size = self.block_size(g)
        for start in range(0, g.n, size):
            yield np.arange(start, min(g.n, start + size), dtype=np.int64)

    def _growing_blocks(self, g: MultilayerGraph) -> Iterator[np.ndarray]:
        cap = self.block_size(g)
        start, size = 0, 1
        while start < g.n:
            yield np.arange(start, min(g.n, start + size), dtype=np.int64)
            start += size
            size = min(2 * size, cap)

    def reachable(self, g: MultilayerGraph, u: int) -> frozenset:
        """Vertices joined to u by a rainbow path, u included."""
        g.check_vertex(u)
        self.check_budget(g)
        _, union = self._run_block(g, np.array([u], dtype=np.int64), keep_states=False)
        return frozenset(int(v) for v in np.flatnonzero(self._reach_rows(g, union)[0]))

    def verdict(self, g: MultilayerGraph) -> Tuple[bool, Optional[Tuple[int, int]]]:
        """
        Connectivity verdict with early exit on the first failing source.
        Sources run in blocks of 1, 2, 4, ... up to block_size.
        """
        if g.n <= 1:
            return True, None
        self.check_budget(g)
        for sources in self._growing_blocks(g):
            _, union = self._run_block(g, sources, keep_states=False)
            reached = self._reach_rows(g, union)
            failing = np.flatnonzero(~reached.all(axis=1))
            if failing.size:
                row = failing[0]
                u = int(sources[row])
                v = int(np.flatnonzero(~reached[row])[0])
                logger.debug(f"No rainbow path between {u} and {v}")
                return False, (u, v)
        return True, None

    def is_rainbow_connected(self, g: MultilayerGraph) -> RainbowReport:
        """Full report: every source is evaluated."""
        if g.n <= 1:
            return RainbowReport(True, 0, [0] * g.n)
        self.check_budget(g)
        per_source: List[int] = []
        first_failure = None
        for sources in self._blocks(g):
            _, union = self._run_block(g, sources, keep_states=False)
            reached = self._reach_rows(g, union)
            missing = g.n - reached.sum(axis=1)
            per_source.extend(int(m) for m in missing)
            if first_failure is None and missing.any():
                row = int(np.flatnonzero(missing)[0])
                first_failure = (int(sources[row]), int(np.flatnonzero(~reached[row])[0]))
        pairs = sum(per_source) // 2
        return RainbowReport(pairs == 0, pairs, per_source, first_failure)

    def witness(self, g: MultilayerGraph, u: int, v: int) -> Optional[WitnessPath]:
        """
        Shortest rainbow path from u to v; ties go to the smaller colour mask,
        then, walking back from v, to the smaller predecessor id and colour.
        """
        g.check_vertex(u)
        g.check_vertex(v)
        if u == v:
            raise ConfigError("witness endpoints must be distinct")
        self.check_budget(g)
        states, _ = self._run_block(g, np.array([u], dtype=np.int64), keep_states=True)
        target = np.array([v], dtype=np.int64)
        for mask in _masks_by_popcount(g.h):
            if _test_bits(states[mask][0], target)[0]:
                return self._trace_back(g, states, mask, u, v)
        return None

    def _trace_back(
        self, g: MultilayerGraph, states: List[np.ndarray], mask: int, u: int, v: int
    ) -> WitnessPath:
        # minimal length makes the walk a simple path
        vertices = [v]
        colors: List[int] = []
        x = v
        while mask:
            best = None
            for c in _colors_of(mask):
                neighbours = g.neighbors(c, x).astype(np.int64)
                hits = neighbours[_test_bits(states[mask ^ (1 << c)][0], neighbours)]
                if hits.size and (best is None or (int(hits.min()), c) < best):
                    best = (int(hits.min()), c)
            w, c = best
            vertices.append(w)
            colors.append(c)
            mask ^= 1 << c
            x = w
        assert x == u
        return WitnessPath(tuple(reversed(vertices)), tuple(reversed(colors)))

    def sigma_neighborhoods(
        self, g: MultilayerGraph, u: int, sigma: Sequence[int]
    ) -> ExpansionProfile:
        """
        Layered search along sigma: F0 = {u}, F_l = N_sigma(l)(F_(l-1)) minus
        everything seen so far. F_l holds the vertices first reached by a
        sigma-rainbow path of length l.
        """
        g.check_vertex(u)
        if not isinstance(sigma, ColorPermutation):
            sigma = ColorPermutation(tuple(sigma))
        if sigma.h != g.h:
            raise ConfigError(f"permutation has {sigma.h} colours, graph has {g.h} layers")

        seen = np.zeros(g.n, dtype=bool)
        seen[u] = True
        frontier = seen.copy()
        frontiers = [(u,)]
        for color in sigma:
            frontier = g.expand(color, frontier, seen)
            seen |= frontier
            frontiers.append(tuple(int(x) for x in np.flatnonzero(frontier)))
        sizes = tuple(len(f) for f in frontiers)
        return ExpansionProfile(u, sigma, sizes, tuple(frontiers))


# Global engine instance
rainbow_engine = RainbowEngine()


def rainbow_reachable(g: MultilayerGraph, u: int) -> frozenset:
    return rainbow_engine.reachable(g, u)


def is_rainbow_connected(g: MultilayerGraph) -> RainbowReport:
    return rainbow_engine.is_rainbow_connected(g)


def rainbow_witness(g: MultilayerGraph, u: int, v: int) -> Optional[WitnessPath]:
    return rainbow_engine.witness(g, u, v)


def sigma_neighborhoods(g: MultilayerGraph, u: int, sigma: Sequence[int]) -> ExpansionProfile:
    return rainbow_engine.sigma_neighborhoods(g, u, sigma)
