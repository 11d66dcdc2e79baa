"""
Exhaustive checks for the rainbow engine. Exponential; small graphs only.
"""

from typing import List, Optional, Set

from errors import BudgetError
from graph.multilayer import MultilayerGraph
from rainbow.engine import WitnessPath

ORACLE_MAX_N = 12


def brute_force_rainbow_reachable(g: MultilayerGraph, u: int) -> Set[int]:
    """DFS over simple paths whose edges have pairwise distinct colours."""
    if g.n > ORACLE_MAX_N:
        raise BudgetError(f"brute-force oracle refuses n={g.n} (limit {ORACLE_MAX_N})")
    g.check_vertex(u)
    adjacency: List[List[List[int]]] = [
        [[int(w) for w in g.neighbors(k, v)] for v in range(g.n)] for k in range(g.h)
    ]
    reached = {u}

    def walk(x: int, used: int, on_path: int) -> None:
        for c in range(g.h):
            if used >> c & 1:
                continue
            for y in adjacency[c][x]:
                if on_path >> y & 1:
                    continue
                reached.add(y)
                walk(y, used | 1 << c, on_path | 1 << y)

    walk(u, 0, 1 << u)
    return reached


def validate_witness(
    g: MultilayerGraph, path: Optional[WitnessPath], u: int, v: int
) -> bool:
    """True when path is a rainbow path from u to v in g."""
    if path is None:
        return False
    vertices, colors = path.vertices, path.colors
    if len(vertices) != len(colors) + 1 or not 1 <= len(colors) <= g.h:
        return False
    if vertices[0] != u or vertices[-1] != v:
        return False
    if len(set(vertices)) != len(vertices) or len(set(colors)) != len(colors):
        return False
    for a, b, c in zip(vertices, vertices[1:], colors):
        if not (0 <= c < g.h) or not (0 <= a < g.n) or not (0 <= b < g.n):
            return False
        if b not in g.ball(c, a):
            return False
    return True
