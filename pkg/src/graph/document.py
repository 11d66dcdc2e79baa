"""
Graph documents: the JSON form of a MultilayerGraph.

Geometric graphs store positions and recompute adjacency on load; the
stored per-layer edge counts act as a checksum against radius or
convention drift. Adjacency-override graphs (fixtures) store edge lists.
"""

import json
from typing import Any, Dict, List, Union

import numpy as np

from errors import ConfigError, DocumentError
from graph.multilayer import MultilayerGraph, PositionAssignment, from_assignment, from_edge_lists

DOCUMENT_VERSION = 1


def _num(x: float) -> str:
    return format(float(x), ".17g")


def _vertex_positions(row: np.ndarray) -> str:
    return "[" + ",".join(f"[{_num(x)},{_num(y)}]" for x, y in row) + "]"


def serialize(g: MultilayerGraph) -> str:
    """Deterministic document text; identical graphs give identical bytes."""
    lines = ["{", f'  "version": {DOCUMENT_VERSION},', f'  "n": {g.n},']
    if g.positions is not None:
        lines.append(f'  "r": {_num(g.r)},')
        lines.append(f'  "h": {g.h},')
        if g.seed is not None:
            lines.append(f'  "seed": {int(g.seed)},')
        rows = [_vertex_positions(row) for row in g.positions.coords]
        if rows:
            lines.append('  "positions": [')
            lines.append(",\n".join("    " + row for row in rows))
            lines.append("  ],")
        else:
            lines.append('  "positions": [],')
    else:
        lines.append('  "r": null,')
        lines.append(f'  "h": {g.h},')
        layers = [json.dumps([list(e) for e in g.edges(k)], separators=(",", ":")) for k in range(g.h)]
        lines.append('  "layers": [')
        lines.append(",\n".join("    " + layer for layer in layers))
        lines.append("  ],")
        if g.labels:
            labels = {str(v): name for v, name in sorted(g.labels.items())}
            lines.append(f'  "labels": {json.dumps(labels)},')
    lines.append(f'  "layer_edge_counts": {json.dumps(g.edge_counts())}')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _require(doc: Dict[str, Any], key: str, kind) -> Any:
    if key not in doc:
        raise DocumentError(f"graph document is missing '{key}'")
    value = doc[key]
    if not isinstance(value, kind) or isinstance(value, bool):
        raise DocumentError(f"graph document field '{key}' has the wrong type")
    return value


def deserialize(document: Union[str, bytes, Dict[str, Any]]) -> MultilayerGraph:
    """Rebuild a graph from document text (or an already parsed mapping)."""
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as e:
            raise DocumentError(f"graph document is not valid JSON: {e}") from e
    else:
        doc = document
    if not isinstance(doc, dict):
        raise DocumentError("graph document must be a JSON object")

    version = _require(doc, "version", int)
    if version != DOCUMENT_VERSION:
        raise DocumentError(f"unsupported graph document version {version}")
    n = _require(doc, "n", int)
    h = _require(doc, "h", int)
    counts = _require(doc, "layer_edge_counts", list)

    try:
        if "positions" in doc:
            r = _require(doc, "r", (int, float))
            coords = doc["positions"]
            positions = PositionAssignment(coords if coords else np.empty((0, h, 2)))
            seed = doc.get("seed")
            if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool)):
                raise DocumentError("graph document field 'seed' must be an integer")
            graph = from_assignment(positions, float(r), seed=seed)
        elif "layers" in doc:
            if doc.get("r") is not None:
                raise DocumentError("adjacency-override documents must have r = null")
            layers: List[list] = _require(doc, "layers", list)
            raw_labels = doc.get("labels", {})
            if not isinstance(raw_labels, dict):
                raise DocumentError("graph document field 'labels' must be an object")
            labels = {int(v): str(name) for v, name in raw_labels.items()}
            graph = from_edge_lists(n, [[tuple(e) for e in layer] for layer in layers], labels=labels)
        else:
            raise DocumentError("graph document needs either 'positions' or 'layers'")
    except DocumentError:
        raise
    except (ConfigError, TypeError, ValueError) as e:
        raise DocumentError(f"graph document is malformed: {e}") from e

    if graph.n != n or graph.h != h:
        raise DocumentError(f"graph document declares n={n}, h={h} but holds n={graph.n}, h={graph.h}")
    if graph.edge_counts() != counts:
        raise DocumentError(
            f"layer edge counts {graph.edge_counts()} do not match the stored checksum {counts}"
        )
    return graph


def load_graph(path: str) -> MultilayerGraph:
    with open(path, "r", encoding="utf-8") as f:
        return deserialize(f.read())
