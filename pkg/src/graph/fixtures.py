"""
Bundled two-layer instance with no rainbow path from vertex i to vertex j.

The drawing it comes from is not in unit-square coordinates, so the
fixture stores the edge lists directly (adjacency-override document)
rather than positions. It is not a geometric instance.
"""

from graph.document import deserialize, serialize
from graph.multilayer import MultilayerGraph

FIGURE1_SOURCE = 0  # i
FIGURE1_TARGET = 5  # j

FIGURE1_DOCUMENT = {
    "version": 1,
    "n": 6,
    "r": None,
    "h": 2,
    "layers": [
        # layer 0, red
        [[0, 4], [0, 1], [1, 4], [4, 5], [1, 2], [2, 3]],
        # layer 1, blue
        [[3, 5], [0, 2], [0, 1], [0, 3], [1, 4], [1, 2], [1, 3]],
    ],
    "labels": {"0": "i", "5": "j"},
    "layer_edge_counts": [6, 7],
}


def figure1_graph() -> MultilayerGraph:
    return deserialize(FIGURE1_DOCUMENT)


def figure1_document() -> str:
    return serialize(figure1_graph())
