"""Small worked-example groups used by tests, docs and the CLI.

* ``row4``: four f-TSVs, two spares, every f-TSV covers both spares plus
  its right-hand neighbours.
* ``sparse5``: five f-TSVs, four spares; edges are exactly those used by
  ``sparse5_structure`` (s4 is isolated).
* ``sparse5x``: ``sparse5`` plus ``f3 -> s2``, a direct spare for f3 that the
  heuristic picks up.
"""

from __future__ import annotations

from .relgraph import BBox, FTsv, LayoutGroup, RelGraph, Site, build_from_edges
from .structure import ToleranceStructure

ROW4_F = ("f1", "f2", "f3", "f4")
ROW4_S = ("s1", "s2")
ROW4_EDGES = (
    ("f1", "f2"), ("f1", "f3"), ("f1", "s1"), ("f1", "s2"),
    ("f2", "f3"), ("f2", "f4"), ("f2", "s1"), ("f2", "s2"),
    ("f3", "f4"), ("f3", "s1"), ("f3", "s2"),
    ("f4", "s1"), ("f4", "s2"),
)

SPARSE5_F = ("f1", "f2", "f3", "f4", "f5")
SPARSE5_S = ("s1", "s2", "s3", "s4")
SPARSE5_EDGES = (
    ("f1", "s1"), ("f1", "f2"), ("f2", "f3"), ("f2", "f5"), ("f3", "f4"),
    ("f3", "s1"), ("f4", "s2"), ("f4", "f3"), ("f5", "f1"), ("f5", "s3"),
)
SPARSE5X_EXTRA = (("f3", "s2"),)

# connections of the 2-fault structure the heuristic builds on sparse5x
SPARSE5X_CONNECTIONS = frozenset({
    ("f1", "s1"), ("f1", "f2"), ("f2", "f3"), ("f3", "s2"),
    ("f2", "f5"), ("f5", "f1"), ("f3", "s1"),
    ("f4", "s2"), ("f4", "f3"), ("f5", "s3"),
})


def row4_graph() -> RelGraph:
    return build_from_edges(ROW4_F, ROW4_S, ROW4_EDGES)


def row4_layout() -> LayoutGroup:
    """Coordinates in micrometers reproducing ``row4_graph`` with margin 0."""
    fs = (
        FTsv("f1", 0.0, 0.0, BBox(0.0, -5.0, 15.0, 5.0)),
        FTsv("f2", 5.0, 0.0, BBox(5.0, -5.0, 20.0, 5.0)),
        FTsv("f3", 10.0, 0.0, BBox(10.0, -5.0, 20.0, 5.0)),
        FTsv("f4", 20.0, 0.0, BBox(15.0, -5.0, 20.0, 5.0)),
    )
    sites = (Site("s1", 15.0, 5.0), Site("s2", 15.0, -5.0))
    return LayoutGroup(fs, sites, 0.0)


def row4_direct_structure() -> ToleranceStructure:
    """All-to-all: every f-TSV wired straight to both spares."""
    return ToleranceStructure.from_paths(2, {f: [[f, "s1"], [f, "s2"]] for f in ROW4_F})


def row4_chain_structure() -> ToleranceStructure:
    """Regular chain: neighbours shift towards the spares."""
    return ToleranceStructure.from_paths(2, {
        "f1": [["f1", "f3", "s1"], ["f1", "f2", "f4", "s2"]],
        "f2": [["f2", "f3", "s1"], ["f2", "f4", "s2"]],
        "f3": [["f3", "s1"], ["f3", "f4", "s2"]],
        "f4": [["f4", "s1"], ["f4", "s2"]],
    })


def sparse5_graph() -> RelGraph:
    return build_from_edges(SPARSE5_F, SPARSE5_S, SPARSE5_EDGES)


def sparse5x_graph() -> RelGraph:
    return build_from_edges(SPARSE5_F, SPARSE5_S, SPARSE5_EDGES + SPARSE5X_EXTRA)


def sparse5_structure() -> ToleranceStructure:
    """A 2-fault structure using three of the four spares."""
    return ToleranceStructure.from_paths(2, {
        "f1": [["f1", "s1"], ["f1", "f2", "f3", "f4", "s2"]],
        "f2": [["f2", "f5", "f1", "s1"], ["f2", "f3", "f4", "s2"]],
        "f3": [["f3", "s1"], ["f3", "f4", "s2"]],
        "f4": [["f4", "f3", "s1"], ["f4", "s2"]],
        "f5": [["f5", "f1", "s1"], ["f5", "s3"]],
    })


GRAPHS = {"row4": row4_graph, "sparse5": sparse5_graph, "sparse5x": sparse5x_graph}
