"""Replaceable-relation graphs over functional and spare TSVs.

A :class:`RelGraph` records which TSVs can take over the signal of a
functional TSV.  Edges always leave a functional TSV; targets may be
functional or spare.  :func:`split` turns vertex-disjointness into
edge-disjointness by giving every TSV an input and an output vertex.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

TsvId = str


class GraphError(ValueError):
    """Raised when a relation graph or layout violates its invariants."""


@dataclass(frozen=True)
class RelGraph:
    f_tsvs: tuple[TsvId, ...]
    s_tsvs: tuple[TsvId, ...]
    edges: tuple[tuple[TsvId, TsvId], ...]
    _index: dict = field(init=False, repr=False, compare=False)
    _succ: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {v: i for i, v in enumerate(self.f_tsvs + self.s_tsvs)}
        succ: list[list[int]] = [[] for _ in index]
        for u, v in self.edges:
            succ[index[u]].append(index[v])
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_succ", tuple(tuple(s) for s in succ))

    @property
    def m(self) -> int:
        return len(self.f_tsvs)

    @property
    def n(self) -> int:
        return len(self.s_tsvs)

    @property
    def vertices(self) -> tuple[TsvId, ...]:
        return self.f_tsvs + self.s_tsvs

    def index(self, v: TsvId) -> int:
        """Dense integer index: f-TSVs first, then s-TSVs, in input order."""
        return self._index[v]

    def __contains__(self, v) -> bool:
        return v in self._index

    def is_spare(self, v: TsvId) -> bool:
        return self._index[v] >= self.m

    def successors(self, v: TsvId) -> list[TsvId]:
        names = self.vertices
        return [names[j] for j in self._succ[self._index[v]]]

    def succ_indices(self, i: int) -> tuple[int, ...]:
        return self._succ[i]

    def has_edge(self, u: TsvId, v: TsvId) -> bool:
        if u not in self._index or v not in self._index:
            return False
        return self._index[v] in self._succ[self._index[u]]

    def outdegree(self, v: TsvId) -> int:
        return len(self._succ[self._index[v]])

    def with_edges(self, extra: Iterable[tuple[TsvId, TsvId]]) -> "RelGraph":
        return build_from_edges(self.f_tsvs, self.s_tsvs, list(self.edges) + list(extra))

    def restrict_spares(self, keep: Iterable[TsvId]) -> "RelGraph":
        """Subgraph keeping all f-TSVs and only the listed s-TSVs."""
        keep = set(keep)
        spares = tuple(s for s in self.s_tsvs if s in keep)
        sset = set(spares)
        edges = tuple(
            (u, v) for u, v in self.edges if not self.is_spare(v) or v in sset
        )
        return RelGraph(self.f_tsvs, spares, edges)


def build_from_edges(
    f_ids: Sequence[TsvId], s_ids: Sequence[TsvId], edges: Iterable[Sequence[TsvId]]
) -> RelGraph:
    f_ids = tuple(str(v) for v in f_ids)
    s_ids = tuple(str(v) for v in s_ids)
    if not f_ids:
        raise GraphError("a relation graph needs at least one f-TSV")
    seen: set[str] = set()
    for v in f_ids + s_ids:
        if v in seen:
            raise GraphError(f"duplicate TSV id {v!r}")
        seen.add(v)
    fset, sset = set(f_ids), set(s_ids)
    out: list[tuple[str, str]] = []
    present: set[tuple[str, str]] = set()
    for e in edges:
        if len(e) != 2:
            raise GraphError(f"edge {e!r} is not a pair")
        u, v = str(e[0]), str(e[1])
        if u in sset:
            raise GraphError(f"edge sourced at spare TSV: ({u}, {v})")
        if u not in fset:
            raise GraphError(f"dangling edge endpoint {u!r}")
        if v not in seen:
            raise GraphError(f"dangling edge endpoint {v!r}")
        if u == v:
            raise GraphError(f"self-loop at {u!r}")
        if (u, v) not in present:
            present.add((u, v))
            out.append((u, v))
    return RelGraph(f_ids, s_ids, tuple(out))


# --------------------------------------------------------------------------
# layout


@dataclass(frozen=True)
class BBox:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if self.xmin > self.xmax or self.ymin > self.ymax:
            raise GraphError(f"inverted bounding box {self}")

    def contains(self, x: float, y: float, margin: float = 0.0) -> bool:
        # closed rectangle: boundary points are inside
        return (
            self.xmin - margin <= x <= self.xmax + margin
            and self.ymin - margin <= y <= self.ymax + margin
        )


@dataclass(frozen=True)
class FTsv:
    id: TsvId
    x: float
    y: float
    bbox: BBox

    def __post_init__(self):
        if not self.bbox.contains(self.x, self.y):
            raise GraphError(f"f-TSV {self.id!r} lies outside its own bounding box")


@dataclass(frozen=True)
class Site:
    id: TsvId
    x: float
    y: float


@dataclass(frozen=True)
class LayoutGroup:
    f_tsvs: tuple[FTsv, ...]
    s_sites: tuple[Site, ...]
    margin: float = 0.0


def coverage_matrix(
    f_tsvs: Sequence[FTsv], xs: np.ndarray, ys: np.ndarray, margin: float
) -> np.ndarray:
    """Boolean matrix [i, j]: point j lies in the margin-expanded bbox of f_tsvs[i]."""
    if margin < 0:
        raise GraphError(f"negative margin {margin}")
    if not f_tsvs or len(xs) == 0:
        return np.zeros((len(f_tsvs), len(xs)), dtype=bool)
    lo_x = np.array([f.bbox.xmin for f in f_tsvs])[:, None] - margin
    hi_x = np.array([f.bbox.xmax for f in f_tsvs])[:, None] + margin
    lo_y = np.array([f.bbox.ymin for f in f_tsvs])[:, None] - margin
    hi_y = np.array([f.bbox.ymax for f in f_tsvs])[:, None] + margin
    xs = np.asarray(xs, dtype=float)[None, :]
    ys = np.asarray(ys, dtype=float)[None, :]
    return (lo_x <= xs) & (xs <= hi_x) & (lo_y <= ys) & (ys <= hi_y)


def build_from_layout(group: LayoutGroup) -> RelGraph:
    if group.margin < 0:
        raise GraphError(f"negative margin {group.margin}")
    fs, sites = group.f_tsvs, group.s_sites
    xs = np.array([f.x for f in fs] + [s.x for s in sites], dtype=float)
    ys = np.array([f.y for f in fs] + [s.y for s in sites], dtype=float)
    cover = coverage_matrix(fs, xs, ys, group.margin)
    m = len(fs)
    if m:
        cover[np.arange(m), np.arange(m)] = False
    names = [f.id for f in fs] + [s.id for s in sites]
    edges = [(fs[i].id, names[j]) for i, j in zip(*np.nonzero(cover))]
    return build_from_edges([f.id for f in fs], [s.id for s in sites], edges)


# --------------------------------------------------------------------------
# vertex splitting


@dataclass(frozen=True)
class SplitGraph:
    """Vertex-split form of a RelGraph.

    Node numbering: in-vertex of TSV ``i`` is ``i``, its out-vertex is
    ``N + i`` where ``N = m + n``.
    """

    graph: RelGraph
    split_edges: tuple[tuple[int, int], ...]
    replace_edges: tuple[tuple[int, int], ...]

    @property
    def num_tsvs(self) -> int:
        return self.graph.m + self.graph.n

    @property
    def num_nodes(self) -> int:
        return 2 * self.num_tsvs

    @property
    def in_vertices(self) -> range:
        return range(self.num_tsvs)

    @property
    def out_vertices(self) -> range:
        return range(self.num_tsvs, 2 * self.num_tsvs)

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return self.split_edges + self.replace_edges

    def out_of(self, v: TsvId) -> int:
        return self.num_tsvs + self.graph.index(v)

    def in_of(self, v: TsvId) -> int:
        return self.graph.index(v)

    def label(self, node: int) -> str:
        names = self.graph.vertices
        if node < self.num_tsvs:
            return names[node]
        return names[node - self.num_tsvs] + "'"

    def tsv_of(self, node: int) -> TsvId:
        return self.graph.vertices[node % self.num_tsvs]

    def collapse(self) -> RelGraph:
        """Merge every (u, u') pair back into u."""
        names = self.graph.vertices
        N = self.num_tsvs
        edges = [(names[a - N], names[b]) for a, b in self.replace_edges]
        return build_from_edges(self.graph.f_tsvs, self.graph.s_tsvs, edges)


def split(g: RelGraph) -> SplitGraph:
    N = g.m + g.n
    split_edges = tuple((i, N + i) for i in range(N))
    replace_edges = tuple((N + g.index(u), g.index(v)) for u, v in g.edges)
    return SplitGraph(g, split_edges, replace_edges)


# --------------------------------------------------------------------------
# I/O


def graph_to_dict(g: RelGraph) -> dict:
    return {
        "f_tsvs": list(g.f_tsvs),
        "s_tsvs": list(g.s_tsvs),
        "edges": [[u, v] for u, v in g.edges],
    }


def graph_from_dict(d: dict) -> RelGraph:
    try:
        return build_from_edges(d["f_tsvs"], d.get("s_tsvs", []), d.get("edges", []))
    except KeyError as exc:
        raise GraphError(f"graph file missing key {exc}") from None
    except TypeError as exc:
        raise GraphError(f"malformed graph file: {exc}") from None


def load_graph(path) -> RelGraph:
    return graph_from_dict(json.loads(Path(path).read_text()))


def save_graph(g: RelGraph, path) -> None:
    Path(path).write_text(json.dumps(graph_to_dict(g), indent=2) + "\n")


def _dot_id(s: str) -> str:
    return '"' + s.replace('"', '\\"') + '"'


def to_dot(g: RelGraph, highlight: Iterable[tuple[TsvId, TsvId]] = ()) -> str:
    """DOT text; f-TSVs are boxes, s-TSVs circles, highlighted edges bold."""
    bold = set(highlight)
    lines = ["digraph relgraph {", "  rankdir=LR;"]
    for v in g.f_tsvs:
        lines.append(f"  {_dot_id(v)} [shape=box];")
    for v in g.s_tsvs:
        lines.append(f"  {_dot_id(v)} [shape=circle];")
    for u, v in g.edges:
        style = " [style=bold]" if (u, v) in bold else " [style=dashed]" if bold else ""
        lines.append(f"  {_dot_id(u)} -> {_dot_id(v)}{style};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def split_to_dot(sg: SplitGraph) -> str:
    g = sg.graph
    lines = ["digraph splitgraph {", "  rankdir=LR;"]
    for node in range(sg.num_nodes):
        shape = "circle" if g.is_spare(sg.tsv_of(node)) else "box"
        lines.append(f"  {_dot_id(sg.label(node))} [shape={shape}];")
    for a, b in sg.split_edges:
        lines.append(f"  {_dot_id(sg.label(a))} -> {_dot_id(sg.label(b))} [color=gray];")
    for a, b in sg.replace_edges:
        lines.append(f"  {_dot_id(sg.label(a))} -> {_dot_id(sg.label(b))};")
    lines.append("}")
    return "\n".join(lines) + "\n"
