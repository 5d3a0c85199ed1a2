"""Maximum number of tolerant faults of a TSV group.

``Nd(f)`` is the number of paths from ``f`` to spare TSVs that share no
vertex except ``f``; by Menger's theorem it is a unit-capacity max-flow on
the split graph.  The group tolerates ``K = min_f Nd(f)`` faults.

Counts use scipy's compiled max-flow on large groups; the pure-Python
Edmonds-Karp in :mod:`flow` is used below ``_SCIPY_MIN_ARCS`` arcs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

from .flow import FlowNetwork, max_flow, residual_adjacency
from .relgraph import GraphError, RelGraph, TsvId, split

_SCIPY_MIN_ARCS = 200


@dataclass
class ToleranceReport:
    nd: dict[TsvId, int]
    k: int

    def to_dict(self) -> dict:
        return {"k": self.k, "nd": dict(self.nd)}


class _SplitFlowTemplate:
    """Unit-capacity split network with a super-sink; shared across sources."""

    def __init__(self, g: RelGraph):
        sg = split(g)
        N = sg.num_tsvs
        self.split_graph = sg
        self.sink = 2 * N
        tails, heads = [], []
        for a, b in sg.split_edges + sg.replace_edges:
            tails.append(a)
            heads.append(b)
        for j in range(g.m, N):
            tails.append(N + j)
            heads.append(self.sink)
        self.tails, self.heads = tails, heads
        self.caps = [1] * len(tails)
        self.costs = [0] * len(tails)
        self.adj = residual_adjacency(2 * N + 1, tails, heads)
        self._csr = None

    def csr(self) -> csr_matrix:
        if self._csr is None:
            n = 2 * self.split_graph.num_tsvs + 1
            data = np.ones(len(self.tails), dtype=np.int32)
            self._csr = csr_matrix((data, (self.tails, self.heads)), shape=(n, n))
        return self._csr

    def count(self, source: int) -> int:
        if len(self.tails) >= _SCIPY_MIN_ARCS:
            return int(maximum_flow(self.csr(), source, self.sink, method="dinic").flow_value)
        return max_flow(self.network(source)).value

    def network(self, source: int) -> FlowNetwork:
        return FlowNetwork.from_arrays(
            2 * self.split_graph.num_tsvs + 1, source, self.sink,
            self.tails, self.heads, self.caps, self.costs, adjacency=self.adj,
        )


def disjoint_path_count(g: RelGraph, f: TsvId, _template: _SplitFlowTemplate | None = None) -> int:
    if f not in g or g.is_spare(f):
        raise GraphError(f"{f!r} is not a functional TSV of this graph")
    if g.n == 0 or g.outdegree(f) == 0:
        return 0
    tpl = _template or _SplitFlowTemplate(g)
    return tpl.count(tpl.split_graph.out_of(f))


def max_tolerant_faults(g: RelGraph) -> ToleranceReport:
    tpl = _SplitFlowTemplate(g) if g.n else None
    nd = {f: disjoint_path_count(g, f, tpl) for f in g.f_tsvs}
    return ToleranceReport(nd, min(nd.values()) if nd else 0)
