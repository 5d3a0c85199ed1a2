"""Min-cost-max-flow heuristic for K-fault tolerance structures.

f-TSVs are routed one at a time.  Each route is a min-cost flow of value K
from the f-TSV's split vertex to a super-sink ``r`` behind the split spare
vertices.  Costs steer towards reuse:

* spare split edge: 0 if the spare is already used, else ``c**k``;
* replace edge (u', v): 0 if (u, v) is already a connection, else
  ``c**tc[v]`` where ``tc[v]`` counts existing connections into v.

A seeded perturbation loop then re-routes random f-TSVs against the paths
of all the others and keeps the best structure seen.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .flow import COST_BUDGET, CostOverflowError, FlowNetwork, FlowResult, decompose_paths, min_cost_max_flow, residual_adjacency
from .relgraph import RelGraph, SplitGraph, TsvId, split
from .structure import ToleranceStructure, metrics


class HeuristicError(RuntimeError):
    pass


class ExponentOverflowError(CostOverflowError):
    """An exponential edge cost would need an exponent above the configured cap."""


@dataclass(frozen=True)
class HeuristicConfig:
    c: int = 3
    perturb_threshold: int = 50
    seed: int = 0
    exponent_cap: int = 18

    def __post_init__(self):
        if self.c < 2:
            raise ValueError("cost base c must be at least 2")
        if self.perturb_threshold < 0:
            raise ValueError("perturb_threshold must be non-negative")
        if self.exponent_cap < 0:
            raise ValueError("exponent_cap must be non-negative")
        if self.c**self.exponent_cap > COST_BUDGET:
            raise ValueError(f"c**exponent_cap = {self.c}**{self.exponent_cap} exceeds the 64-bit cost budget")

    def cost(self, exponent: int, what: str) -> int:
        if exponent > self.exponent_cap:
            raise ExponentOverflowError(
                f"cost exponent {exponent} on {what} exceeds cap {self.exponent_cap} (c={self.c})"
            )
        return self.c**exponent


@dataclass
class PartialState:
    """Connections and used spares of the f-TSVs routed so far."""

    routed: dict[TsvId, tuple] = field(default_factory=dict)
    conn_count: Counter = field(default_factory=Counter)
    tc: Counter = field(default_factory=Counter)
    spare_count: Counter = field(default_factory=Counter)

    @property
    def used_spares(self) -> set[TsvId]:
        return {s for s, c in self.spare_count.items() if c > 0}

    def is_connection(self, u: TsvId, v: TsvId) -> bool:
        return self.conn_count.get((u, v), 0) > 0

    def add(self, f: TsvId, paths) -> None:
        if f in self.routed:
            self.remove(f)
        self.routed[f] = tuple(paths)
        for e in _edges_of(paths):
            if self.conn_count[e] == 0:
                self.tc[e[1]] += 1
            self.conn_count[e] += 1
        for p in paths:
            self.spare_count[p[-1]] += 1

    def remove(self, f: TsvId) -> None:
        paths = self.routed.pop(f)
        for e in _edges_of(paths):
            self.conn_count[e] -= 1
            if self.conn_count[e] == 0:
                del self.conn_count[e]
                self.tc[e[1]] -= 1
                if self.tc[e[1]] == 0:
                    del self.tc[e[1]]
        for p in paths:
            self.spare_count[p[-1]] -= 1
            if self.spare_count[p[-1]] == 0:
                del self.spare_count[p[-1]]

    @classmethod
    def from_routed(cls, routed: dict) -> "PartialState":
        st = cls()
        for f, ps in routed.items():
            st.add(f, ps)
        return st


def _edges_of(paths) -> set[tuple[TsvId, TsvId]]:
    # an edge shared by several paths of one f-TSV is one connection
    return {e for p in paths for e in zip(p, p[1:])}


class _Template:
    """Topology of G_s shared by all per-f networks of one group."""

    def __init__(self, sg: SplitGraph):
        g = sg.graph
        N = sg.num_tsvs
        self.sg = sg
        self.sink = 2 * N
        tails, heads = [], []
        for a, b in sg.split_edges + sg.replace_edges:
            tails.append(a)
            heads.append(b)
        for j in range(g.m, N):
            tails.append(N + j)
            heads.append(self.sink)
        self.tails, self.heads = tails, heads
        self.adj = residual_adjacency(2 * N + 1, tails, heads)
        names = g.vertices
        self.replace_pairs = [(names[a - N], names[b]) for a, b in sg.replace_edges]
        self.pair_index = {pr: i for i, pr in enumerate(self.replace_pairs)}
        self.rep_heads = np.array([b for _, b in sg.replace_edges], dtype=np.int64)
        self.labels = None

    def labels_list(self) -> list[str]:
        if self.labels is None:
            self.labels = [self.sg.label(i) for i in range(self.sink)] + ["r"]
        return self.labels

    def network(self, f: TsvId, k: int, state: PartialState, cfg: HeuristicConfig) -> FlowNetwork:
        sg, g = self.sg, self.sg.graph
        N, m = sg.num_tsvs, g.m
        fi = g.index(f)
        caps = [1] * len(self.tails)
        caps[fi] = k
        used = state.used_spares
        head = [0] * N
        fresh = [j for j in range(m, N) if g.s_tsvs[j - m] not in used]
        if fresh:
            s = g.s_tsvs[fresh[0] - m]
            spare_cost = cfg.cost(k, f"split edge ({s}, {s}')")
            for j in fresh:
                head[j] = spare_cost
        tc = np.zeros(N, dtype=np.int64)
        for v, c in state.tc.items():
            tc[g.index(v)] = c
        exps = tc[self.rep_heads]
        conn = np.zeros(len(exps), dtype=bool)
        for pr in state.conn_count:
            i = self.pair_index.get(pr)
            if i is not None:
                conn[i] = True
        exps[conn] = 0
        over = np.nonzero(exps > cfg.exponent_cap)[0]
        if len(over):
            u, v = self.replace_pairs[over[0]]
            cfg.cost(int(exps[over[0]]), f"edge ({u}', {v})")
        rep = np.where(conn, 0, np.power(cfg.c, exps, dtype=np.int64))
        costs = head + rep.tolist() + [0] * (g.n)
        return FlowNetwork.from_arrays(2 * N + 1, fi, self.sink, self.tails, self.heads, caps, costs,
                                       adjacency=self.adj, labels=self.labels_list(), validate=False)


def build_network_for(f: TsvId, sg: SplitGraph, k: int, state: PartialState, cfg: HeuristicConfig) -> FlowNetwork:
    """G_s for one f-TSV: source is the in-vertex of f, sink is node ``2N`` (``r``)."""
    g = sg.graph
    if f not in g or g.is_spare(f):
        raise HeuristicError(f"{f!r} is not a functional TSV")
    if k < 1:
        raise HeuristicError("k must be at least 1")
    return _Template(sg).network(f, k, state, cfg)


def _route(tpl: _Template, f: TsvId, k: int, state: PartialState, cfg: HeuristicConfig) -> tuple:
    net = tpl.network(f, k, state, cfg)
    res = min_cost_max_flow(net)
    if res.value < k:
        raise HeuristicError(f"only {res.value} disjoint paths for {f}, need {k}")
    N = tpl.sg.num_tsvs
    names = tpl.sg.graph.vertices
    out = []
    for nodes in decompose_paths(net, res):
        # nodes: f, f', v, v', ..., s, s', r  -> keep in-vertices
        out.append(tuple(names[x] for x in nodes[:-1] if x < N))
    return tuple(out)


def _key(routed: dict, k: int) -> tuple[int, int]:
    mt = metrics(ToleranceStructure(k, routed))
    return mt.max_mux_ports, mt.used_stsvs


def generate(g: RelGraph, k: int, cfg: Optional[HeuristicConfig] = None) -> ToleranceStructure:
    cfg = cfg or HeuristicConfig()
    if k <= 0:
        return ToleranceStructure(0, {f: () for f in g.f_tsvs})
    tpl = _Template(split(g))
    state = PartialState()
    for f in g.f_tsvs:
        state.add(f, _route(tpl, f, k, state, cfg))
    st = ToleranceStructure(k, dict(state.routed))
    return _perturb(st, g, cfg, tpl)


def perturb(st: ToleranceStructure, g: RelGraph, cfg: Optional[HeuristicConfig] = None) -> ToleranceStructure:
    cfg = cfg or HeuristicConfig()
    return _perturb(st, g, cfg, None)


def _perturb(st: ToleranceStructure, g: RelGraph, cfg: HeuristicConfig, tpl: Optional[_Template]) -> ToleranceStructure:
    if cfg.perturb_threshold == 0 or st.k == 0 or not st.paths:
        return st
    tpl = tpl or _Template(split(g))
    rng = random.Random(cfg.seed)
    order = [f for f in g.f_tsvs if f in st.paths]
    state = PartialState.from_routed(st.paths)
    best = dict(st.paths)
    best_key = _key(best, st.k)
    stale = 0
    while stale < cfg.perturb_threshold:
        f = order[rng.randrange(len(order))]
        state.remove(f)
        state.add(f, _route(tpl, f, st.k, state, cfg))
        current = {x: state.routed[x] for x in order}
        key = _key(current, st.k)
        stale = 0 if key[0] < best_key[0] else stale + 1
        if key < best_key:
            best, best_key = current, key
    return ToleranceStructure(st.k, best)
