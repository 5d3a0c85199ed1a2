"""Integral max-flow and min-cost-max-flow with deterministic path decomposition.

Nodes are dense integers.  Solvers never mutate the network; all residual
state lives in the solve call.  Ties are broken towards lower node indices
(BFS/Dijkstra frontiers are ordered by ``(distance, node)``).
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence

COST_BUDGET = 2**63 - 1


class FlowError(RuntimeError):
    pass


class CostOverflowError(FlowError):
    """A path or total cost left the signed 64-bit range."""


class FlowDecompositionError(FlowError):
    """Raised when a flow cannot be split into source-sink paths."""


class FlowNetwork:
    """Directed network with integer capacities and non-negative integer costs."""

    def __init__(self, num_nodes: int, source: int, sink: int, labels: Optional[Sequence[str]] = None):
        if source == sink:
            raise FlowError("source and sink must differ")
        if not (0 <= source < num_nodes and 0 <= sink < num_nodes):
            raise FlowError("source/sink out of range")
        self.num_nodes = num_nodes
        self.source = source
        self.sink = sink
        self.labels = list(labels) if labels is not None else None
        self.tails: list[int] = []
        self.heads: list[int] = []
        self.caps: list[int] = []
        self.costs: list[int] = []
        self._adj: Optional[list] = None

    @classmethod
    def from_arrays(cls, num_nodes, source, sink, tails, heads, caps, costs, adjacency=None, labels=None,
                    validate=True):
        """Build from parallel arc lists; ``adjacency`` may be shared between
        networks with identical topology (see :meth:`adjacency`)."""
        net = cls(num_nodes, source, sink, labels)
        net.tails, net.heads, net.caps, net.costs = tails, heads, caps, costs
        if validate and (min(caps, default=0) < 0 or min(costs, default=0) < 0):
            raise FlowError("negative capacity or cost")
        net._adj = adjacency
        return net

    def add_arc(self, u: int, v: int, cap: int, cost: int = 0) -> int:
        if cap < 0 or cost < 0:
            raise FlowError(f"arc ({u},{v}) has negative capacity or cost")
        if not (0 <= u < self.num_nodes and 0 <= v < self.num_nodes):
            raise FlowError(f"arc ({u},{v}) references an unknown node")
        self.tails.append(u)
        self.heads.append(v)
        self.caps.append(int(cap))
        self.costs.append(int(cost))
        self._adj = None
        return len(self.tails) - 1

    @property
    def num_arcs(self) -> int:
        return len(self.tails)

    def adjacency(self) -> list[list[tuple[int, int, int]]]:
        """Residual edges per node, see :func:`residual_adjacency`."""
        if self._adj is None:
            self._adj = residual_adjacency(self.num_nodes, self.tails, self.heads)
        return self._adj

    def label(self, node: int) -> str:
        return self.labels[node] if self.labels else str(node)


def residual_adjacency(num_nodes, tails, heads) -> list[list[tuple[int, int, int]]]:
    """Per node ``(arc, other_end, is_reverse)`` in arc order; the residual
    edge id is ``2*arc + is_reverse``."""
    adj: list[list[tuple[int, int, int]]] = [[] for _ in range(num_nodes)]
    for a, (u, v) in enumerate(zip(tails, heads)):
        adj[u].append((a, v, 0))
        adj[v].append((a, u, 1))
    return adj


@dataclass
class FlowResult:
    value: int
    arc_flows: list[int]
    total_cost: int = 0


def max_flow(net: FlowNetwork) -> FlowResult:
    """Edmonds-Karp; BFS scans residual edges in arc insertion order."""
    tails, heads, caps = net.tails, net.heads, net.caps
    adj = net.adjacency()
    flow = [0] * net.num_arcs
    s, t = net.source, net.sink
    value = 0
    n = net.num_nodes
    while True:
        pred = [-1] * n
        pred[s] = -2
        queue = deque([s])
        found = False
        while queue and not found:
            u = queue.popleft()
            for a, v, rev in adj[u]:
                if pred[v] != -1:
                    continue
                r = flow[a] if rev else caps[a] - flow[a]
                if r > 0:
                    pred[v] = 2 * a + rev
                    if v == t:
                        found = True
                        break
                    queue.append(v)
        if not found:
            break
        bottleneck = None
        v = t
        while v != s:
            e = pred[v]
            a = e >> 1
            r = flow[a] if e & 1 else caps[a] - flow[a]
            bottleneck = r if bottleneck is None else min(bottleneck, r)
            v = heads[a] if e & 1 else tails[a]
        v = t
        while v != s:
            e = pred[v]
            a = e >> 1
            if e & 1:
                flow[a] -= bottleneck
                v = heads[a]
            else:
                flow[a] += bottleneck
                v = tails[a]
        value += bottleneck
    cost = sum(f * c for f, c in zip(flow, net.costs))
    return FlowResult(value, flow, cost)


def min_cost_max_flow(net: FlowNetwork) -> FlowResult:
    """Successive shortest paths with Johnson potentials.

    Dijkstra stops once the sink is settled; potentials of unsettled nodes
    are advanced by the sink distance, which keeps reduced costs
    non-negative.
    """
    tails, heads, caps, costs = net.tails, net.heads, net.caps, net.costs
    for w in costs:
        if w > COST_BUDGET:
            raise CostOverflowError(f"arc cost {w} exceeds the 64-bit budget")
    adj = net.adjacency()
    n = net.num_nodes
    s, t = net.source, net.sink
    flow = [0] * net.num_arcs
    pot = [0] * n
    value = 0
    total = 0
    INF = float("inf")
    heappush, heappop = heapq.heappush, heapq.heappop
    while True:
        dist = [INF] * n
        pred = [-1] * n
        done = [False] * n
        dist[s] = 0
        reached = [s]
        heap = [(0, s)]
        while heap:
            d, u = heappop(heap)
            if done[u]:
                continue
            done[u] = True
            if u == t:
                break
            pu = pot[u]
            base = d + pu
            for a, v, rev in adj[u]:
                if done[v]:
                    continue
                if rev:
                    if flow[a] <= 0:
                        continue
                    nd = base - costs[a] - pot[v]
                else:
                    if flow[a] >= caps[a]:
                        continue
                    nd = base + costs[a] - pot[v]
                dv = dist[v]
                if nd < dv:
                    if dv == INF:
                        reached.append(v)
                    dist[v] = nd
                    pred[v] = 2 * a + rev
                    heappush(heap, (nd, v))
        if not done[t]:
            break
        # pot += min(dist, dt), shifted by -dt so unreached nodes stay put
        dt = dist[t]
        for v in reached:
            dv = dist[v]
            if dv < dt:
                pot[v] += dv - dt
        bottleneck = None
        path_cost = 0
        v = t
        while v != s:
            e = pred[v]
            a = e >> 1
            if e & 1:
                r = flow[a]
                path_cost -= costs[a]
                v = heads[a]
            else:
                r = caps[a] - flow[a]
                path_cost += costs[a]
                v = tails[a]
            bottleneck = r if bottleneck is None else min(bottleneck, r)
        if path_cost > COST_BUDGET or path_cost * bottleneck > COST_BUDGET:
            raise CostOverflowError(f"augmenting path cost {path_cost} exceeds the 64-bit budget")
        v = t
        while v != s:
            e = pred[v]
            a = e >> 1
            if e & 1:
                flow[a] -= bottleneck
                v = heads[a]
            else:
                flow[a] += bottleneck
                v = tails[a]
        value += bottleneck
        total += path_cost * bottleneck
        if total > COST_BUDGET:
            raise CostOverflowError(f"total flow cost {total} exceeds the 64-bit budget")
    return FlowResult(value, flow, total)


def decompose_paths(net: FlowNetwork, result: FlowResult) -> list[list[int]]:
    """Split a flow into ``result.value`` unit source-sink node paths.

    At each node the flow-carrying arc with the lowest head index is taken
    (then lowest arc index).  Circulations met on the way are cancelled and
    do not appear in the output.
    """
    remaining = list(result.arc_flows)
    out: list[list[int]] = [[] for _ in range(net.num_nodes)]
    carrying = [a for a, x in enumerate(remaining) if x > 0]
    for a in sorted(carrying, key=lambda a: (net.heads[a], a)):
        out[net.tails[a]].append(a)
    s, t = net.source, net.sink
    paths: list[list[int]] = []
    for _ in range(result.value):
        nodes = [s]
        arcs: list[int] = []
        pos = {s: 0}
        u = s
        while u != t:
            nxt = next((a for a in out[u] if remaining[a] > 0), None)
            if nxt is None:
                raise FlowDecompositionError(f"flow stuck at node {net.label(u)}")
            v = net.heads[nxt]
            if v in pos:
                # cancel the circulation v -> ... -> u -> v
                k = pos[v]
                for a in arcs[k:] + [nxt]:
                    remaining[a] -= 1
                for w in nodes[k + 1:]:
                    del pos[w]
                nodes = nodes[: k + 1]
                arcs = arcs[:k]
                u = v
                continue
            arcs.append(nxt)
            nodes.append(v)
            pos[v] = len(nodes) - 1
            u = v
        for a in arcs:
            remaining[a] -= 1
        paths.append(nodes)
    return paths


def path_arcs(net: FlowNetwork, result: FlowResult, paths) -> list[list[int]]:
    """Arc ids realising each node path of a decomposition (lowest arc id first)."""
    used = list(result.arc_flows)
    by_pair: dict[tuple[int, int], list[int]] = {}
    for a in range(net.num_arcs):
        by_pair.setdefault((net.tails[a], net.heads[a]), []).append(a)
    out = []
    for p in paths:
        arcs = []
        for u, v in zip(p, p[1:]):
            a = next(a for a in by_pair[(u, v)] if used[a] > 0)
            used[a] -= 1
            arcs.append(a)
        out.append(arcs)
    return out
