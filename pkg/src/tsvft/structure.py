"""K-fault tolerance structures: metrics, verification and repair checks."""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Optional

from .flow import FlowNetwork, decompose_paths, max_flow
from .relgraph import RelGraph, TsvId

Path_ = tuple[TsvId, ...]


class StructureError(ValueError):
    pass


class InjectionBudgetError(RuntimeError):
    pass


@dataclass(frozen=True)
class ToleranceStructure:
    k: int
    paths: dict[TsvId, tuple[Path_, ...]]

    @classmethod
    def from_paths(cls, k: int, paths: dict) -> "ToleranceStructure":
        return cls(int(k), {str(f): tuple(tuple(str(v) for v in p) for p in ps) for f, ps in paths.items()})

    @property
    def connections(self) -> tuple[tuple[TsvId, TsvId], ...]:
        """Distinct directed TSV pairs traversed by any path, in first-use order."""
        seen: dict[tuple[TsvId, TsvId], None] = {}
        for ps in self.paths.values():
            for p in ps:
                for e in zip(p, p[1:]):
                    seen.setdefault(e, None)
        return tuple(seen)

    @property
    def used_spares(self) -> tuple[TsvId, ...]:
        seen: dict[TsvId, None] = {}
        for ps in self.paths.values():
            for p in ps:
                seen.setdefault(p[-1], None)
        return tuple(seen)

    def to_dict(self) -> dict:
        return {"k": self.k, "paths": {f: [list(p) for p in ps] for f, ps in self.paths.items()}}


def structure_from_dict(d: dict) -> ToleranceStructure:
    try:
        return ToleranceStructure.from_paths(d["k"], d["paths"])
    except (KeyError, TypeError) as exc:
        raise StructureError(f"malformed structure file: {exc}") from None


def load_structure(path) -> ToleranceStructure:
    return structure_from_dict(json.loads(Path(path).read_text()))


def save_structure(st: ToleranceStructure, path) -> None:
    Path(path).write_text(json.dumps(st.to_dict(), indent=2) + "\n")


# --------------------------------------------------------------------------
# metrics


@dataclass
class StructureMetrics:
    indegree: dict[TsvId, int]
    max_indegree: int
    used_stsvs: int
    mux_ports: dict[TsvId, int]
    max_mux_ports: int

    def to_dict(self) -> dict:
        return {
            "max_indegree": self.max_indegree,
            "used_stsvs": self.used_stsvs,
            "max_mux_ports": self.max_mux_ports,
            "indegree": dict(self.indegree),
            "mux_ports": dict(self.mux_ports),
        }


def metrics(st: ToleranceStructure, g: Optional[RelGraph] = None) -> StructureMetrics:
    """Indegree, mux ports and used spares.

    Without ``g``, path endpoints are taken as the spares and everything
    else as functional (spares never have outgoing relations).
    """
    spares = set(st.used_spares)
    if g is not None:
        tsvs = list(g.vertices)
        is_spare = g.is_spare
    else:
        order: dict[TsvId, None] = dict.fromkeys(st.paths)
        for ps in st.paths.values():
            for p in ps:
                order.update(dict.fromkeys(p))
        tsvs = list(order)
        is_spare = spares.__contains__
    indegree = dict.fromkeys(tsvs, 0)
    for _, v in st.connections:
        indegree[v] = indegree.get(v, 0) + 1
    ports = {u: d if is_spare(u) else d + 1 for u, d in indegree.items()}
    return StructureMetrics(
        indegree=indegree,
        max_indegree=max(indegree.values(), default=0),
        used_stsvs=len(spares),
        mux_ports=ports,
        max_mux_ports=max(ports.values(), default=0),
    )


# --------------------------------------------------------------------------
# verification


@dataclass
class Violation:
    f_tsv: Optional[TsvId]
    rule: str
    detail: str

    def __str__(self):
        where = f"{self.f_tsv}: " if self.f_tsv else ""
        return f"{where}[{self.rule}] {self.detail}"


@dataclass
class Diagnostics:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "accepted": self.ok,
            "violations": [{"f_tsv": v.f_tsv, "rule": v.rule, "detail": v.detail} for v in self.violations],
        }


def verify(st: ToleranceStructure, g: RelGraph, expected_k: int) -> Diagnostics:
    diag = Diagnostics()
    bad = diag.violations.append
    if st.k != expected_k:
        bad(Violation(None, "k_mismatch", f"structure declares k={st.k}, expected {expected_k}"))
    for f in st.paths:
        if f not in g or g.is_spare(f):
            bad(Violation(f, "unknown_ftsv", f"{f} is not a functional TSV of the graph"))
    for f in g.f_tsvs:
        ps = st.paths.get(f)
        if ps is None:
            if expected_k > 0:
                bad(Violation(f, "missing_ftsv", f"no paths for {f}"))
            continue
        if len(ps) != expected_k:
            bad(Violation(f, "wrong_path_count", f"{len(ps)} paths, expected {expected_k}"))
        owner: dict[TsvId, int] = {}
        for i, p in enumerate(ps):
            if not p or p[0] != f:
                bad(Violation(f, "path_not_from_source", f"path {i} does not start at {f}"))
                continue
            if len(p) < 2 or p[-1] not in g or not g.is_spare(p[-1]):
                bad(Violation(f, "path_not_ending_at_spare", f"path {i} does not end at an s-TSV"))
            if len(set(p)) != len(p):
                bad(Violation(f, "path_not_simple", f"path {i} revisits a TSV"))
            for u, v in zip(p, p[1:]):
                if not g.has_edge(u, v):
                    bad(Violation(f, "edge_not_in_graph", f"edge not in relation graph: ({u}, {v})"))
            for j, v in enumerate(p[1:], start=1):
                prev = owner.setdefault(v, i)
                if prev == i:
                    continue
                if j == len(p) - 1 and v in g and g.is_spare(v):
                    bad(Violation(f, "duplicate_spare_endpoint", f"paths {prev} and {i} both end at {v}"))
                else:
                    bad(Violation(f, "paths_not_vertex_disjoint", f"paths not vertex-disjoint at {v}"))
    return diag


# --------------------------------------------------------------------------
# repair


@dataclass
class RepairResult:
    ok: bool
    assignment: dict[TsvId, Path_]

    def __bool__(self):
        return self.ok


class _RepairNetwork:
    """Connection subgraph of a structure, split for unit vertex capacities.

    Per TSV i: in-vertex 2i, out-vertex 2i+1; super-source S and sink T at
    the end.  Built once per structure and reused across fault sets.
    """

    def __init__(self, st: ToleranceStructure, g: RelGraph):
        order: dict[TsvId, None] = dict.fromkeys(g.f_tsvs)
        order.update(dict.fromkeys(st.used_spares))
        for u, v in st.connections:
            order.update(dict.fromkeys((u, v)))
        self.names = list(order)
        self.index = {v: i for i, v in enumerate(self.names)}
        self.is_spare = [g.is_spare(v) if v in g else True for v in self.names]
        self.connections = [(self.index[u], self.index[v]) for u, v in st.connections]
        self.S = 2 * len(self.names)
        self.T = self.S + 1

    def solve(self, faulty: Iterable[TsvId]) -> RepairResult:
        idx = self.index
        bad = {idx[v] for v in faulty if v in idx}
        bad_f = sorted(i for i in bad if not self.is_spare[i])
        if not bad_f:
            return RepairResult(True, {})
        live_spares = sum(1 for i, s in enumerate(self.is_spare) if s and i not in bad)
        if len(bad_f) > live_spares:
            return RepairResult(False, {})
        net = FlowNetwork(self.T + 1, self.S, self.T)
        for i in bad_f:
            net.add_arc(self.S, 2 * i + 1, 1)
        for i, spare in enumerate(self.is_spare):
            if i in bad:
                continue
            net.add_arc(2 * i, 2 * i + 1, 1)
            if spare:
                net.add_arc(2 * i + 1, self.T, 1)
        for u, v in self.connections:
            if v in bad:
                continue  # faulty TSVs only appear as the source of their own path
            net.add_arc(2 * u + 1, 2 * v, 1)
        res = max_flow(net)
        if res.value < len(bad_f):
            return RepairResult(False, {})
        assignment: dict[TsvId, Path_] = {}
        for nodes in decompose_paths(net, res):
            tsvs = [self.names[x // 2] for x in nodes[1:-1] if x % 2 == 1]
            assignment[tsvs[0]] = tuple(tsvs)
        return RepairResult(True, {self.names[i]: assignment[self.names[i]] for i in bad_f})


def repairable(st: ToleranceStructure, g: RelGraph, faults: Iterable[TsvId]) -> RepairResult:
    """Can every faulty f-TSV be rerouted to its own healthy spare?

    Faulty spares are removed; repair paths are vertex-disjoint and only use
    the structure's connections.
    """
    faults = list(faults)
    for v in faults:
        if v not in g:
            raise StructureError(f"fault {v!r} is not a TSV of this group")
    return _RepairNetwork(st, g).solve(faults)


@dataclass
class InjectionReport:
    up_to: int
    total: int
    repairable: int
    counterexample: Optional[tuple[TsvId, ...]] = None

    @property
    def fraction(self) -> float:
        return 1.0 if self.total == 0 else self.repairable / self.total

    def to_dict(self) -> dict:
        return {
            "up_to": self.up_to,
            "fault_sets": self.total,
            "repairable": self.repairable,
            "fraction": self.fraction,
            "counterexample": list(self.counterexample) if self.counterexample else None,
        }


def exhaustive_injection(st: ToleranceStructure, g: RelGraph, up_to: int, cap: int = 10**6) -> InjectionReport:
    """Try every f-TSV fault set of size 1..up_to (lexicographic order)."""
    if up_to > g.m:
        raise StructureError(f"up_to={up_to} exceeds the {g.m} f-TSVs of the group")
    total = sum(math.comb(g.m, i) for i in range(1, up_to + 1))
    if total > cap:
        raise InjectionBudgetError(f"{total} fault sets exceed the enumeration cap {cap}")
    rn = _RepairNetwork(st, g)
    ok = 0
    first = None
    for size in range(1, up_to + 1):
        for faults in combinations(g.f_tsvs, size):
            if rn.solve(faults).ok:
                ok += 1
            elif first is None:
                first = faults
    return InjectionReport(up_to, total, ok, first)


def sampled_injection(st: ToleranceStructure, g: RelGraph, up_to: int, samples: int, seed: int = 0) -> InjectionReport:
    """Random f-TSV fault sets with sizes uniform in 1..up_to."""
    if up_to > g.m:
        raise StructureError(f"up_to={up_to} exceeds the {g.m} f-TSVs of the group")
    rng = random.Random(seed)
    rn = _RepairNetwork(st, g)
    ok = 0
    first = None
    n = samples if up_to > 0 else 0
    for _ in range(n):
        faults = tuple(sorted(rng.sample(g.f_tsvs, rng.randint(1, up_to)), key=g.index))
        if rn.solve(faults).ok:
            ok += 1
        elif first is None:
            first = faults
    return InjectionReport(up_to, n, ok, first)
