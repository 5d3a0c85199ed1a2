"""0/1 programs for K-fault tolerance structure generation.

Two models share one builder:

* ``adaptive``: per (source f', sink s') path indicator ``v``, exactly K
  unit flows leave every split f-TSV, objective ``lambda1 + lambda2``
  (max indegree plus used spares), linearised with per-edge ``d`` flags.
* ``baseline``: every f-TSV must reach every spare (``v`` fixed to 1),
  objective ``lambda1`` only.  This is the fixed-K prior-work model.

The programs are solved exactly with HiGHS through :func:`scipy.optimize.milp`.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np
from scipy.optimize import LinearConstraint, milp
from scipy.sparse import coo_matrix

from .flow import FlowNetwork, FlowResult, decompose_paths
from .relgraph import RelGraph, SplitGraph, split
from .structure import ToleranceStructure
from .tolerance import max_tolerant_faults

log = logging.getLogger(__name__)

OPTIMAL, TIMEOUT, INFEASIBLE = "Optimal", "Timeout", "Infeasible"
DEFAULT_TIMEOUT = 3600.0
DEFAULT_MAX_VARS = 400_000


class IlpError(ValueError):
    pass


@dataclass
class IlpModel:
    split_graph: SplitGraph
    k: int
    kind: str
    c: np.ndarray
    A: object
    row_lb: np.ndarray
    row_ub: np.ndarray
    var_lb: np.ndarray
    var_ub: np.ndarray
    row_names: list[str]

    @property
    def graph(self) -> RelGraph:
        return self.split_graph.graph

    @property
    def m(self) -> int:
        return self.graph.m

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def num_edges(self) -> int:
        return len(self.split_graph.edges)

    @property
    def num_x(self) -> int:
        return self.m * self.n * self.num_edges

    @property
    def num_v(self) -> int:
        return self.m * self.n

    @property
    def num_d(self) -> int:
        return self.num_edges

    @property
    def num_vars(self) -> int:
        return self.num_x + self.num_v + self.num_d + 2

    def x(self, e: int, si: int, ti: int) -> int:
        return (e * self.m + si) * self.n + ti

    def v(self, si: int, ti: int) -> int:
        return self.num_x + si * self.n + ti

    def d(self, e: int) -> int:
        return self.num_x + self.num_v + e

    @property
    def lambda1(self) -> int:
        return self.num_vars - 2

    @property
    def lambda2(self) -> int:
        return self.num_vars - 1

    def var_name(self, j: int) -> str:
        sg, g = self.split_graph, self.graph
        if j < self.num_x:
            e, rest = divmod(j, self.m * self.n)
            si, ti = divmod(rest, self.n)
            a, b = sg.edges[e]
            return f"x_{sg.label(a)}_{sg.label(b)}__{g.f_tsvs[si]}_{g.s_tsvs[ti]}"
        j -= self.num_x
        if j < self.num_v:
            si, ti = divmod(j, self.n)
            return f"v__{g.f_tsvs[si]}_{g.s_tsvs[ti]}"
        j -= self.num_v
        if j < self.num_d:
            a, b = sg.edges[j]
            return f"d_{sg.label(a)}_{sg.label(b)}"
        return "lambda1" if j == self.num_d else "lambda2"


@dataclass
class SolveOutcome:
    status: str
    structure: Optional[ToleranceStructure] = None
    objective: Optional[tuple[int, int]] = None
    elapsed: float = 0.0
    note: str = ""
    tiebreak_complete: bool = False
    spares: Optional[tuple[str, ...]] = None

    def to_dict(self) -> dict:
        return {
            "status": self.status if self.status != TIMEOUT else "NA",
            "lambda1": self.objective[0] if self.objective else None,
            "lambda2": self.objective[1] if self.objective else None,
            "note": self.note,
        }


class _Rows:
    def __init__(self):
        self.r: list[int] = []
        self.c: list[int] = []
        self.v: list[float] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.names: list[str] = []

    def add(self, coeffs, lb, ub, name):
        i = len(self.lb)
        for j, a in coeffs:
            self.r.append(i)
            self.c.append(j)
            self.v.append(a)
        self.lb.append(lb)
        self.ub.append(ub)
        self.names.append(name)


def _build(sg: SplitGraph, k: int, kind: str) -> IlpModel:
    g = sg.graph
    m, n = g.m, g.n
    N = sg.num_tsvs
    edges = sg.edges
    E = len(edges)
    model = IlpModel(sg, k, kind, None, None, None, None, None, None, [])
    nv = model.num_vars
    rows = _Rows()
    inf = np.inf

    out_edges = [[] for _ in range(sg.num_nodes)]
    in_edges = [[] for _ in range(sg.num_nodes)]
    for e, (a, b) in enumerate(edges):
        out_edges[a].append(e)
        in_edges[b].append(e)

    # flow conservation per (s, t) commodity
    for si in range(m):
        s = N + si
        for ti in range(n):
            t = N + m + ti
            vj = model.v(si, ti)
            for u in range(sg.num_nodes):
                coeffs = [(model.x(e, si, ti), 1.0) for e in out_edges[u]]
                coeffs += [(model.x(e, si, ti), -1.0) for e in in_edges[u]]
                if u == s:
                    coeffs.append((vj, -1.0))
                elif u == t:
                    coeffs.append((vj, 1.0))
                if coeffs:
                    rows.add(coeffs, 0.0, 0.0, f"flow_{sg.label(s)}_{sg.label(t)}_{sg.label(u)}")
    # split edges are used by at most one path of each source
    for si in range(m):
        for e in range(N):
            rows.add([(model.x(e, si, ti), 1.0) for ti in range(n)], -inf, 1.0,
                     f"disjoint_{g.f_tsvs[si]}_{sg.label(e)}")
    if kind == "adaptive":
        for si in range(m):
            rows.add([(model.v(si, ti), 1.0) for ti in range(n)], float(k), float(k),
                     f"kpaths_{g.f_tsvs[si]}")
    # d_e = OR_{s,t} x_e^{(s,t)}
    for e in range(E):
        de = model.d(e)
        for si in range(m):
            for ti in range(n):
                rows.add([(de, 1.0), (model.x(e, si, ti), -1.0)], 0.0, inf, f"dlo_{e}_{si}_{ti}")
        coeffs = [(de, 1.0)] + [(model.x(e, si, ti), -1.0) for si in range(m) for ti in range(n)]
        rows.add(coeffs, -inf, 0.0, f"dhi_{e}")
    # indegree of every TSV bounded by lambda1
    for u in range(N):
        coeffs = [(model.d(e), 1.0) for e in in_edges[u]] + [(model.lambda1, -1.0)]
        rows.add(coeffs, -inf, 0.0, f"indeg_{sg.label(u)}")
    # lambda2 = number of spare split edges in use
    coeffs = [(model.d(m + j), 1.0) for j in range(n)] + [(model.lambda2, -1.0)]
    rows.add(coeffs, 0.0, 0.0, "usedstsv")

    c = np.zeros(nv)
    c[model.lambda1] = 1.0
    if kind == "adaptive":
        c[model.lambda2] = 1.0
    var_lb = np.zeros(nv)
    var_ub = np.ones(nv)
    var_ub[model.lambda1] = var_ub[model.lambda2] = inf
    if kind == "baseline":
        for si in range(m):
            for ti in range(n):
                var_lb[model.v(si, ti)] = 1.0
    model.c = c
    model.A = coo_matrix((rows.v, (rows.r, rows.c)), shape=(len(rows.lb), nv)).tocsr()
    model.row_lb = np.array(rows.lb)
    model.row_ub = np.array(rows.ub)
    model.var_lb, model.var_ub = var_lb, var_ub
    model.row_names = rows.names
    return model


def build_adaptive_model(sg: SplitGraph, k: int) -> IlpModel:
    if not 1 <= k <= sg.graph.n:
        raise IlpError(f"k={k} outside 1..{sg.graph.n}")
    return _build(sg, k, "adaptive")


def build_baseline_model(sg: SplitGraph) -> IlpModel:
    """Fixed-K model with every spare of the graph used (K = n)."""
    if sg.graph.n < 1:
        raise IlpError("baseline model needs at least one spare")
    return _build(sg, sg.graph.n, "baseline")


def model_size(sg: SplitGraph) -> int:
    g = sg.graph
    return g.m * g.n * len(sg.edges) + g.m * g.n + len(sg.edges) + 2


def write_lp(model: IlpModel) -> str:
    """CPLEX-LP style text dump for cross-checking with external solvers."""

    def term(a, j):
        name = model.var_name(j)
        if a == 1:
            return f"+ {name}"
        if a == -1:
            return f"- {name}"
        return f"{'+' if a >= 0 else '-'} {abs(a):g} {name}"

    lines = ["\\ " + f"{model.kind} model, k={model.k}", "Minimize", " obj: " +
             " ".join(term(a, j) for j, a in enumerate(model.c) if a), "Subject To"]
    A = model.A.tocsr()
    for i, name in enumerate(model.row_names):
        lo, hi = model.row_lb[i], model.row_ub[i]
        row = A.getrow(i)
        expr = " ".join(term(a, j) for j, a in zip(row.indices, row.data))
        if lo == hi:
            lines.append(f" {name}: {expr} = {lo:g}")
        else:
            if np.isfinite(lo):
                lines.append(f" {name}_lo: {expr} >= {lo:g}")
            if np.isfinite(hi):
                lines.append(f" {name}_hi: {expr} <= {hi:g}")
    lines.append("Bounds")
    for j in range(model.num_vars):
        lo, hi = model.var_lb[j], model.var_ub[j]
        if lo == hi:
            lines.append(f" {model.var_name(j)} = {lo:g}")
        elif not np.isfinite(hi):
            lines.append(f" {model.var_name(j)} >= {lo:g}")
    lines.append("General")
    lines.append(" " + " ".join(model.var_name(j) for j in range(model.num_vars)))
    lines.append("End")
    return "\n".join(lines) + "\n"


def _milp(model: IlpModel, c, extra_rows, time_left: float):
    A, lb, ub = model.A, model.row_lb, model.row_ub
    constraints = [LinearConstraint(A, lb, ub)]
    for coeffs, lo, hi in extra_rows:
        constraints.append(LinearConstraint(coeffs[None, :], lo, hi))
    return milp(
        c,
        integrality=np.ones(model.num_vars),
        bounds=(model.var_lb, model.var_ub),
        constraints=constraints,
        options={"time_limit": max(time_left, 1e-3), "mip_rel_gap": 0.0, "presolve": True},
    )


def _extract(model: IlpModel, xsol: np.ndarray) -> ToleranceStructure:
    sg, g = model.split_graph, model.graph
    m, n, N = model.m, model.n, sg.num_tsvs
    on = xsol > 0.5
    paths: dict[str, tuple] = {}
    for si in range(m):
        f = g.f_tsvs[si]
        fpaths = []
        for ti in range(n):
            if not on[model.v(si, ti)]:
                continue
            net = FlowNetwork(sg.num_nodes, N + si, N + m + ti)
            for e, (a, b) in enumerate(sg.edges):
                if on[model.x(e, si, ti)]:
                    net.add_arc(a, b, 1)
            res = FlowResult(1, [1] * net.num_arcs)
            (nodes,) = decompose_paths(net, res)
            fpaths.append(tuple([f] + [sg.tsv_of(x) for x in nodes[1:] if x < N]))
        paths[f] = tuple(fpaths)
    return ToleranceStructure(model.k, paths)


def _objective_of(model: IlpModel, xsol) -> tuple[int, int]:
    return int(round(xsol[model.lambda1])), int(round(xsol[model.lambda2]))


def _tiebreak_vector(model: IlpModel) -> Optional[np.ndarray]:
    """Colex key on used spares, then number of connections.

    Returns None when the weights would lose integer precision.
    """
    m, n = model.m, model.n
    n_rep = len(model.split_graph.replace_edges)
    W = n_rep + 1
    if (2**n) * W > 2**40:
        return None
    c = np.zeros(model.num_vars)
    for j in range(n):
        c[model.d(m + j)] = float(2**j * W)
    for e in range(model.split_graph.num_tsvs, model.num_edges):
        c[model.d(e)] = 1.0
    return c


def solve(model: IlpModel, timeout: float = DEFAULT_TIMEOUT, max_vars: int = DEFAULT_MAX_VARS,
          tiebreak: bool = True) -> SolveOutcome:
    t0 = time.perf_counter()
    if timeout <= 0:
        return SolveOutcome(TIMEOUT, note="no time budget")
    if model.num_vars > max_vars:
        return SolveOutcome(TIMEOUT, elapsed=time.perf_counter() - t0,
                            note=f"model has {model.num_vars} variables (limit {max_vars})")
    res = _milp(model, model.c, [], timeout)
    elapsed = time.perf_counter() - t0
    if res.status == 2:
        return SolveOutcome(INFEASIBLE, elapsed=elapsed, note=res.message)
    if res.status != 0:
        return SolveOutcome(TIMEOUT, elapsed=elapsed, note=res.message)
    xsol = res.x
    best = _objective_of(model, xsol)
    complete = False
    tb = _tiebreak_vector(model) if tiebreak else None
    if tb is not None:
        cap = np.zeros(model.num_vars)
        cap[np.nonzero(model.c)[0]] = 1.0
        bound = sum(best) if model.kind == "adaptive" else best[0]
        res2 = _milp(model, tb, [(cap, -np.inf, bound + 0.5)], timeout - (time.perf_counter() - t0))
        if res2.status == 0:
            xsol = res2.x
            complete = True
        else:
            log.info("tie-break stage did not finish: %s", res2.message)
    st = _extract(model, xsol)
    lam = _objective_of(model, xsol)
    return SolveOutcome(OPTIMAL, st, lam, time.perf_counter() - t0, tiebreak_complete=complete,
                        spares=tuple(model.graph.s_tsvs))


def solve_adaptive(g: RelGraph, k: int, timeout: float = DEFAULT_TIMEOUT, max_vars: int = DEFAULT_MAX_VARS) -> SolveOutcome:
    sg = split(g)
    if not 1 <= k <= g.n:
        raise IlpError(f"k={k} outside 1..{g.n}")
    if model_size(sg) > max_vars:
        return SolveOutcome(TIMEOUT, note=f"model has {model_size(sg)} variables (limit {max_vars})")
    return solve(build_adaptive_model(sg, k), timeout, max_vars)


def solve_fixed_k_baseline(sg: SplitGraph, k: int, timeout: float = DEFAULT_TIMEOUT,
                           max_vars: int = DEFAULT_MAX_VARS, tiebreak: bool = True) -> SolveOutcome:
    """Best fixed-K structure over all k-subsets of the spares.

    Each subset is solved with the baseline model restricted to it; subsets
    where some f-TSV lacks k disjoint paths are skipped without a solve.
    """
    g = sg.graph
    if not 1 <= k <= g.n:
        raise IlpError(f"k={k} outside 1..{g.n}")
    t0 = time.perf_counter()
    deadline = t0 + timeout
    if timeout <= 0:
        return SolveOutcome(TIMEOUT, note="no time budget")
    best: Optional[SolveOutcome] = None
    for subset in combinations(g.s_tsvs, k):
        left = deadline - time.perf_counter()
        if left <= 0:
            return SolveOutcome(TIMEOUT, elapsed=time.perf_counter() - t0, note="deadline hit during subset enumeration")
        sub = g.restrict_spares(subset)
        if max_tolerant_faults(sub).k < k:
            continue
        ssg = split(sub)
        if model_size(ssg) > max_vars:
            return SolveOutcome(TIMEOUT, elapsed=time.perf_counter() - t0,
                                note=f"model has {model_size(ssg)} variables (limit {max_vars})")
        out = solve(build_baseline_model(ssg), left, max_vars, tiebreak)
        if out.status == TIMEOUT:
            return SolveOutcome(TIMEOUT, elapsed=time.perf_counter() - t0, note=out.note)
        if out.status != OPTIMAL:
            continue
        if best is None or out.objective[0] < best.objective[0]:
            best = out
    elapsed = time.perf_counter() - t0
    if best is None:
        return SolveOutcome(INFEASIBLE, elapsed=elapsed, note=f"no {k}-subset of spares admits a structure")
    best.elapsed = elapsed
    return best
