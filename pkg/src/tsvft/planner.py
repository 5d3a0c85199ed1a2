"""Top-down fault-tolerance TSV planning.

All f-TSVs start in one group.  Each round every group gets a candidate
relation graph over the sites its nets cover, a tolerance K, a temporary
heuristic structure and a yield.  While the TSV yield misses the target the
worst group is bipartitioned.  Final structures are then regenerated with
the selected engine while spare sites are claimed group by group.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import ilpgen, mcmfgen
from .mcmfgen import HeuristicConfig
from .relgraph import BBox, FTsv, GraphError, LayoutGroup, RelGraph, Site, build_from_layout, coverage_matrix
from .structure import ToleranceStructure, metrics, verify
from .tolerance import max_tolerant_faults
from .yieldmodel import BINOMIAL, EXACT, YieldParams, exact_yield, group_yield, tsv_yield

log = logging.getLogger(__name__)


class PlanInfeasible(RuntimeError):
    def __init__(self, message: str, best_yield: float, limiting: list[dict]):
        super().__init__(message)
        self.best_yield = best_yield
        self.limiting = limiting

    def to_dict(self) -> dict:
        return {"error": str(self), "best_tsv_yield": round(self.best_yield, 6), "limiting_groups": self.limiting}


@dataclass
class PlanInstance:
    f_tsvs: tuple[FTsv, ...]
    s_sites: tuple[Site, ...]
    target_yield: float = 0.997
    yield_params: YieldParams = field(default_factory=YieldParams)
    kcap: Optional[int] = None
    margin: float = 0.0
    method: str = "mcmf"
    pitch_um: float = 5.0
    heuristic: HeuristicConfig = field(default_factory=HeuristicConfig)
    timeout: float = ilpgen.DEFAULT_TIMEOUT
    # size guard keeps fallbacks deterministic; time limits would not
    max_ilp_vars: int = 500

    def __post_init__(self):
        if not 0 < self.target_yield <= 1:
            raise ValueError(f"target yield {self.target_yield} outside (0, 1]")
        if self.kcap is not None and self.kcap < 1:
            raise ValueError("kcap must be at least 1")
        if self.margin < 0:
            raise GraphError(f"negative margin {self.margin}")
        if self.method not in ("ilp", "mcmf"):
            raise ValueError(f"unknown method {self.method!r}")
        ids = [f.id for f in self.f_tsvs] + [s.id for s in self.s_sites]
        if len(set(ids)) != len(ids):
            raise GraphError("duplicate TSV or site id in instance")
        if not self.f_tsvs:
            raise GraphError("instance has no f-TSVs")


@dataclass
class GroupResult:
    gid: int
    f_tsvs: tuple[str, ...]
    s_tsvs: tuple[str, ...]
    k_max: int
    k_used: int
    structure: ToleranceStructure
    group_yield: float
    engine: str = "mcmf"
    note: str = ""
    max_mux_ports: int = 0
    yield_mode: str = BINOMIAL

    def to_dict(self) -> dict:
        return {
            "id": self.gid,
            "f_tsvs": list(self.f_tsvs),
            "s_tsvs": list(self.s_tsvs),
            "k_max": self.k_max,
            "k_used": self.k_used,
            "group_yield": round(self.group_yield, 6),
            "yield_mode": self.yield_mode,
            "max_mux_ports": self.max_mux_ports,
            "engine": self.engine,
            "note": self.note,
            "structure": self.structure.to_dict(),
        }


@dataclass
class PlanResult:
    groups: list[GroupResult]
    mode: str = "adaptive"
    iterations: int = 0
    timing: dict = field(default_factory=dict)

    @property
    def num_groups(self) -> int:
        return len(self.groups)

    @property
    def total_stsvs(self) -> int:
        return sum(len(gr.s_tsvs) for gr in self.groups)

    @property
    def max_mux_ports(self) -> int:
        return max((gr.max_mux_ports for gr in self.groups), default=0)

    @property
    def tsv_yield(self) -> float:
        return tsv_yield([gr.group_yield for gr in self.groups])

    def totals(self) -> dict:
        return {
            "num_groups": self.num_groups,
            "total_stsvs": self.total_stsvs,
            "max_mux_ports": self.max_mux_ports,
            "tsv_yield": round(self.tsv_yield, 6),
        }

    def to_dict(self, timing: bool = True) -> dict:
        d = {"mode": self.mode, "iterations": self.iterations, "totals": self.totals(),
             "groups": [gr.to_dict() for gr in self.groups]}
        if timing:
            d["timing"] = {k: round(v, 4) for k, v in self.timing.items()}
        return d


# --------------------------------------------------------------------------
# instance I/O


def instance_from_dict(d: dict) -> PlanInstance:
    try:
        params = d.get("params", {})
        fs = tuple(
            FTsv(str(f["id"]), float(f["x"]), float(f["y"]),
                 BBox(float(f["bbox"]["xmin"]), float(f["bbox"]["ymin"]),
                      float(f["bbox"]["xmax"]), float(f["bbox"]["ymax"])))
            for f in d["f_tsvs"]
        )
        sites = tuple(Site(str(s["id"]), float(s["x"]), float(s["y"])) for s in d.get("s_sites", []))
        yp = YieldParams(
            p=float(params.get("p", 0.001)),
            mode=params.get("yield_mode", "binomial"),
            samples=int(params.get("samples", 100_000)),
            seed=int(params.get("seed", 0)),
        )
        kcap = params.get("kcap")
        cfg = HeuristicConfig(
            c=int(params.get("c", 3)),
            perturb_threshold=int(params.get("threshold", 50)),
            seed=int(params.get("seed", 0)),
        )
        return PlanInstance(
            f_tsvs=fs,
            s_sites=sites,
            target_yield=float(params.get("target_yield", 0.997)),
            yield_params=yp,
            kcap=None if kcap is None else int(kcap),
            margin=float(params.get("margin_um", 0.0)),
            method=params.get("method", "mcmf"),
            pitch_um=float(d.get("pitch_um", 5.0)),
            heuristic=cfg,
            timeout=float(params.get("timeout", ilpgen.DEFAULT_TIMEOUT)),
            max_ilp_vars=int(params.get("max_ilp_vars", 500)),
        )
    except (KeyError, TypeError) as exc:
        raise GraphError(f"malformed instance file: missing or bad field {exc}") from None


def load_instance(path) -> PlanInstance:
    return instance_from_dict(json.loads(Path(path).read_text()))


# --------------------------------------------------------------------------
# candidates and partitioning


def candidate_stsvs(group_ftsvs: Sequence[FTsv], sites: Sequence[Site], margin: float,
                    claimed: frozenset = frozenset()) -> RelGraph:
    """Relation graph over the group and every unclaimed site its nets cover."""
    free = [s for s in sites if s.id not in claimed]
    if free:
        cover = coverage_matrix(group_ftsvs, np.array([s.x for s in free]), np.array([s.y for s in free]), margin)
        keep = cover.any(axis=0)
        free = [s for s, k in zip(free, keep) if k]
    return build_from_layout(LayoutGroup(tuple(group_ftsvs), tuple(free), margin))


def balance_range(n: int) -> tuple[int, int]:
    lo, hi = math.ceil(0.45 * n - 1e-9), math.floor(0.55 * n + 1e-9)
    if lo > hi:
        lo, hi = n // 2, (n + 1) // 2
    return max(lo, 1), min(hi, n - 1)


def cut_weight(weights: np.ndarray, left_mask: np.ndarray) -> float:
    return float(weights[np.ix_(left_mask, ~left_mask)].sum())


def bipartition(ids: Sequence[str], weights: np.ndarray, coords: Optional[np.ndarray] = None,
                max_passes: int = 20) -> tuple[list[str], list[str]]:
    """Balanced min-cut bipartition (Fiduccia-Mattheyses passes).

    ``weights`` is a symmetric matrix aligned with ``ids``.  The start
    partition splits along the wider coordinate axis when ``coords`` is
    given, else by input order.  Moves may leave the balance window by one
    vertex inside a pass; only balanced prefixes are kept.
    """
    n = len(ids)
    if n < 2:
        raise ValueError("cannot bipartition a group with fewer than two f-TSVs")
    W = np.asarray(weights, dtype=float)
    lo, hi = balance_range(n)
    if coords is not None:
        coords = np.asarray(coords, dtype=float)
        axis = int(np.argmax(coords.max(axis=0) - coords.min(axis=0)))
        order = sorted(range(n), key=lambda i: (coords[i, axis], coords[i, 1 - axis], i))
    else:
        order = list(range(n))
    side = np.zeros(n, dtype=bool)  # True = left
    side[order[: n // 2]] = True

    def gains(side):
        same = np.where(side[None, :] == side[:, None], W, 0.0).sum(axis=1) - np.diag(W)
        other = np.where(side[None, :] != side[:, None], W, 0.0).sum(axis=1)
        return other - same

    for _ in range(max_passes):
        g = gains(side)
        locked = np.zeros(n, dtype=bool)
        cur = side.copy()
        left = int(cur.sum())
        total, best_total, best_step = 0.0, 0.0, 0
        moves: list[int] = []
        for step in range(1, n + 1):
            cand = np.where(locked, -np.inf, g)
            # moving from left shrinks it; keep within [lo-1, hi+1] and both sides nonempty
            new_left = np.where(cur, left - 1, left + 1)
            ok = (new_left >= max(lo - 1, 1)) & (new_left <= min(hi + 1, n - 1)) & ~locked
            if not ok.any():
                break
            cand = np.where(ok, cand, -np.inf)
            v = int(np.argmax(cand))  # first max = lowest index
            gv = g[v]
            sign = np.where(cur == cur[v], 2.0, -2.0) * W[v]
            g += sign
            g[v] = -gv
            cur[v] = not cur[v]
            left = int(cur.sum())
            locked[v] = True
            moves.append(v)
            total += gv
            if lo <= left <= hi and total > best_total + 1e-9:
                best_total, best_step = total, step
        if best_step == 0:
            break
        for v in moves[:best_step]:
            side[v] = not side[v]
    left_ids = [ids[i] for i in range(n) if side[i]]
    right_ids = [ids[i] for i in range(n) if not side[i]]
    return left_ids, right_ids


# --------------------------------------------------------------------------
# planning


@dataclass
class _Eval:
    graph: RelGraph
    k_max: int
    k_used: int
    structure: Optional[ToleranceStructure]
    gy: float


class _Planner:
    def __init__(self, inst: PlanInstance):
        self.inst = inst
        self.fmap = {f.id: f for f in inst.f_tsvs}
        self.findex = {f.id: i for i, f in enumerate(inst.f_tsvs)}
        fs = inst.f_tsvs
        sx = np.array([s.x for s in inst.s_sites])
        sy = np.array([s.y for s in inst.s_sites])
        self.site_cover = coverage_matrix(fs, sx, sy, inst.margin).astype(np.float64)
        fx = np.array([f.x for f in fs])
        fy = np.array([f.y for f in fs])
        ff = coverage_matrix(fs, fx, fy, inst.margin)
        np.fill_diagonal(ff, False)
        self.ff_rel = ff | ff.T
        self.coords = np.stack([fx, fy], axis=1)
        self.cache: dict = {}
        self.temp_cfg = replace(inst.heuristic, perturb_threshold=0)
        self.timing = {"evaluate": 0.0, "partition": 0.0, "finalize": 0.0}

    def k_used(self, k_max: int) -> int:
        # the spare cost c**k must stay under the heuristic's exponent cap
        k = min(k_max, self.inst.heuristic.exponent_cap)
        return k if self.inst.kcap is None else min(k, self.inst.kcap)

    def evaluate(self, f_ids: tuple[str, ...]) -> _Eval:
        key = f_ids
        if key in self.cache:
            return self.cache[key]
        t0 = time.perf_counter()
        g = candidate_stsvs([self.fmap[f] for f in f_ids], self.inst.s_sites, self.inst.margin)
        k_max = max_tolerant_faults(g).k
        k = self.k_used(k_max)
        try:
            st = mcmfgen.generate(g, k, self.temp_cfg)
            gy = group_yield(g, st, self.inst.yield_params)
        except mcmfgen.ExponentOverflowError as exc:
            # too congested for the heuristic; a zero yield marks the group for splitting
            log.info("group of %d f-TSVs: %s", len(f_ids), exc)
            st, gy = None, 0.0
        ev = _Eval(g, k_max, k, st, gy)
        self.cache[key] = ev
        self.timing["evaluate"] += time.perf_counter() - t0
        return ev

    def split(self, f_ids: tuple[str, ...]) -> tuple[tuple[str, ...], tuple[str, ...]]:
        t0 = time.perf_counter()
        idx = np.array([self.findex[f] for f in f_ids])
        C = self.site_cover[idx]
        W = C @ C.T + self.ff_rel[np.ix_(idx, idx)]
        np.fill_diagonal(W, 0.0)
        left, right = bipartition(list(f_ids), W, self.coords[idx])
        self.timing["partition"] += time.perf_counter() - t0
        order = self.findex.__getitem__
        return tuple(sorted(left, key=order)), tuple(sorted(right, key=order))

    def final_structure(self, g: RelGraph, k: int) -> tuple[ToleranceStructure, str, str]:
        inst = self.inst
        if k == 0:
            return ToleranceStructure(0, {f: () for f in g.f_tsvs}), "none", "no tolerant structure (K=0)"
        if inst.method == "ilp":
            out = ilpgen.solve_adaptive(g, k, inst.timeout, inst.max_ilp_vars)
            if out.status == ilpgen.OPTIMAL:
                return out.structure, "ilp", ""
            note = f"ilp {out.status.lower()} ({out.note}); fell back to mcmf"
            return mcmfgen.generate(g, k, inst.heuristic), "mcmf", note
        return mcmfgen.generate(g, k, inst.heuristic), "mcmf", ""


def _limiting(groups, yields, ids) -> list[dict]:
    order = sorted(range(len(groups)), key=lambda i: (yields[i], ids[i]))
    return [{"id": ids[i], "size": len(groups[i]), "group_yield": round(yields[i], 6)} for i in order[:5]]


def _pick_worst(groups, yields, ids) -> Optional[int]:
    cands = [i for i in range(len(groups)) if len(groups[i]) >= 2]
    if not cands:
        return None
    return min(cands, key=lambda i: (yields[i], ids[i]))


def plan(inst: PlanInstance) -> PlanResult:
    t_start = time.perf_counter()
    pl = _Planner(inst)
    p = inst.yield_params.p
    if inst.target_yield >= 1.0 and p > 0:
        raise PlanInfeasible("target yield 1.0 is unreachable with a non-zero defect probability", 0.0, [])
    groups: list[tuple[str, ...]] = [tuple(f.id for f in inst.f_tsvs)]
    ids = [0]
    next_id = 1
    iterations = 0
    while True:
        # evaluation loop: sites may overlap between groups here
        while True:
            evals = [pl.evaluate(gr) for gr in groups]
            yields = [ev.gy for ev in evals]
            ty = tsv_yield(yields)
            if ty >= inst.target_yield:
                break
            w = _pick_worst(groups, yields, ids)
            if w is None:
                raise PlanInfeasible("target yield unreachable: every group is a single f-TSV",
                                     ty, _limiting(groups, yields, ids))
            left, right = pl.split(groups[w])
            groups[w:w + 1] = [left, right]
            ids[w:w + 1] = [next_id, next_id + 1]
            next_id += 2
            iterations += 1
        t0 = time.perf_counter()
        results = _finalize(pl, groups, ids, evals)
        pl.timing["finalize"] += time.perf_counter() - t0
        final_yields = [r.group_yield for r in results]
        ty = tsv_yield(final_yields)
        if ty >= inst.target_yield:
            break
        # site claiming lowered some group below plan; split further
        w = _pick_worst(groups, final_yields, ids)
        if w is None:
            raise PlanInfeasible("target yield unreachable after spare allocation",
                                 ty, _limiting(groups, final_yields, ids))
        log.info("allocation conflict left TSV yield %.6f; splitting group %d", ty, ids[w])
        left, right = pl.split(groups[w])
        groups[w:w + 1] = [left, right]
        ids[w:w + 1] = [next_id, next_id + 1]
        next_id += 2
        iterations += 1
    res = PlanResult(results, "adaptive", iterations)
    res.timing = dict(pl.timing, total=time.perf_counter() - t_start)
    return res


REPORT_EXACT_TSVS = 12


def reported_yield(g: RelGraph, st: ToleranceStructure, params: YieldParams) -> tuple[float, str]:
    """Final group yield: exact for small groups planned with the binomial bound, else the planning mode."""
    if params.mode == BINOMIAL and params.p > 0 and st.k > 0:
        if g.m + len(st.used_spares) <= min(params.exact_budget, REPORT_EXACT_TSVS):
            return exact_yield(g, st, params.p, params.exact_budget), EXACT
    return group_yield(g, st, params), params.mode


def _finalize(pl: _Planner, groups, ids, evals) -> list[GroupResult]:
    inst = pl.inst
    order = sorted(range(len(groups)), key=lambda i: (-(1.0 - evals[i].gy), ids[i]))
    claimed: set[str] = set()
    out: dict[int, GroupResult] = {}
    for i in order:
        fs = [pl.fmap[f] for f in groups[i]]
        g = candidate_stsvs(fs, inst.s_sites, inst.margin, frozenset(claimed))
        ev = evals[i]
        if g == ev.graph:
            k_max, k = ev.k_max, ev.k_used
        else:
            k_max = max_tolerant_faults(g).k
            k = pl.k_used(k_max)
        try:
            if inst.method == "mcmf" and k > 0 and ev.structure is not None and g == ev.graph:
                # same graph and k: the unperturbed routing is already known
                st, engine, note = mcmfgen.perturb(ev.structure, g, inst.heuristic), "mcmf", ""
            else:
                st, engine, note = pl.final_structure(g, k)
        except mcmfgen.ExponentOverflowError as exc:
            if ev.structure is not None and g == ev.graph:
                st, engine, note = ev.structure, "mcmf", f"perturbation skipped: {exc}"
            else:
                k = 0
                st, engine, note = ToleranceStructure(0, {f: () for f in g.f_tsvs}), "none", f"no structure: {exc}"
        used = tuple(s for s in g.s_tsvs if s in set(st.used_spares))
        claimed.update(used)
        gy, ymode = reported_yield(g, st, inst.yield_params)
        out[i] = GroupResult(ids[i], groups[i], used, k_max, k, st, gy, engine, note,
                             metrics(st, g).max_mux_ports if k else 1, ymode)
    return [out[i] for i in range(len(groups))]


# --------------------------------------------------------------------------
# fixed-K baseline


def shared_sites(fs: Sequence[FTsv], sites: Sequence[Site], margin: float, claimed: set) -> list[Site]:
    free = [s for s in sites if s.id not in claimed]
    if not free:
        return []
    cover = coverage_matrix(fs, np.array([s.x for s in free]), np.array([s.y for s in free]), margin)
    return [s for s, ok in zip(free, cover.all(axis=0)) if ok]


class _FixedK:
    """Site bookkeeping for the fixed-k baseline."""

    def __init__(self, pl: _Planner, k: int):
        self.pl = pl
        self.k = k
        self.cover = pl.site_cover.astype(bool)
        self.free = np.ones(len(pl.inst.s_sites), dtype=bool)
        self.sx = np.array([s.x for s in pl.inst.s_sites])
        self.sy = np.array([s.y for s in pl.inst.s_sites])

    def shared(self, f_ids, only_free: bool = True) -> np.ndarray:
        idx = [self.pl.findex[f] for f in f_ids]
        mask = self.cover[idx].all(axis=0)
        return mask & self.free if only_free else mask

    def pick(self, f_ids) -> list[int]:
        cand = np.nonzero(self.shared(f_ids))[0]
        fs = [self.pl.fmap[f] for f in f_ids]
        cx = sum(f.x for f in fs) / len(fs)
        cy = sum(f.y for f in fs) / len(fs)
        d2 = (self.sx[cand] - cx) ** 2 + (self.sy[cand] - cy) ** 2
        order = np.lexsort((cand, d2))[: self.k]
        return sorted(int(c) for c in cand[order])


def plan_fixed_k(inst: PlanInstance, k: int) -> PlanResult:
    """Prior-work grouping: every group owns exactly k sites shared by all its nets.

    Groups are split until each has at least k commonly covered sites, then
    served most-constrained first (fewest free shared sites).  A group that
    loses the race for sites is split again; a single f-TSV that cannot get
    k sites makes the instance infeasible.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    t_start = time.perf_counter()
    pl = _Planner(inst)
    p = inst.yield_params.p
    if inst.target_yield >= 1.0 and p > 0:
        raise PlanInfeasible("target yield 1.0 is unreachable with a non-zero defect probability", 0.0, [])
    fk = _FixedK(pl, k)
    sites = inst.s_sites
    done: dict[int, GroupResult] = {}
    next_id = 1
    iterations = 0

    def split_until_shared(gid, f_ids, out):
        nonlocal next_id, iterations
        stack = [(gid, f_ids)]
        while stack:
            gid, f_ids = stack.pop(0)
            n_shared = int(fk.shared(f_ids, only_free=False).sum())
            if n_shared >= k:
                out.append((gid, f_ids))
            elif len(f_ids) == 1:
                raise PlanInfeasible(
                    f"f-TSV {f_ids[0]} covers only {n_shared} candidate sites; {k} are required",
                    0.0, [{"id": gid, "size": 1, "shared_sites": n_shared}])
            else:
                left, right = pl.split(f_ids)
                iterations += 1
                stack += [(next_id, left), (next_id + 1, right)]
                next_id += 2

    def allocate(ready):
        nonlocal next_id, iterations
        while ready:
            counts = [int(fk.shared(f_ids).sum()) for _, f_ids in ready]
            w = min(range(len(ready)), key=lambda i: (counts[i], ready[i][0]))
            gid, f_ids = ready.pop(w)
            if counts[w] >= k:
                chosen = fk.pick(f_ids)
                fk.free[chosen] = False
                done[gid] = _baseline_group(pl, gid, f_ids, [pl.fmap[f] for f in f_ids],
                                            [sites[c] for c in chosen], k)
                continue
            if len(f_ids) == 1:
                raise PlanInfeasible(
                    f"f-TSV {f_ids[0]} cannot get {k} free shared sites (found {counts[w]}) "
                    f"after neighbouring groups claimed theirs",
                    0.0, [{"id": gid, "size": 1, "shared_sites": counts[w]}])
            left, right = pl.split(f_ids)
            iterations += 1
            ready += [(next_id, left), (next_id + 1, right)]
            next_id += 2

    ready: list = []
    split_until_shared(0, tuple(f.id for f in inst.f_tsvs), ready)
    allocate(ready)
    site_index = {s.id: i for i, s in enumerate(sites)}
    while True:
        order_ids = sorted(done)
        ty = tsv_yield([done[i].group_yield for i in order_ids])
        if ty >= inst.target_yield:
            break
        groups = [done[i].f_tsvs for i in order_ids]
        yields = [done[i].group_yield for i in order_ids]
        w = _pick_worst(groups, yields, order_ids)
        if w is None:
            raise PlanInfeasible("target yield unreachable: every group is a single f-TSV",
                                 ty, _limiting(groups, yields, order_ids))
        gr = done.pop(order_ids[w])
        fk.free[[site_index[s] for s in gr.s_tsvs]] = True
        left, right = pl.split(gr.f_tsvs)
        iterations += 1
        halves: list = []
        split_until_shared(next_id, left, halves)
        split_until_shared(next_id + 1, right, halves)
        next_id += 2
        allocate(halves)
    res = PlanResult([done[i] for i in sorted(done)], f"fixed-k{k}", iterations)
    res.timing = dict(pl.timing, total=time.perf_counter() - t_start)
    return res


def _baseline_group(pl: _Planner, gid, f_ids, fs, chosen, k) -> GroupResult:
    inst = pl.inst
    g = build_from_layout(LayoutGroup(tuple(fs), tuple(chosen), inst.margin))
    out = ilpgen.solve_fixed_k_baseline(ilpgen.split(g), k, inst.timeout, inst.max_ilp_vars, tiebreak=False)
    if out.status == ilpgen.OPTIMAL:
        st, engine, note = out.structure, "ilp-baseline", ""
    else:
        st = mcmfgen.generate(g, k, inst.heuristic)
        engine, note = "mcmf", f"baseline ilp {out.status.lower()} ({out.note}); fell back to mcmf"
    gy, ymode = reported_yield(g, st, inst.yield_params)
    return GroupResult(gid, tuple(f_ids), tuple(s.id for s in chosen), k, k, st, gy, engine, note,
                       metrics(st, g).max_mux_ports, ymode)


def check_result(inst: PlanInstance, res: PlanResult) -> list[str]:
    """Structural invariants of a plan; returns a list of problems."""
    problems = []
    seen: set[str] = set()
    fmap = {f.id: f for f in inst.f_tsvs}
    site_map = {s.id: s for s in inst.s_sites}
    covered = set()
    for gr in res.groups:
        for s in gr.s_tsvs:
            if s in seen:
                problems.append(f"site {s} allocated twice")
            seen.add(s)
        if inst.kcap is not None and res.mode == "adaptive" and gr.k_used > inst.kcap:
            problems.append(f"group {gr.gid} uses k={gr.k_used} above kcap")
        g = build_from_layout(LayoutGroup(tuple(fmap[f] for f in gr.f_tsvs),
                                          tuple(site_map[s] for s in gr.s_tsvs), inst.margin))
        diag = verify(gr.structure, g, gr.k_used)
        if not diag.ok:
            problems.append(f"group {gr.gid}: " + "; ".join(map(str, diag.violations[:3])))
        if set(gr.structure.used_spares) - set(gr.s_tsvs):
            problems.append(f"group {gr.gid} structure uses unallocated spares")
        covered.update(gr.f_tsvs)
    if covered != set(fmap):
        problems.append("groups do not partition the f-TSVs")
    return problems


__all__ = [
    "PlanInstance", "PlanResult", "GroupResult", "PlanInfeasible", "candidate_stsvs", "bipartition",
    "plan", "plan_fixed_k", "load_instance", "instance_from_dict", "check_result", "balance_range",
]
