import itertools
import math
from dataclasses import replace

import numpy as np
import pytest

from tsvft.planner import (
    PlanInfeasible, PlanInstance, balance_range, bipartition, candidate_stsvs, check_result, instance_from_dict,
    load_instance, plan, plan_fixed_k,
)
from tsvft.relgraph import BBox, FTsv, Site
from tsvft.structure import verify
from tsvft.synth import SynthParams, dumps, synth_instance
from tsvft.yieldmodel import monte_carlo_yield, tsv_yield


def small_instance(n=40, side=80.0, seed=3, **params):
    d = synth_instance(SynthParams(n, side, side, seed=seed, bbox_scale=1.25))
    d["params"].update(params)
    return instance_from_dict(d)


def test_balance_range():
    assert balance_range(10) == (5, 5)
    assert balance_range(2) == (1, 1)
    assert balance_range(3) == (1, 2)
    assert balance_range(100) == (45, 55)


def brute_min_cut(W, lo, hi):
    n = len(W)
    best = None
    for r in range(lo, hi + 1):
        for left in itertools.combinations(range(n), r):
            mask = np.zeros(n, dtype=bool)
            mask[list(left)] = True
            cut = W[np.ix_(mask, ~mask)].sum()
            best = cut if best is None else min(best, cut)
    return best


def test_bipartition_separates_clusters():
    # two 4-cliques joined by one light edge, listed interleaved
    ids = [f"v{i}" for i in range(8)]
    W = np.zeros((8, 8))
    a, b = [0, 2, 4, 6], [1, 3, 5, 7]
    for grp in (a, b):
        for i, j in itertools.combinations(grp, 2):
            W[i, j] = W[j, i] = 5
    W[0, 1] = W[1, 0] = 1
    left, right = bipartition(ids, W)
    assert {frozenset(left), frozenset(right)} == {frozenset(ids[i] for i in a), frozenset(ids[i] for i in b)}


def test_bipartition_near_optimal_and_balanced():
    rng = np.random.default_rng(0)
    gaps = []
    for _ in range(20):
        n = int(rng.integers(4, 11))
        W = rng.integers(0, 4, size=(n, n)).astype(float)
        W = np.triu(W, 1)
        W = W + W.T
        ids = [str(i) for i in range(n)]
        left, right = bipartition(ids, W, coords=rng.random((n, 2)))
        lo, hi = balance_range(n)
        assert lo <= len(left) <= hi and len(left) + len(right) == n
        mask = np.array([i in left for i in ids])
        gaps.append(W[np.ix_(mask, ~mask)].sum() - brute_min_cut(W, lo, hi))
    assert min(gaps) >= 0
    assert sum(g == 0 for g in gaps) >= 10


def test_bipartition_rejects_singletons():
    with pytest.raises(ValueError):
        bipartition(["a"], np.zeros((1, 1)))


def test_candidates_skip_claimed_and_uncovered():
    f = FTsv("a", 0.0, 0.0, BBox(0.0, 0.0, 10.0, 10.0))
    sites = (Site("s1", 5.0, 5.0), Site("s2", 50.0, 50.0), Site("s3", 10.0, 0.0))
    g = candidate_stsvs([f], sites, 0.0)
    assert g.s_tsvs == ("s1", "s3")
    g = candidate_stsvs([f], sites, 0.0, claimed=frozenset({"s1"}))
    assert g.s_tsvs == ("s3",)


def test_plan_meets_target_and_invariants():
    inst = small_instance()
    res = plan(inst)
    assert res.tsv_yield >= inst.target_yield
    assert check_result(inst, res) == []
    for gr in res.groups:
        assert gr.k_used >= 1
        assert gr.k_used <= inst.kcap
        assert len(set(gr.structure.used_spares)) == len(gr.s_tsvs)
        M = len(gr.f_tsvs) + len(gr.s_tsvs)
        p = inst.yield_params.p
        indep = math.fsum(math.comb(M, i) * p**i * (1 - p) ** (M - i) for i in range(gr.k_used + 1))
        if gr.yield_mode == "binomial":
            assert gr.group_yield == pytest.approx(indep, abs=1e-12)
        else:
            assert gr.group_yield >= indep - 1e-12


def test_plan_yield_rechecked_by_sampling():
    inst = small_instance(p=0.01, target_yield=0.95)
    res = plan(inst)
    fmap = {f.id: f for f in inst.f_tsvs}
    sm = {s.id: s for s in inst.s_sites}
    from tsvft.relgraph import LayoutGroup, build_from_layout
    ests = []
    for gr in res.groups:
        g = build_from_layout(LayoutGroup(tuple(fmap[f] for f in gr.f_tsvs), tuple(sm[s] for s in gr.s_tsvs), 0.0))
        assert verify(gr.structure, g, gr.k_used).ok
        ests.append(monte_carlo_yield(g, gr.structure, 0.01, 20_000, seed=1))
    value = tsv_yield([e.value for e in ests])
    sigma = math.sqrt(sum(e.stderr**2 for e in ests))
    assert value >= res.tsv_yield - 3 * sigma


def test_tight_target_forces_splits():
    inst = small_instance(n=60, side=100.0, p=0.01, target_yield=0.99, kcap=2)
    res = plan(inst)
    assert res.num_groups >= 2 and res.iterations >= 1
    assert res.tsv_yield >= 0.99
    assert check_result(inst, res) == []


def test_plan_is_deterministic():
    inst = small_instance()
    assert plan(inst).to_dict(timing=False) == plan(inst).to_dict(timing=False)


def test_unreachable_targets():
    with pytest.raises(PlanInfeasible):
        plan(small_instance(target_yield=1.0))
    inst = small_instance()
    with pytest.raises(PlanInfeasible) as info:
        plan(replace(inst, s_sites=()))
    assert info.value.limiting and "single" in str(info.value)
    d = synth_instance(SynthParams(30, 60.0, 60.0, bbox_scale=0.0, seed=1))
    with pytest.raises(PlanInfeasible):
        plan(instance_from_dict(d))


def test_ilp_method_small_and_fallback():
    inst = small_instance(n=3, side=10.0, seed=5, method="ilp", max_ilp_vars=100_000, timeout=60, kcap=2)
    res = plan(inst)
    assert {gr.engine for gr in res.groups} <= {"ilp", "none"}
    assert check_result(inst, res) == []
    res = plan(replace(inst, max_ilp_vars=10))
    assert all(gr.engine == "mcmf" and "fell back" in gr.note for gr in res.groups if gr.k_used)


def test_fixed_k_private_sites():
    fs = tuple(FTsv(f"f{i}", 10.0 * i, 0.0, BBox(10.0 * i, 0.0, 10.0 * i + 2, 2.0)) for i in range(4))
    sites = tuple(Site(f"s{i}", 10.0 * i + 1, 1.0) for i in range(4))
    inst = PlanInstance(fs, sites, target_yield=0.99)
    res = plan_fixed_k(inst, 1)
    assert res.num_groups == 4
    assert all(len(gr.s_tsvs) == 1 for gr in res.groups)
    assert check_result(inst, res) == []


def test_fixed_k_uncovered_ftsv_is_infeasible():
    fs = (FTsv("f1", 0.0, 0.0, BBox(0.0, 0.0, 2.0, 2.0)), FTsv("f2", 20.0, 0.0, BBox(20.0, 0.0, 20.0, 0.0)))
    sites = (Site("s1", 1.0, 1.0),)
    with pytest.raises(PlanInfeasible, match="f2"):
        plan_fixed_k(PlanInstance(fs, sites), 1)
    with pytest.raises(ValueError):
        plan_fixed_k(PlanInstance(fs, sites), 0)


def test_fixed_k_uses_exactly_k_per_group():
    inst = small_instance()
    res = plan_fixed_k(inst, 3)
    assert all(len(gr.s_tsvs) == 3 and gr.k_used == 3 for gr in res.groups)
    assert res.tsv_yield >= inst.target_yield
    assert check_result(inst, res) == []


def test_instance_file_roundtrip(tmp_path):
    d = synth_instance(SynthParams(10, 30.0, 30.0, seed=2))
    path = tmp_path / "inst.json"
    path.write_text(dumps(d))
    inst = load_instance(path)
    assert len(inst.f_tsvs) == 10 and inst.kcap == 3 and inst.target_yield == 0.997
    bad = dict(d, f_tsvs=[{"id": "x"}])
    from tsvft.relgraph import GraphError
    with pytest.raises(GraphError):
        instance_from_dict(bad)


def test_dense_uncapped_group_stays_within_cost_cap():
    # every bbox covers the whole die, so K exceeds the heuristic's exponent cap
    fs = tuple(FTsv(f"f{i}", 5.0 * (i % 5), 5.0 * (i // 5), BBox(0.0, 0.0, 30.0, 30.0)) for i in range(20))
    taken = {(f.x, f.y) for f in fs}
    sites = tuple(Site(f"s{x}_{y}", float(x), float(y)) for x in range(0, 31, 5) for y in range(0, 31, 5)
                  if (x, y) not in taken)
    inst = PlanInstance(fs, sites, target_yield=0.997, kcap=None)
    res = plan(inst)
    assert res.tsv_yield >= 0.997
    assert all(gr.k_used <= inst.heuristic.exponent_cap for gr in res.groups)
    assert check_result(inst, res) == []


def test_small_groups_report_exact_yield():
    fs = tuple(FTsv(f"f{i}", 10.0 * i, 0.0, BBox(10.0 * i, 0.0, 10.0 * i + 2, 2.0)) for i in range(4))
    sites = tuple(Site(f"s{i}", 10.0 * i + 1, 1.0) for i in range(4))
    inst = PlanInstance(fs, sites, target_yield=0.99)
    res = plan_fixed_k(inst, 1)
    for gr in res.groups:
        # one f-TSV and one spare: fails only when both fail
        assert gr.yield_mode == "exact"
        assert gr.group_yield == pytest.approx(1 - 0.001**2, abs=1e-15)
