import itertools
import random

import pytest

from oracles import brute_repairable, random_graph
from tsvft import mcmfgen
from tsvft.fixtures import row4_graph, row4_direct_structure, row4_chain_structure, sparse5_graph, sparse5_structure
from tsvft.structure import (
    InjectionBudgetError, StructureError, ToleranceStructure, exhaustive_injection, load_structure, metrics,
    repairable, sampled_injection, save_structure, structure_from_dict, verify,
)
from tsvft.tolerance import max_tolerant_faults


def test_fixture_structures_verify():
    assert verify(row4_direct_structure(), row4_graph(), 2).ok
    assert verify(row4_chain_structure(), row4_graph(), 2).ok
    assert verify(sparse5_structure(), sparse5_graph(), 2).ok


def test_all_to_all_vs_chain_metrics():
    g = row4_graph()
    a = metrics(row4_direct_structure(), g)
    c = metrics(row4_chain_structure(), g)
    assert (a.max_indegree, a.max_mux_ports, a.used_stsvs) == (4, 4, 2)
    assert c.max_mux_ports == 3 and c.used_stsvs == 2
    assert sorted(set(c.mux_ports.values())) == [1, 2, 3]
    assert metrics(sparse5_structure(), sparse5_graph()).used_stsvs == 3


def test_metrics_without_graph_match():
    st = row4_chain_structure()
    assert metrics(st).to_dict() == metrics(st, row4_graph()).to_dict()


def _rules(st, g, k):
    return {v.rule for v in verify(st, g, k).violations}


def test_rejections_name_the_rule():
    g = row4_graph()
    good = row4_chain_structure().paths
    dup = dict(good, f3=(("f3", "s1"), ("f3", "f4", "s1")))
    assert "duplicate_spare_endpoint" in _rules(ToleranceStructure(2, dup), g, 2)
    shared = dict(good, f1=(("f1", "f3", "s1"), ("f1", "f3", "f4", "s2")))
    assert "paths_not_vertex_disjoint" in _rules(ToleranceStructure(2, shared), g, 2)
    missing = {f: ps for f, ps in good.items() if f != "f2"}
    assert "missing_ftsv" in _rules(ToleranceStructure(2, missing), g, 2)
    bad_edge = dict(good, f4=(("f4", "f1", "s1"), ("f4", "s2")))
    assert "edge_not_in_graph" in _rules(ToleranceStructure(2, bad_edge), g, 2)
    short = dict(good, f4=(("f4", "s1"),))
    assert "wrong_path_count" in _rules(ToleranceStructure(2, short), g, 2)
    loop = dict(good, f2=(("f2", "f3", "f2", "s1"), ("f2", "f4", "s2")))
    assert "path_not_simple" in _rules(ToleranceStructure(2, loop), g, 2)
    assert "k_mismatch" in _rules(row4_chain_structure(), g, 1)
    dangling = dict(good, f4=(("f4", "s1"), ("f4",)))
    assert "path_not_ending_at_spare" in _rules(ToleranceStructure(2, dangling), g, 2)


def test_repair_example():
    res = repairable(row4_chain_structure(), row4_graph(), ["f1", "f2"])
    assert res.ok
    assert res.assignment == {"f1": ("f1", "f3", "s1"), "f2": ("f2", "f4", "s2")}
    assert not repairable(row4_chain_structure(), row4_graph(), ["f1", "f2", "f3"]).ok
    with pytest.raises(StructureError):
        repairable(row4_chain_structure(), row4_graph(), ["nope"])


def test_repair_matches_search_oracle():
    rng = random.Random(17)
    checked = 0
    for _ in range(80):
        g = random_graph(rng, rng.randint(2, 5), rng.randint(1, 4), 0.5)
        k = max_tolerant_faults(g).k
        if k == 0:
            continue
        st = mcmfgen.generate(g, k, mcmfgen.HeuristicConfig(perturb_threshold=3, seed=1))
        names = list(g.f_tsvs) + list(st.used_spares)
        for r in range(1, min(4, len(names)) + 1):
            for faults in itertools.combinations(names, r):
                assert repairable(st, g, faults).ok == brute_repairable(st, g, faults)
                checked += 1
    assert checked > 100


def test_exhaustive_injection_counts():
    rep = exhaustive_injection(row4_chain_structure(), row4_graph(), 2)
    assert rep.total == 4 + 6 and rep.fraction == 1.0 and rep.counterexample is None
    rep3 = exhaustive_injection(row4_chain_structure(), row4_graph(), 3)
    assert rep3.counterexample == ("f1", "f2", "f3")
    with pytest.raises(InjectionBudgetError):
        exhaustive_injection(row4_chain_structure(), row4_graph(), 2, cap=5)
    with pytest.raises(StructureError):
        exhaustive_injection(row4_chain_structure(), row4_graph(), 9)


def test_sampled_injection_deterministic():
    a = sampled_injection(sparse5_structure(), sparse5_graph(), 2, 200, seed=4)
    b = sampled_injection(sparse5_structure(), sparse5_graph(), 2, 200, seed=4)
    assert a == b and a.fraction == 1.0


def test_io_roundtrip(tmp_path):
    p = tmp_path / "s.json"
    save_structure(sparse5_structure(), p)
    assert load_structure(p) == sparse5_structure()
    with pytest.raises(StructureError):
        structure_from_dict({"paths": {}})
