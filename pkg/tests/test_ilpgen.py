import random

import pytest

from oracles import brute_structure_optimum, random_graph_max_edges
from tsvft import ilpgen
from tsvft.fixtures import row4_graph, sparse5_graph, sparse5x_graph
from tsvft.relgraph import split
from tsvft.structure import metrics, verify
from tsvft.tolerance import max_tolerant_faults


def test_variable_indexing_is_dense():
    m = ilpgen.build_adaptive_model(split(sparse5_graph()), 2)
    seen = set()
    for e in range(m.num_edges):
        for si in range(m.m):
            for ti in range(m.n):
                seen.add(m.x(e, si, ti))
    seen |= {m.v(si, ti) for si in range(m.m) for ti in range(m.n)}
    seen |= {m.d(e) for e in range(m.num_edges)}
    seen |= {m.lambda1, m.lambda2}
    assert seen == set(range(m.num_vars))
    assert m.num_vars == ilpgen.model_size(split(sparse5_graph()))
    names = [m.var_name(j) for j in range(m.num_vars)]
    assert len(set(names)) == len(names)


@pytest.mark.parametrize("make,lam", [(sparse5_graph, (2, 3)), (sparse5x_graph, (2, 3)), (row4_graph, (2, 2))])
def test_fixture_optima(make, lam):
    g = make()
    out = ilpgen.solve_adaptive(g, 2, timeout=60)
    assert out.status == ilpgen.OPTIMAL
    assert out.objective == lam
    assert verify(out.structure, g, 2).ok
    mt = metrics(out.structure, g)
    assert (mt.max_indegree, mt.used_stsvs) == lam
    assert out.tiebreak_complete


def test_deterministic_solution():
    a = ilpgen.solve_adaptive(sparse5x_graph(), 2, timeout=60).structure
    b = ilpgen.solve_adaptive(sparse5x_graph(), 2, timeout=60).structure
    assert a == b


def test_timeout_and_size_guard():
    out = ilpgen.solve_adaptive(sparse5_graph(), 2, timeout=0)
    assert out.status == ilpgen.TIMEOUT and out.to_dict()["status"] == "NA"
    out = ilpgen.solve_adaptive(sparse5_graph(), 2, max_vars=10)
    assert out.status == ilpgen.TIMEOUT and "variables" in out.note


def test_k_range_and_infeasible():
    with pytest.raises(ilpgen.IlpError):
        ilpgen.solve_adaptive(sparse5_graph(), 0)
    with pytest.raises(ilpgen.IlpError):
        ilpgen.solve_adaptive(sparse5_graph(), 5)
    assert ilpgen.solve_adaptive(sparse5_graph(), 3, timeout=60).status == ilpgen.INFEASIBLE


def test_baseline_fixed_subset():
    out = ilpgen.solve_fixed_k_baseline(split(sparse5_graph()), 2, timeout=60)
    assert out.status == ilpgen.INFEASIBLE
    out = ilpgen.solve_fixed_k_baseline(split(row4_graph()), 2, timeout=60)
    assert out.status == ilpgen.OPTIMAL
    assert len(out.structure.used_spares) == 2
    assert verify(out.structure, row4_graph(), 2).ok


def test_lp_dump_mentions_every_row():
    model = ilpgen.build_adaptive_model(split(row4_graph()), 2)
    text = ilpgen.write_lp(model)
    assert text.startswith("\\ adaptive")
    assert "Minimize" in text and "End" in text
    for name in model.row_names[:20]:
        assert name in text


def test_optimum_matches_exhaustive_search_small():
    rng = random.Random(2024)
    done = 0
    while done < 12:
        g = random_graph_max_edges(rng, rng.randint(2, 4), rng.randint(1, 3), 14, 0.5)
        k = max_tolerant_faults(g).k
        if k == 0:
            continue
        out = ilpgen.solve_adaptive(g, k, timeout=60)
        assert out.status == ilpgen.OPTIMAL
        assert verify(out.structure, g, k).ok
        assert sum(out.objective) == brute_structure_optimum(g, k)
        done += 1
