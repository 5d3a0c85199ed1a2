import random
import time

import pytest

from oracles import random_graph, random_graph_max_edges
from tsvft import ilpgen, mcmfgen
from tsvft.fixtures import SPARSE5X_CONNECTIONS, row4_graph, sparse5_graph, sparse5x_graph
from tsvft.flow import CostOverflowError
from tsvft.mcmfgen import ExponentOverflowError, HeuristicConfig, HeuristicError, PartialState
from tsvft.relgraph import build_from_edges, split
from tsvft.structure import exhaustive_injection, metrics, verify
from tsvft.tolerance import max_tolerant_faults


def funnel_graph(m: int):
    """m f-TSVs whose only replacement is one shared spare."""
    fs = [f"f{i + 1}" for i in range(m)]
    return build_from_edges(fs, ["s1"], [(f, "s1") for f in fs])


def test_sparse5x_network_costs():
    g = sparse5x_graph()
    sg = split(g)
    state = PartialState()
    net = mcmfgen.build_network_for("f1", sg, 2, state, HeuristicConfig())
    assert net.source == g.index("f1") and net.sink == 2 * (g.m + g.n)
    assert net.caps[g.index("f1")] == 2
    # every spare split edge costs c**k before any spare is used
    assert all(net.costs[j] == 9 for j in range(g.m, g.m + g.n))
    state.add("f1", (("f1", "s1"), ("f1", "f2", "f3", "s2")))
    net = mcmfgen.build_network_for("f2", sg, 2, state, HeuristicConfig())
    assert net.costs[g.index("s1")] == 0 and net.costs[g.index("s3")] == 9
    with pytest.raises(HeuristicError):
        mcmfgen.build_network_for("s1", sg, 2, state, HeuristicConfig())


def test_sparse5x_connections_without_perturbation():
    st = mcmfgen.generate(sparse5x_graph(), 2, HeuristicConfig(perturb_threshold=0))
    assert set(st.connections) == SPARSE5X_CONNECTIONS
    mt = metrics(st, sparse5x_graph())
    assert mt.used_stsvs == 3 and mt.max_mux_ports == 3


@pytest.mark.parametrize("make,used", [(row4_graph, 2), (sparse5_graph, 3), (sparse5x_graph, 3)])
def test_fixture_structures(make, used):
    g = make()
    st = mcmfgen.generate(g, 2, HeuristicConfig(seed=1))
    assert verify(st, g, 2).ok
    mt = metrics(st, g)
    assert mt.used_stsvs == used and mt.max_mux_ports <= 3
    assert exhaustive_injection(st, g, 2).fraction == 1.0


def test_partial_state_add_remove():
    s = PartialState()
    s.add("a", (("a", "b", "x"), ("a", "y")))
    s.add("b", (("b", "x"),))
    # b -> x is one connection shared by both routes
    assert s.tc["x"] == 1 and s.conn_count[("b", "x")] == 2 and s.used_spares == {"x", "y"}
    s.add("c", (("c", "x"),))
    assert s.tc["x"] == 2
    s.remove("c")
    s.remove("a")
    assert s.tc["x"] == 1 and s.used_spares == {"x"}
    assert not s.is_connection("a", "b")
    assert PartialState.from_routed({"b": (("b", "x"),)}).tc == s.tc


def test_seeded_runs_repeat():
    g = random_graph(random.Random(1), 8, 4, 0.5)
    k = max_tolerant_faults(g).k
    cfg = HeuristicConfig(seed=7, perturb_threshold=20)
    assert mcmfgen.generate(g, k, cfg) == mcmfgen.generate(g, k, cfg)


def test_k_zero_gives_empty_structure():
    st = mcmfgen.generate(row4_graph(), 0)
    assert st.k == 0 and all(ps == () for ps in st.paths.values())


def test_too_few_paths_is_an_error():
    with pytest.raises(HeuristicError):
        mcmfgen.generate(sparse5_graph(), 3)


def test_exponent_overflow_is_cost_overflow():
    with pytest.raises(ExponentOverflowError) as info:
        mcmfgen.generate(funnel_graph(20), 1, HeuristicConfig(c=4))
    assert isinstance(info.value, CostOverflowError)
    assert "s1" in str(info.value)
    # nineteen funnelled f-TSVs stay within the cap
    assert verify(mcmfgen.generate(funnel_graph(19), 1, HeuristicConfig(c=4)), funnel_graph(19), 1).ok


def test_config_validation():
    with pytest.raises(ValueError):
        HeuristicConfig(c=1)
    with pytest.raises(ValueError):
        HeuristicConfig(perturb_threshold=-1)
    with pytest.raises(ValueError):
        HeuristicConfig(c=16, exponent_cap=18)


def test_heuristic_never_beats_ilp():
    rng = random.Random(77)
    done = 0
    while done < 25:
        g = random_graph_max_edges(rng, rng.randint(2, 5), rng.randint(1, 3), 16, 0.5)
        k = max_tolerant_faults(g).k
        if k == 0:
            continue
        st = mcmfgen.generate(g, k, HeuristicConfig(seed=done))
        assert verify(st, g, k).ok
        out = ilpgen.solve_adaptive(g, k, timeout=60)
        mt = metrics(st, g)
        assert mt.max_indegree + mt.used_stsvs >= sum(out.objective)
        done += 1


def test_perturb_keeps_validity():
    g = random_graph(random.Random(3), 10, 5, 0.45)
    k = max_tolerant_faults(g).k
    base = mcmfgen.generate(g, k, HeuristicConfig(perturb_threshold=0))
    better = mcmfgen.perturb(base, g, HeuristicConfig(perturb_threshold=30, seed=2))
    assert verify(better, g, k).ok
    key = lambda st: (metrics(st).max_mux_ports, metrics(st).used_stsvs)
    assert key(better) <= key(base)
