import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_max_flow, brute_min_cost_max_flow
from tsvft.flow import (
    COST_BUDGET, CostOverflowError, FlowError, FlowNetwork, decompose_paths, max_flow, min_cost_max_flow,
    path_arcs,
)


def _net(n, s, t, arcs):
    net = FlowNetwork(n, s, t)
    for u, v, c, w in arcs:
        net.add_arc(u, v, c, w)
    return net


def _random_arcs(rng, n, count, maxcap=2, maxcost=4):
    arcs = []
    while len(arcs) < count:
        u, v = rng.randrange(n), rng.randrange(n)
        if u != v:
            arcs.append((u, v, rng.randint(0, maxcap), rng.randint(0, maxcost)))
    return arcs


def _check_flow(net, res):
    bal = [0] * net.num_nodes
    for a, x in enumerate(res.arc_flows):
        assert 0 <= x <= net.caps[a]
        bal[net.tails[a]] -= x
        bal[net.heads[a]] += x
    for v in range(net.num_nodes):
        if v not in (net.source, net.sink):
            assert bal[v] == 0
    assert bal[net.sink] == res.value


def test_max_flow_matches_min_cut_oracle():
    rng = random.Random(11)
    for _ in range(150):
        n = rng.randint(2, 8)
        arcs = _random_arcs(rng, n, rng.randint(0, 12), maxcap=3)
        net = _net(n, 0, n - 1, arcs)
        res = max_flow(net)
        _check_flow(net, res)
        assert res.value == brute_max_flow(n, 0, n - 1, arcs)


def test_min_cost_flow_matches_enumeration():
    rng = random.Random(5)
    for _ in range(60):
        n = rng.randint(2, 6)
        arcs = _random_arcs(rng, n, rng.randint(0, 9), maxcap=2)
        net = _net(n, 0, n - 1, arcs)
        res = min_cost_max_flow(net)
        _check_flow(net, res)
        assert (res.value, res.total_cost) == brute_min_cost_max_flow(n, 0, n - 1, arcs)
        assert res.total_cost == sum(x * w for x, w in zip(res.arc_flows, net.costs))


def test_decomposition_reassembles_flow():
    rng = random.Random(3)
    for _ in range(100):
        n = rng.randint(2, 8)
        arcs = _random_arcs(rng, n, rng.randint(0, 14), maxcap=2)
        net = _net(n, 0, n - 1, arcs)
        res = min_cost_max_flow(net)
        paths = decompose_paths(net, res)
        assert len(paths) == res.value
        for p in paths:
            assert p[0] == 0 and p[-1] == n - 1
            assert len(set(p)) == len(p)
        used = [0] * net.num_arcs
        for arcs_of in path_arcs(net, res, paths):
            for a in arcs_of:
                used[a] += 1
        assert all(u <= x for u, x in zip(used, res.arc_flows))


def test_decomposition_cancels_circulation():
    # 0 -> 1 -> 2 -> 1 is a loop carried by the given flow; only 0-1-3 survives
    net = _net(4, 0, 3, [(0, 1, 1, 0), (1, 2, 1, 0), (2, 1, 1, 0), (1, 3, 1, 0)])
    from tsvft.flow import FlowResult
    res = FlowResult(1, [1, 1, 1, 1])
    assert decompose_paths(net, res) == [[0, 1, 3]]


def test_lowest_head_tie_break():
    net = _net(4, 0, 3, [(0, 2, 1, 0), (0, 1, 1, 0), (1, 3, 1, 0), (2, 3, 1, 0)])
    res = max_flow(net)
    assert decompose_paths(net, res) == [[0, 1, 3], [0, 2, 3]]


def test_validation():
    with pytest.raises(FlowError):
        FlowNetwork(2, 0, 0)
    net = FlowNetwork(2, 0, 1)
    with pytest.raises(FlowError):
        net.add_arc(0, 1, -1)
    with pytest.raises(FlowError):
        net.add_arc(0, 5, 1)


def test_cost_overflow_guard():
    net = _net(3, 0, 2, [(0, 1, 2, COST_BUDGET // 2 + 1), (1, 2, 2, 0)])
    with pytest.raises(CostOverflowError):
        min_cost_max_flow(net)
    net = _net(2, 0, 1, [(0, 1, 1, COST_BUDGET + 1)])
    with pytest.raises(CostOverflowError):
        min_cost_max_flow(net)


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 7), st.lists(st.tuples(st.integers(0, 6), st.integers(0, 6), st.integers(0, 3),
                                             st.integers(0, 5)), max_size=12))
def test_mcmf_value_equals_max_flow(n, raw):
    arcs = [(u % n, v % n, c, w) for u, v, c, w in raw if u % n != v % n]
    net = _net(n, 0, n - 1, arcs)
    assert min_cost_max_flow(net).value == max_flow(net).value
