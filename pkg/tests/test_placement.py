import logging
import random

import pytest

from vpca.model import Instance, InstanceError, Node, parse_instance, triangle_instance
from vpca.netflow import R3Oracle, r3
from vpca.placement import PlacementConfig, eg_place, place, ratio_greedy_place, sg_place, vol_place

from _support import random_instance


def hetero_triangle(costs, budget):
    t = triangle_instance(budget)
    nodes = [Node(n.id, c, n.capacity, n.name) for n, c in zip(t.nodes, costs)]
    return Instance(nodes, t.flows, budget)


def test_sg_single_pick_lowest_id():
    p = sg_place(triangle_instance(1))
    assert p.order == (0,) and p.total_cost == 1


def test_sg_stops_when_marginals_vanish():
    p = sg_place(triangle_instance(3))
    assert p.selected == {0, 1}
    assert r3(triangle_instance(3), p.selected) == 6


def test_sg_budget_below_cost():
    p = sg_place(triangle_instance(0.5))
    assert p.selected == frozenset() and p.total_cost == 0


def test_sg_rejects_unequal_or_zero_costs():
    with pytest.raises(InstanceError):
        sg_place(hetero_triangle((1, 1, 2), 2))
    with pytest.raises(InstanceError):
        sg_place(triangle_instance(2).with_uniform_cost(0))


def test_eg_examples():
    assert eg_place(triangle_instance(2)).selected == {0, 1}
    assert eg_place(hetero_triangle((1, 1, 10), 2)).selected == {0, 1}
    assert eg_place(triangle_instance(0)).selected == frozenset()


def test_eg_size_guard():
    inst = random_instance(2, max_nodes=6)
    big = Instance([Node(i, 1, 10, f"n{i}") for i in range(13)], [], 3)
    with pytest.raises(InstanceError):
        eg_place(big)
    assert eg_place(inst, config=PlacementConfig(eg_size_limit=6)) is not None


def test_vol_examples():
    assert vol_place(triangle_instance(2)).selected == {0, 1}
    hub = parse_instance(
        "budget 5\nnode a cost 1 capacity 9\nnode hub cost 5 capacity 9\nnode c cost 1 capacity 9\n"
        "flow f rate 2 path a,hub\nflow g rate 3 path hub,c\nflow h rate 1 path hub\n"
    )
    assert vol_place(hub).selected == {1}
    assert vol_place(triangle_instance(0)).selected == frozenset()


def test_vol_skips_unaffordable():
    inst = parse_instance(
        "budget 2\nnode big cost 5 capacity 9\nnode a cost 1 capacity 9\nnode b cost 1 capacity 9\n"
        "flow f rate 3 path big,a\nflow g rate 2 path big,b\n"
    )
    assert vol_place(inst).order == (1, 2)


def test_budget_never_exceeded():
    for seed in range(60):
        for uniform in (True, False):
            inst = random_instance(seed, uniform_cost=uniform)
            for mode in ("auto", "VOL", "EG"):
                p = place(inst, PlacementConfig(mode=mode))
                assert p.total_cost <= inst.budget + 1e-9
            if uniform:
                assert sg_place(inst).total_cost <= inst.budget + 1e-9


def test_sg_prefix_values_nondecreasing_and_deterministic():
    for seed in range(40):
        inst = random_instance(seed, max_nodes=7, max_flows=12)
        p = sg_place(inst)
        values = [r3(inst, p.order[:i]) for i in range(len(p.order) + 1)]
        assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))
        assert sg_place(inst).order == p.order


def test_seeded_random_tie_break():
    t = triangle_instance(1)
    picks = {sg_place(t, config=PlacementConfig(mode="SG", tie_break="random", seed=s)).order for s in range(20)}
    assert picks == {(0,), (1,), (2,)}
    a = sg_place(t, config=PlacementConfig(tie_break="random", seed=4))
    b = sg_place(t, config=PlacementConfig(tie_break="random", seed=4))
    assert a.order == b.order


def test_config_validation():
    with pytest.raises(ValueError):
        PlacementConfig(eg_size_limit=2)
    with pytest.raises(ValueError):
        PlacementConfig(mode="XX")
    with pytest.raises(ValueError):
        PlacementConfig(tie_break="coin")


def test_auto_mode_dispatch(caplog):
    t = triangle_instance(2)
    assert place(t).certified
    assert place(hetero_triangle((1, 1, 10), 2)).selected == {0, 1}
    big = Instance([Node(i, 1 + i % 2, 10, f"n{i}") for i in range(5)], [], 3)
    with caplog.at_level(logging.WARNING):
        p = place(big, PlacementConfig(eg_size_limit=4))
    assert not p.certified
    assert "ratio greedy" in caplog.text


def test_ratio_greedy_respects_budget_and_positive_gain():
    for seed in range(30):
        inst = random_instance(seed, uniform_cost=False)
        oracle = R3Oracle(inst)
        p = ratio_greedy_place(inst, oracle)
        assert p.total_cost <= inst.budget + 1e-9
        values = [oracle(p.order[:i]) for i in range(len(p.order) + 1)]
        assert all(b > a for a, b in zip(values, values[1:]))


def test_eg_not_worse_than_any_pair():
    rng = random.Random(0)
    for seed in range(30):
        inst = random_instance(seed, max_nodes=5, uniform_cost=False)
        best = r3(inst, eg_place(inst).selected)
        for _ in range(10):
            pair = rng.sample(range(inst.num_nodes), min(2, inst.num_nodes))
            if inst.cost_of(pair) <= inst.budget:
                assert best >= r3(inst, pair) - 1e-9
