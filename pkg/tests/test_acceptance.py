"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line."""

import itertools
import math
import random
import time

import pytest

from vpca import kernels
from vpca.allocation import GreedyTrace, RoundingTrace, gca, mca
from vpca.cli import run_algo
from vpca.exact import exact_allocation, exact_vpca
from vpca.model import EPS_CAP, Instance, Node, expand_servers, generate_random, triangle_instance
from vpca.netflow import R3Oracle, augmenting_path_max_flow, build_network, max_net_flow
from vpca.placement import PlacementConfig, eg_place, place, sg_place

from _support import lp_relaxed_value

FACTOR = 1 - 1 / math.e


def _instance(rng, max_nodes, max_flows, uniform_cost=True, uniform_capacity=False, min_nodes=1):
    V = rng.randint(min_nodes, max_nodes)
    F = rng.randint(0, max_flows)
    rate_hi = rng.choice([2.0, 5.0, 10.0])
    cap_lo = rate_hi * rng.choice([1.0, 1.5, 2.0])
    cap_hi = cap_lo if uniform_capacity else cap_lo + rng.choice([0.0, rate_hi, 3 * rate_hi])
    cost = (1.0, 1.0) if uniform_cost else (0.5, 5.0)
    return generate_random(
        V, F, rng.randint(1, min(4, V)), (0.5, rate_hi), (cap_lo, cap_hi), cost,
        rng.choice([0.2, 0.4, 0.6, 0.8]), rng.randrange(2**31),
    )


def _subsets(n):
    for k in range(n + 1):
        yield from itertools.combinations(range(n), k)


# --- 1 -------------------------------------------------------------------------

def test_c01_triangle_ground_truth(report):
    t0 = time.perf_counter()
    t = triangle_instance()
    v3, v2, both = (exact_allocation(t, s).objective for s in ({2}, {1}, {1, 2}))
    empty = exact_allocation(t, set()).objective
    elapsed = time.perf_counter() - t0
    ok = (v3, v2, both) == (2.0, 2.0, 6.0) and (both - v2) > (v3 - empty) and elapsed < 1
    report(1, ok, f"J3({{v3}})={v3:g} J3({{v2}})={v2:g} J3({{v2,v3}})={both:g}; "
                  f"marginal {both - v2:g} > {v3 - empty:g}; {elapsed:.3f}s < 1s")
    assert ok


# --- 2 -------------------------------------------------------------------------

def test_c02_max_flow_implementations_agree(report):
    t0 = time.perf_counter()
    rng = random.Random(2)
    worst = 0.0
    for _ in range(1000):
        inst = _instance(rng, 6, 8)
        sel = [v for v in range(inst.num_nodes) if rng.random() < 0.6]
        z = build_network(inst)
        values = [
            R3Oracle(inst)(sel),
            max_net_flow(z, sel, kernels.python_push_relabel)[0],
            max_net_flow(z, sel, augmenting_path_max_flow)[0],
            lp_relaxed_value(inst, sel),
        ]
        worst = max(worst, max(values) - min(values))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and elapsed < 30
    report(2, ok, f"1000 instances, push-relabel ({kernels.BACKEND}) / python push-relabel / "
                  f"augmenting paths / LP max spread {worst:.2e} <= 1e-6; {elapsed:.1f}s < 30s")
    assert ok


# --- 3 -------------------------------------------------------------------------

def test_c03_r3_monotone_submodular(report):
    t0 = time.perf_counter()
    rng = random.Random(3)
    triples = violations = 0
    for _ in range(200):
        inst = _instance(rng, 5, 8, min_nodes=3)
        V = inst.num_nodes
        oracle = R3Oracle(inst)
        value = {s: oracle(s) for s in _subsets(V)}
        for a in value:
            for b in value:
                if not set(a) <= set(b):
                    continue
                if value[b] < value[a] - EPS_CAP:
                    violations += 1
                for v in range(V):
                    if v in b:
                        continue
                    triples += 1
                    ga = value[tuple(sorted(a + (v,)))] - value[a]
                    gb = value[tuple(sorted(b + (v,)))] - value[b]
                    if ga < gb - EPS_CAP:
                        violations += 1
    elapsed = time.perf_counter() - t0
    ok = violations == 0 and elapsed < 60
    report(3, ok, f"{triples} (A, B, v) triples on 200 instances, {violations} violations; {elapsed:.1f}s < 60s")
    assert ok


# --- 4 -------------------------------------------------------------------------

def test_c04_greedy_placement_ratio(report):
    t0 = time.perf_counter()
    rng = random.Random(4)
    sg_bad = eg_bad = 0
    sg_worst = eg_worst = math.inf
    for _ in range(200):
        inst = _instance(rng, 5, 8, uniform_cost=True)
        oracle = R3Oracle(inst)
        k = int(inst.budget // inst.nodes[0].cost)
        best = max(oracle(s) for s in _subsets(inst.num_nodes) if len(s) <= k)
        got = oracle(sg_place(inst, oracle).selected)
        if got < FACTOR * best - EPS_CAP:
            sg_bad += 1
        if best > 0:
            sg_worst = min(sg_worst, got / best)
    for _ in range(200):
        inst = _instance(rng, 5, 8, uniform_cost=False)
        oracle = R3Oracle(inst)
        best = max(oracle(s) for s in _subsets(inst.num_nodes) if inst.cost_of(s) <= inst.budget + EPS_CAP)
        got = oracle(eg_place(inst, oracle).selected)
        if got < FACTOR * best - EPS_CAP:
            eg_bad += 1
        if best > 0:
            eg_worst = min(eg_worst, got / best)
    elapsed = time.perf_counter() - t0
    ok = sg_bad == eg_bad == 0 and elapsed < 120
    report(4, ok, f"SG {sg_bad} / EG {eg_bad} violations of (1-1/e) on 200+200 instances "
                  f"(worst ratios {sg_worst:.3f}, {eg_worst:.3f}); {elapsed:.1f}s < 120s")
    assert ok


# --- 5, 6, 8: one instrumented allocation suite ----------------------------------

@pytest.fixture(scope="module")
def allocation_suite():
    t0 = time.perf_counter()
    rng = random.Random(5)
    runs = []
    while len(runs) < 500:
        assumption1 = len(runs) % 2 == 1
        inst = _instance(rng, 6, 12, uniform_capacity=assumption1, min_nodes=2 if assumption1 else 1)
        if assumption1:
            # keep only flows that see at least two selected nodes
            sel = [v for v in range(inst.num_nodes) if rng.random() < 0.8]
            keep = [f.id for f in inst.flows if len(set(f.path) & set(sel)) >= 2]
            inst = inst.with_flows(keep)
        else:
            sel = [v for v in range(inst.num_nodes) if rng.random() < 0.6]
        bound = R3Oracle(inst)(sel)
        rt, gt = RoundingTrace(), GreedyTrace()
        m = mca(inst, sel, rt, check=True)
        g = gca(inst, sel, gt)
        runs.append((inst, sel, bound, m.objective, g.objective, rt, gt))
    return runs, time.perf_counter() - t0


def test_c05_allocation_ratios(report, allocation_suite):
    runs, elapsed = allocation_suite
    mca_bad = sum(1 for *_, b, m, g, rt, gt in runs if m < b / 2 - 1e-6)
    gca_bad = sum(1 for *_, b, m, g, rt, gt in runs if g < b / 3 - 1e-6)
    a1 = [r for r in runs if r[6].assumption1]
    a1_bad = sum(1 for *_, b, m, g, rt, gt in a1 if g < 2 * b / 5 - 1e-6)
    ok = mca_bad == gca_bad == a1_bad == 0 and len(a1) > 0 and elapsed < 120
    report(5, ok, f"500 pairs: MCA<1/2 r3 {mca_bad}, GCA<1/3 r3 {gca_bad}, "
                  f"GCA<2/5 r3 {a1_bad} of {len(a1)} uniform-capacity/two-node pairs; {elapsed:.1f}s < 120s")
    assert ok


def test_c06_greedy_load_structure(report, allocation_suite):
    runs, _ = allocation_suite
    half = sum(r[6].half_load_violations for r in runs)
    pair = sum(r[6].pair_load_violations for r in runs)
    unassigned = sum(len(r[6].phase1_unassigned) for r in runs)
    pairs = sum(r[6].pairs_checked for r in runs)
    ok = half == 0 and pair == 0 and unassigned > 0 and pairs > 0
    report(6, ok, f"half-load violations {half} over {unassigned} first-pass leftovers; "
                  f"two-thirds pair-load violations {pair} over {pairs} pairs (final loads)")
    assert ok


def test_c08_rounding_conservation(report, allocation_suite):
    runs, _ = allocation_suite
    traces = [r[5] for r in runs]
    steps = sum(t.step2_runs for t in traces)
    load = max(t.max_load_drift for t in traces)
    flow = max(t.max_flow_drift for t in traces)
    total = max(t.max_total_drift for t in traces)
    removed = min((t.min_edges_removed for t in traces if t.min_edges_removed is not None), default=None)
    forest_checks = sum(t.forest_checks for t in traces)
    ok = steps > 0 and max(load, flow, total) <= 1e-9 and removed is not None and removed >= 1
    report(8, ok, f"{steps} perturbations: load drift {load:.1e}, interior flow drift {flow:.1e}, "
                  f"total drift {total:.1e}, min edges removed {removed}; {forest_checks} acyclicity checks")
    assert ok


# --- 7 -------------------------------------------------------------------------

def test_c07_end_to_end_ratio(report):
    t0 = time.perf_counter()
    rng = random.Random(7)
    bad_mca = bad_gca = 0
    worst_mca = worst_gca = math.inf
    for i in range(200):
        inst = _instance(rng, 8, 12, uniform_cost=i % 2 == 0)
        opt = exact_vpca(inst).objective
        placement = place(inst, PlacementConfig(), R3Oracle(inst))
        m = mca(inst, placement.selected).objective
        g = gca(inst, placement.selected).objective
        bad_mca += m < FACTOR / 2 * opt - 1e-6
        bad_gca += g < FACTOR / 3 * opt - 1e-6
        if opt > 0:
            worst_mca, worst_gca = min(worst_mca, m / opt), min(worst_gca, g / opt)
    elapsed = time.perf_counter() - t0
    ok = bad_mca == bad_gca == 0 and elapsed < 300
    report(7, ok, f"200 instances: RP-MCA {bad_mca} / RP-GCA {bad_gca} violations "
                  f"(worst ratios {worst_mca:.3f}, {worst_gca:.3f}); {elapsed:.1f}s < 300s")
    assert ok


# --- 9 -------------------------------------------------------------------------

def test_c09_sweep_trends(report):
    t0 = time.perf_counter()
    base = generate_random(12, 144, 5, (1, 100), (100, 1000), (100, 100), 0.5, seed=1)
    algos = ("rp-mca", "rp-gca", "vol-mca")
    config = PlacementConfig()
    sweeps = {
        "budget": [base.with_uniform_capacity(1000).with_budget(b) for b in range(100, 1000, 100)],
        "capacity": [base.with_budget(400).with_uniform_capacity(c) for c in range(100, 1100, 100)],
    }
    drops, below = [], []
    for axis, points in sweeps.items():
        prev = None
        for inst in points:
            pct = {a: 100 * run_algo(inst, a, config)[0].objective / inst.total_rate for a in algos}
            if prev:
                drops += [(axis, a) for a in algos if pct[a] < prev[a] - 1e-6]
            if pct["rp-mca"] < pct["rp-gca"] - 1e-6:
                key = inst.budget if axis == "budget" else inst.nodes[0].capacity
                below.append(f"{axis}={key:g}:{pct['rp-mca']:.2f}<{pct['rp-gca']:.2f}")
            prev = pct
    elapsed = time.perf_counter() - t0
    ok = not drops and not below and elapsed < 60
    report(9, ok, f"nondecreasing: {len(drops)} drops; RP-MCA >= RP-GCA fails at {len(below)} of 19 points"
                  f"{' (' + ', '.join(below[:3]) + ', ...)' if below else ''}; {elapsed:.1f}s < 60s")
    assert not drops
    assert not below
    assert elapsed < 60


# --- 10 ------------------------------------------------------------------------

def test_c10_scale(report):
    inst = generate_random(65, 1869, 8, (1, 30), (1000, 1000), (100, 100), 0.5, seed=10).with_budget(2000)
    config = PlacementConfig()
    g, tg = run_algo(inst, "rp-gca", config)
    m, tm = run_algo(inst, "rp-mca", config)
    ok = tg < 10 and tm < 60
    report(10, ok, f"V=65 F=1869 budget 2000 ({kernels.BACKEND} kernel): RP-GCA {tg:.2f}s < 10s "
                   f"({100 * g.objective / inst.total_rate:.1f}%), RP-MCA {tm:.2f}s < 60s "
                   f"({100 * m.objective / inst.total_rate:.1f}%)")
    assert ok


# --- 11 ------------------------------------------------------------------------

def test_c11_server_expansion(report):
    rng = random.Random(11)
    identity_bad = 0
    for _ in range(50):
        inst = _instance(rng, 4, 6, uniform_cost=False)
        same = expand_servers(inst, [(1, n.cost, n.capacity) for n in inst.nodes])
        if abs(exact_vpca(same).objective - exact_vpca(inst).objective) > 1e-9:
            identity_bad += 1
    split_bad = 0
    for _ in range(20):
        inst = _instance(rng, 3, 6, min_nodes=3)
        inst = Instance([Node(n.id, n.cost, max(n.capacity, 2 * max((f.rate for f in inst.flows), default=0)), n.name)
                         for n in inst.nodes], inst.flows, inst.budget)
        halves = expand_servers(inst, [(2, n.cost / 2, n.capacity / 2) for n in inst.nodes])
        if exact_vpca(halves).objective < exact_vpca(inst).objective - 1e-9:
            split_bad += 1
    t = triangle_instance(1).with_uniform_capacity(4)
    tri_split = exact_vpca(expand_servers(t, [(2, 0.5, 2)] * 3)).objective
    tri = exact_vpca(t).objective
    ok = identity_bad == 0 and split_bad == 0 and tri_split >= tri
    report(11, ok, f"identity expansion changed the optimum on {identity_bad} of 50; two servers per node "
                   f"below the original on {split_bad} of 20 (triangle: {tri_split:g} >= {tri:g})")
    assert ok
