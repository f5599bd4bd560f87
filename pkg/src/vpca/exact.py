"""Exponential-time exact solvers for small instances, used as ground truth."""

from __future__ import annotations

import itertools
import math
from typing import Iterable, Sequence

from . import kernels
from .model import EPS_CAP, Assignment, Instance, Placement, Solution, flows_covered
from .netflow import _check_sinks, oracle_for

FLOW_LIMIT = 20
NODE_LIMIT = 12


class LimitExceeded(RuntimeError):
    """Instance too large for exhaustive search."""


def _full_flow(instance: Instance, sel, flow_subset: Sequence[int], kernel=None):
    """Max-flow s -> flows -> selected nodes -> d; returns (value, {(f, v): x})."""
    kernel = kernel or kernels.push_relabel
    nodes = sorted(sel)
    fpos = {f: 1 + i for i, f in enumerate(flow_subset)}
    vpos = {v: 1 + len(flow_subset) + i for i, v in enumerate(nodes)}
    d = 1 + len(flow_subset) + len(nodes)
    tails, heads, caps, pairs = [], [], [], []
    for f in flow_subset:
        tails.append(0)
        heads.append(fpos[f])
        caps.append(instance.flows[f].rate)
        pairs.append(None)
        for v in instance.flows[f].path:
            if v in vpos:
                tails.append(fpos[f])
                heads.append(vpos[v])
                caps.append(instance.flows[f].rate)
                pairs.append((f, v))
    for v in nodes:
        tails.append(vpos[v])
        heads.append(d)
        caps.append(instance.nodes[v].capacity)
        pairs.append(None)
    if not flow_subset or not nodes:
        return 0.0, {}
    value, flow = kernel(d + 1, tails, heads, caps, 0, d)
    x = {p: float(val) for p, val in zip(pairs, flow) if p is not None and val > 0.0}
    return float(value), x


def feasible_full_set(instance: Instance, selected: Iterable[int], flow_subset: Iterable[int]) -> bool:
    """Can every flow in ``flow_subset`` be processed completely on ``selected``?"""
    sel = _check_sinks(instance, selected)
    subset = sorted(set(flow_subset))
    demand = math.fsum(instance.flows[f].rate for f in subset)
    if not subset:
        return True
    value, _ = _full_flow(instance, sel, subset)
    return value >= demand - EPS_CAP


def exact_allocation(
    instance: Instance, selected: Iterable[int], limit: int = FLOW_LIMIT, prune: bool = True
) -> Solution:
    """Largest total rate of a flow set that fits completely on ``selected``.

    Branch and bound over flows in decreasing rate order. ``prune=False``
    enumerates every subset instead (slow; for cross-checking).
    """
    sel = _check_sinks(instance, selected)
    covered = sorted(flows_covered(instance, sel), key=lambda f: (-instance.flows[f].rate, f))
    if len(covered) > limit:
        raise LimitExceeded(f"{len(covered)} covered flows exceed the exact limit {limit}")
    rates = [instance.flows[f].rate for f in covered]

    def fits(chosen):
        return feasible_full_set(instance, sel, [covered[i] for i in chosen])

    best: list[int] = []
    best_value = 0.0
    if not prune:
        for mask in range(1 << len(covered)):
            chosen = [i for i in range(len(covered)) if mask >> i & 1]
            value = math.fsum(rates[i] for i in chosen)
            if value > best_value + EPS_CAP and fits(chosen):
                best, best_value = chosen, value
    else:
        suffix = [0.0] * (len(covered) + 1)
        for i in range(len(covered) - 1, -1, -1):
            suffix[i] = suffix[i + 1] + rates[i]
        infeasible: list[int] = []
        chosen: list[int] = []

        def search(i: int, mask: int, value: float) -> None:
            nonlocal best, best_value
            if value > best_value + EPS_CAP:
                best, best_value = list(chosen), value
            if i == len(covered) or value + suffix[i] <= best_value + EPS_CAP:
                return
            grown = mask | 1 << i
            if not any(bad & grown == bad for bad in infeasible):
                chosen.append(i)
                if fits(chosen):
                    search(i + 1, grown, value + rates[i])
                else:
                    infeasible.append(grown)
                chosen.pop()
            search(i + 1, mask, value)

        search(0, 0, 0.0)

    flow_ids = [covered[i] for i in best]
    _, x = _full_flow(instance, sel, sorted(flow_ids))
    assignment = Assignment(x)
    return Solution(Placement.of(instance, sorted(sel)), assignment, frozenset(flow_ids), math.fsum(
        instance.flows[f].rate for f in flow_ids))


def exact_vpca(instance: Instance, node_limit: int = NODE_LIMIT, flow_limit: int = FLOW_LIMIT) -> Solution:
    """Best budget-feasible node set under exact allocation; lowest sorted tuple wins ties."""
    V = instance.num_nodes
    if V > node_limit:
        raise LimitExceeded(f"{V} nodes exceed the exact limit {node_limit}")
    oracle = oracle_for(instance)
    candidates = []
    for size in range(V + 1):
        for combo in itertools.combinations(range(V), size):
            if instance.cost_of(combo) <= instance.budget + EPS_CAP:
                candidates.append((oracle(combo), combo))
    # the relaxed value bounds the exact one, so the scan can stop once it falls behind
    candidates.sort(key=lambda item: (-item[0], item[1]))
    results: list[tuple[tuple[int, ...], Solution]] = []
    incumbent = 0.0
    for bound, combo in candidates:
        if bound < incumbent - EPS_CAP:
            break
        sol = exact_allocation(instance, combo, flow_limit)
        results.append((combo, sol))
        incumbent = max(incumbent, sol.objective)
    if not results:
        return Solution(Placement.of(instance, ()), Assignment({}), frozenset(), 0.0)
    tied = [(combo, sol) for combo, sol in results if sol.objective >= incumbent - EPS_CAP]
    return min(tied, key=lambda item: item[0])[1]
