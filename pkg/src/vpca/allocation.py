"""Capacity allocation for a fixed node set: only fully processed flows count.

``mca`` rounds a forest-support optimal fractional allocation; ``gca`` packs
flows greedily in nonincreasing rate order. Both finish with a splitting pass
that places leftover flows across the remaining capacity on their paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

from .model import EPS_CAP, Assignment, Instance, Placement, Solution, flows_covered
from .netflow import _check_sinks, extract_basic_assignment, oracle_for


class AllocationInvariantError(RuntimeError):
    """An internal invariant of a rounding algorithm was breached (a bug, not bad input)."""


@dataclass
class RoundingTrace:
    """Counters and checks collected during one MCA run."""

    relaxed_value: float = 0.0
    phase1_value: float = 0.0
    step1_runs: int = 0
    step1_bound_exceeded: int = 0
    step2_runs: int = 0
    max_load_drift: float = 0.0
    max_flow_drift: float = 0.0
    max_total_drift: float = 0.0
    min_edges_removed: int | None = None
    forest_checks: int = 0
    events: list[str] = field(default_factory=list)


@dataclass
class GreedyTrace:
    assumption1: bool = False
    phase1_unassigned: list[int] = field(default_factory=list)
    unassigned: list[int] = field(default_factory=list)
    half_load_violations: int = 0
    pair_load_violations: int = 0
    pairs_checked: int = 0


def _solution(instance: Instance, selected: frozenset[int], full: dict[int, dict[int, float]]) -> Solution:
    entries = {(f, v): x for f, parts in full.items() for v, x in parts.items()}
    assignment = Assignment(entries)
    placement = Placement.of(instance, sorted(selected))
    objective, fully = evaluate_j1(instance, selected, assignment)
    if fully != set(full):
        raise AllocationInvariantError(f"flows {sorted(set(full) ^ fully)} not exactly processed")
    return Solution(placement, assignment, frozenset(fully), objective)


def _split_pass(instance, order, selected, remaining, full):
    """Place each still-unassigned flow across its selected nodes if they can hold it."""
    for f in order:
        if f in full:
            continue
        flow = instance.flows[f]
        nodes = sorted(v for v in flow.path if v in selected)
        if math.fsum(remaining[v] for v in nodes) < flow.rate - EPS_CAP:
            continue
        need = flow.rate
        parts = {}
        for v in nodes:
            if need <= 0.0:
                break
            take = min(remaining[v], need)
            if take <= 0.0:
                continue
            parts[v] = take
            remaining[v] -= take
            need -= take
        if need > 0.0:
            # float residue below EPS_CAP goes onto the last node used
            last = max(parts)
            parts[last] += need
            remaining[last] -= need
        full[f] = parts


def assumption1_holds(instance: Instance, selected: Iterable[int]) -> bool:
    """Uniform capacities on the selected nodes and every covered flow sees two of them."""
    sel = set(selected)
    if not sel:
        return False
    caps = [instance.nodes[v].capacity for v in sel]
    if max(caps) - min(caps) > EPS_CAP:
        return False
    for f in flows_covered(instance, sel):
        if len(sel.intersection(instance.flows[f].path)) < 2:
            return False
    return True


# --- GCA -----------------------------------------------------------------------

def gca(instance: Instance, selected: Iterable[int], trace: GreedyTrace | None = None) -> Solution:
    """Greedy allocation: largest flows first, each onto one node with room, then split leftovers."""
    sel = _check_sinks(instance, selected)
    trace = trace if trace is not None else GreedyTrace()
    order = sorted(flows_covered(instance, sel), key=lambda f: (-instance.flows[f].rate, f))
    remaining = {v: instance.nodes[v].capacity for v in sel}
    full: dict[int, dict[int, float]] = {}

    for f in order:
        rate = instance.flows[f].rate
        for v in sorted(u for u in instance.flows[f].path if u in sel):
            if remaining[v] >= rate - EPS_CAP:
                full[f] = {v: rate}
                remaining[v] -= rate
                break

    phase1_load = {v: instance.nodes[v].capacity - remaining[v] for v in sel}
    trace.phase1_unassigned = [f for f in order if f not in full]
    for f in trace.phase1_unassigned:
        for u in instance.flows[f].path:
            if u in sel and phase1_load[u] < 0.5 * instance.nodes[u].capacity - EPS_CAP:
                trace.half_load_violations += 1

    _split_pass(instance, order, sel, remaining, full)

    trace.unassigned = [f for f in order if f not in full]
    trace.assumption1 = assumption1_holds(instance, sel)
    if trace.assumption1:
        load = {v: instance.nodes[v].capacity - remaining[v] for v in sel}
        for f in trace.unassigned:
            nodes = sorted(u for u in instance.flows[f].path if u in sel)
            for i, u in enumerate(nodes):
                for w in nodes[i + 1:]:
                    trace.pairs_checked += 1
                    cap = instance.nodes[u].capacity + instance.nodes[w].capacity
                    if load[u] + load[w] < 2.0 / 3.0 * cap - EPS_CAP:
                        trace.pair_load_violations += 1
    if trace.half_load_violations or trace.pair_load_violations:
        raise AllocationInvariantError(
            f"greedy load bounds broken: {trace.half_load_violations} half-load, "
            f"{trace.pair_load_violations} pair-load violations"
        )
    return _solution(instance, sel, full)


# --- MCA -----------------------------------------------------------------------

class _Rounding:
    """Mutable Phase-I state: rates x, temporary full assignments and the support forest."""

    def __init__(self, instance: Instance, selected: frozenset[int], x: dict, trace: RoundingTrace, check: bool):
        self.inst = instance
        self.sel = selected
        self.rate = [f.rate for f in instance.flows]
        self.trace = trace
        self.check = check
        self.x = x
        self.assigned: dict[int, int] = {}
        self.full_load = {v: 0.0 for v in selected}
        self.f_adj: dict[int, set[int]] = {}
        self.v_adj: dict[int, set[int]] = {}
        for (f, v), val in sorted(x.items()):
            if val >= self.rate[f]:
                self.assigned[f] = v
                self.full_load[v] += self.rate[f]
            else:
                self.f_adj.setdefault(f, set()).add(v)
                self.v_adj.setdefault(v, set()).add(f)

    # support bookkeeping
    def num_edges(self) -> int:
        return sum(len(s) for s in self.v_adj.values())

    def drop_edge(self, f: int, v: int) -> None:
        self.f_adj[f].discard(v)
        self.v_adj[v].discard(f)
        if not self.f_adj[f]:
            del self.f_adj[f]
        if not self.v_adj[v]:
            del self.v_adj[v]

    def drop_flow(self, f: int) -> None:
        for v in list(self.f_adj.get(f, ())):
            self.x[(f, v)] = 0.0
            self.drop_edge(f, v)

    def assign(self, f: int, v: int) -> None:
        """Make v carry all of f, cancelling f's other fractions."""
        for u in list(self.f_adj.get(f, ())):
            if u != v:
                self.x[(f, u)] = 0.0
            self.drop_edge(f, u)
        self.x[(f, v)] = self.rate[f]
        self.assigned[f] = v
        self.full_load[v] += self.rate[f]

    def loads(self) -> dict[int, float]:
        out = {v: 0.0 for v in self.sel}
        for (f, v), val in self.x.items():
            out[v] += val
        return out

    def totals(self) -> dict[int, float]:
        out: dict[int, float] = {}
        for (f, v), val in self.x.items():
            out[f] = out.get(f, 0.0) + val
        return out

    def assert_forest(self) -> None:
        parent: dict[tuple[str, int], tuple[str, int]] = {}

        def find(a):
            while parent.setdefault(a, a) != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for v, flows in self.v_adj.items():
            for f in flows:
                ra, rb = find(("v", v)), find(("f", f))
                if ra == rb:
                    raise AllocationInvariantError(f"fractional support has a cycle through node {v}")
                parent[ra] = rb
        self.trace.forest_checks += 1

    # Step 1
    def singleton_round(self, v: int) -> None:
        (f,) = self.v_adj[v]
        part = self.x[(f, v)]
        held = self.full_load[v]
        r_v = held + part
        self.trace.step1_runs += 1
        if held >= part:
            loss = part
            self.x[(f, v)] = 0.0
            self.drop_edge(f, v)
        else:
            loss = held
            for g in [g for g, u in self.assigned.items() if u == v]:
                del self.assigned[g]
                self.x[(g, v)] = 0.0
            self.full_load[v] = 0.0
            self.assign(f, v)
        if loss > 0.5 * r_v + EPS_CAP:
            self.trace.step1_bound_exceeded += 1
            self.trace.events.append(f"step1 at node {v}: loss {loss!r} > half of {r_v!r}")
        self.v_adj.pop(v, None)

    # Step 2
    def longest_path(self, start_v: int, first_f: int) -> list[tuple[int, int]]:
        """Longest alternating path v1 - f - v - f ... leaving start_v through first_f."""
        best: list[tuple[int, int]] = []

        def walk(f, came_from, acc):
            nonlocal best
            acc.append((f, came_from))
            extended = False
            for v in sorted(self.f_adj[f]):
                if v == came_from:
                    continue
                for g in sorted(self.v_adj[v]):
                    if g == f:
                        continue
                    acc.append((f, v))
                    walk(g, v, acc)
                    acc.pop()
                    extended = True
            if not extended and len(acc) > len(best):
                best = list(acc)
            acc.pop()

        walk(first_f, start_v, [])
        return best

    def perturb(self) -> None:
        v1 = min(v for v, fl in self.v_adj.items() if len(fl) >= 2)
        fa, fb = sorted(self.v_adj[v1])[:2]
        p1 = self.longest_path(v1, fa)
        p2 = self.longest_path(v1, fb)
        # rates move by +d/-d alternately along p1 and -d/+d along p2
        signed = [(e, +1 if i % 2 == 0 else -1) for i, e in enumerate(p1)]
        signed += [(e, -1 if i % 2 == 0 else +1) for i, e in enumerate(p2)]
        delta = math.inf
        for (f, v), sign in signed:
            slack = self.rate[f] - self.x[(f, v)] if sign > 0 else self.x[(f, v)]
            delta = min(delta, slack)
        if not delta > 0.0:
            raise AllocationInvariantError(f"degenerate perturbation at node {v1}")

        edges_before = self.num_edges()
        if self.check:
            loads0, totals0 = self.loads(), self.totals()
        for (f, v), sign in signed:
            val = self.x[(f, v)] + sign * delta
            if val <= EPS_CAP * self.rate[f]:
                val = 0.0
            elif val >= self.rate[f] * (1 - EPS_CAP):
                val = self.rate[f]
            self.x[(f, v)] = val
        if self.check:
            self._check_conservation(loads0, totals0, {p1[-1][0], p2[-1][0]})

        hit_one = []
        for (f, v), _ in signed:
            val = self.x[(f, v)]
            if val == 0.0:
                self.drop_edge(f, v)
            elif val == self.rate[f]:
                hit_one.append((f, v))
        for f, v in hit_one:
            self.assign(f, v)
        removed = edges_before - self.num_edges()
        self.trace.step2_runs += 1
        if self.trace.min_edges_removed is None or removed < self.trace.min_edges_removed:
            self.trace.min_edges_removed = removed
        if removed < 1:
            raise AllocationInvariantError("perturbation removed no support edge")

    def _check_conservation(self, loads0, totals0, endpoints) -> None:
        loads1, totals1 = self.loads(), self.totals()
        t = self.trace
        for v in loads0:
            t.max_load_drift = max(t.max_load_drift, abs(loads1[v] - loads0[v]))
        for f in set(totals0) | set(totals1):
            if f in endpoints:
                continue
            t.max_flow_drift = max(t.max_flow_drift, abs(totals1.get(f, 0.0) - totals0.get(f, 0.0)))
        drift = abs(math.fsum(totals1.values()) - math.fsum(totals0.values()))
        t.max_total_drift = max(t.max_total_drift, drift)
        scale = max([1.0, *self.rate])
        if max(t.max_load_drift, t.max_flow_drift, t.max_total_drift) > EPS_CAP * scale:
            raise AllocationInvariantError("perturbation changed a node load or flow total")

    def run(self) -> None:
        if self.check:
            self.assert_forest()
        while self.v_adj:
            while True:
                singles = [v for v, fl in self.v_adj.items() if len(fl) == 1]
                if not singles:
                    break
                self.singleton_round(min(singles))
                if self.check:
                    self.assert_forest()
            if self.v_adj:
                self.perturb()
                if self.check:
                    self.assert_forest()
        for f in list(self.f_adj):
            self.drop_flow(f)


def mca(
    instance: Instance, selected: Iterable[int], trace: RoundingTrace | None = None, check: bool = False
) -> Solution:
    """Round an optimal forest-support fractional allocation, then split leftovers.

    ``check=True`` verifies acyclicity after every rounding step and that each
    perturbation conserves loads and totals (quadratic overhead; for tests).
    """
    sel = _check_sinks(instance, selected)
    trace = trace if trace is not None else RoundingTrace()
    oracle = oracle_for(instance)
    value, flow = oracle.solve(sel)
    trace.relaxed_value = value
    basic = extract_basic_assignment(instance, sel, flow, oracle.network)
    state = _Rounding(instance, sel, dict(basic.entries), trace, check)
    state.run()

    full = {f: {v: instance.flows[f].rate} for f, v in state.assigned.items()}
    trace.phase1_value = math.fsum(instance.flows[f].rate for f in full)
    if trace.phase1_value < 0.5 * value - EPS_CAP * max(1.0, value):
        raise AllocationInvariantError(
            f"rounding kept {trace.phase1_value!r}, below half the relaxed optimum {value!r}"
        )
    remaining = {v: instance.nodes[v].capacity - state.full_load[v] for v in sel}
    for v, left in remaining.items():
        if left < -EPS_CAP:
            raise AllocationInvariantError(f"node {v} over capacity after rounding ({left!r} left)")
    _split_pass(instance, sorted(flows_covered(instance, sel)), sel, remaining, full)
    return _solution(instance, sel, full)


# --- objective evaluation ---------------------------------------------------------

def evaluate_j1(instance: Instance, selected: Iterable[int], assignment: Assignment) -> tuple[float, set[int]]:
    """Traffic of fully processed flows, and their ids."""
    sel = _check_sinks(instance, selected)
    assignment.check(instance, sel)
    fully = set()
    for f, total in assignment.flow_totals().items():
        if total >= instance.flows[f].rate - EPS_CAP:
            fully.add(f)
    return math.fsum(instance.flows[f].rate for f in fully), fully


def evaluate_r1(instance: Instance, selected: Iterable[int], assignment: Assignment) -> float:
    """Traffic processed when partial flows count too."""
    sel = _check_sinks(instance, selected)
    assignment.check(instance, sel)
    return math.fsum(x for (f, v), x in assignment.entries.items() if v in sel)
