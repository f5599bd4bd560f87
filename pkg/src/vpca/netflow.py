"""Auxiliary flow network, relaxed allocation value and basic assignments.

The network has a source ``s``, one vertex per flow, and two vertices per node
(``v'`` and the sink ``v``). Edges are ``s -> f`` (capacity = rate),
``f -> v'`` for every node on the flow's path (capacity = rate) and
``v' -> v`` (capacity = node capacity). The maximum flow into the sinks of a
node set equals the best fractional allocation onto that set.
"""

from __future__ import annotations

import threading
from collections import OrderedDict, deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .model import EPS_CAP, Assignment, Instance, InstanceError

L1, L2, L3 = 1, 2, 3


@dataclass(frozen=True)
class FlowNetwork:
    instance: Instance
    tails: tuple[int, ...]
    heads: tuple[int, ...]
    caps: tuple[float, ...]
    kinds: tuple[int, ...]
    flow: tuple[float, ...]

    @property
    def num_vertices(self) -> int:
        return 1 + self.instance.num_flows + 2 * self.instance.num_nodes

    @property
    def num_edges(self) -> int:
        return len(self.tails)

    # vertex numbering: s, flows, primed nodes, sink nodes
    source = 0

    def flow_vertex(self, f: int) -> int:
        return 1 + f

    def primed_vertex(self, v: int) -> int:
        return 1 + self.instance.num_flows + v

    def sink_vertex(self, v: int) -> int:
        return 1 + self.instance.num_flows + self.instance.num_nodes + v

    def l1_edge(self, f: int) -> int:
        return f

    def l3_edge(self, v: int) -> int:
        return self.num_edges - self.instance.num_nodes + v

    @cached_property
    def arrays(self):
        """(flow of each f->v' edge, node of each f->v' edge, flow rates, node capacities) as arrays."""
        F, V = self.instance.num_flows, self.instance.num_nodes
        lo, hi = F, self.num_edges - V
        tails = np.asarray(self.tails[lo:hi], dtype=np.int64)
        heads = np.asarray(self.heads[lo:hi], dtype=np.int64)
        caps = np.asarray(self.caps, dtype=np.float64)
        return tails - 1, heads - 1 - F, caps[:F], caps[hi:]

    @cached_property
    def l2_index(self) -> dict[tuple[int, int], int]:
        return self.l2_edges()

    def l2_edges(self) -> dict[tuple[int, int], int]:
        F = self.instance.num_flows
        out = {}
        for e in range(F, self.num_edges - self.instance.num_nodes):
            out[(self.tails[e] - 1, self.heads[e] - 1 - F)] = e
        return out

    def vertex_name(self, x: int) -> str:
        F, V = self.instance.num_flows, self.instance.num_nodes
        if x == 0:
            return "s"
        if x <= F:
            return f"f{x - 1}"
        if x <= F + V:
            return f"n{x - 1 - F}'"
        return f"n{x - 1 - F - V}"

    def with_flow(self, flow: Sequence[float]) -> "FlowNetwork":
        if len(flow) != self.num_edges:
            raise ValueError("flow must have one value per edge")
        return FlowNetwork(self.instance, self.tails, self.heads, self.caps, self.kinds, tuple(flow))

    def to_dot(self) -> str:
        lines = ["digraph Z {", "  rankdir=LR;"]
        for t, h, c in zip(self.tails, self.heads, self.caps):
            lines.append(f'  "{self.vertex_name(t)}" -> "{self.vertex_name(h)}" [label="{c:g}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_network(instance: Instance) -> FlowNetwork:
    F, V = instance.num_flows, instance.num_nodes
    tails, heads, caps, kinds = [], [], [], []
    for f in instance.flows:
        tails.append(0)
        heads.append(1 + f.id)
        caps.append(f.rate)
        kinds.append(L1)
    for f in instance.flows:
        for v in f.path:
            tails.append(1 + f.id)
            heads.append(1 + F + v)
            caps.append(f.rate)
            kinds.append(L2)
    for n in instance.nodes:
        tails.append(1 + F + n.id)
        heads.append(1 + F + V + n.id)
        caps.append(n.capacity)
        kinds.append(L3)
    m = len(tails)
    return FlowNetwork(instance, tuple(tails), tuple(heads), tuple(caps), tuple(kinds), (0.0,) * m)


def _check_sinks(instance: Instance, sinks: Iterable[int]) -> frozenset[int]:
    sel = frozenset(sinks)
    for v in sel:
        if not 0 <= v < instance.num_nodes:
            raise InstanceError(f"unknown node id {v}")
    return sel


def max_net_flow(network: FlowNetwork, sinks: Iterable[int], kernel=None) -> tuple[float, tuple[float, ...]]:
    """Maximum total flow into the sink vertices of ``sinks``.

    Only the part of the network that can reach the selected sinks is handed to
    the kernel; every selected sink is joined to an artificial super-sink.
    Returns the value and a flow on all edges of ``network``.
    """
    inst = network.instance
    sel = _check_sinks(inst, sinks)
    kernel = kernel or kernels.push_relabel
    F, V = inst.num_flows, inst.num_nodes
    if not sel or not F:
        return 0.0, (0.0,) * network.num_edges
    l2_flow, l2_node, rates, node_caps = network.arrays
    mask = np.zeros(V, dtype=bool)
    mask[list(sel)] = True
    keep = mask[l2_node]
    ef, ev = l2_flow[keep], l2_node[keep]
    covered = np.unique(ef)
    if not covered.size:
        return 0.0, (0.0,) * network.num_edges

    # compact vertices: 0 = s, covered flows, selected v', selected v, super-sink
    nodes = np.flatnonzero(mask)
    nc, k = covered.size, nodes.size
    fpos = np.zeros(F, dtype=np.int64)
    fpos[covered] = 1 + np.arange(nc)
    vpos = np.zeros(V, dtype=np.int64)
    vpos[nodes] = 1 + nc + np.arange(k)
    d = 1 + nc + 2 * k
    tails = np.concatenate([np.zeros(nc, dtype=np.int64), fpos[ef], vpos[nodes], vpos[nodes] + k])
    heads = np.concatenate([fpos[covered], vpos[ev], vpos[nodes] + k, np.full(k, d, dtype=np.int64)])
    caps = np.concatenate([rates[covered], rates[ef], node_caps[nodes], node_caps[nodes]])
    back = np.concatenate([covered, F + np.flatnonzero(keep), network.num_edges - V + nodes])
    value, sub = kernel(d + 1, tails, heads, caps, 0, d)
    flow = np.zeros(network.num_edges)
    flow[back] = np.asarray(sub, dtype=np.float64)[: back.size]
    return float(value), tuple(flow.tolist())


def augmenting_path_max_flow(n, tails, heads, caps, source, sink):
    """Shortest augmenting paths (Edmonds-Karp); independent check on push-relabel."""
    m = len(tails)
    adj: list[list[int]] = [[] for _ in range(n)]
    res = []
    to = []
    for e in range(m):
        adj[tails[e]].append(2 * e)
        adj[heads[e]].append(2 * e + 1)
        res += [float(caps[e]), 0.0]
        to += [heads[e], tails[e]]
    tol = 1e-14 * max([1.0, *caps])
    value = 0.0
    while True:
        prev = [-1] * n
        prev[source] = -2
        q = deque([source])
        while q and prev[sink] == -1:
            u = q.popleft()
            for a in adj[u]:
                if res[a] > tol and prev[to[a]] == -1:
                    prev[to[a]] = a
                    q.append(to[a])
        if prev[sink] == -1:
            break
        delta = float("inf")
        v = sink
        while v != source:
            a = prev[v]
            delta = min(delta, res[a])
            v = to[a ^ 1]
        v = sink
        while v != source:
            a = prev[v]
            res[a] -= delta
            res[a ^ 1] += delta
            v = to[a ^ 1]
        value += delta
    flow = [max(0.0, caps[e] - res[2 * e]) for e in range(m)]
    return value, flow


class R3Oracle:
    """Memoizing evaluator of the relaxed allocation value of node sets.

    One oracle per instance. The memo is keyed by the node-set bitmask and
    filled with insert-if-absent semantics, so concurrent callers agree.
    """

    def __init__(self, instance: Instance, kernel=None):
        self.instance = instance
        self.network = build_network(instance)
        self.kernel = kernel
        self._memo: dict[int, float] = {}
        self._lock = threading.Lock()
        self.evaluations = 0
        self.hits = 0

    def key(self, selected: Iterable[int]) -> int:
        mask = 0
        for v in _check_sinks(self.instance, selected):
            mask |= 1 << v
        return mask

    def __call__(self, selected: Iterable[int]) -> float:
        sel = _check_sinks(self.instance, selected)
        mask = 0
        for v in sel:
            mask |= 1 << v
        hit = self._memo.get(mask)
        if hit is not None:
            self.hits += 1
            return hit
        value, _ = max_net_flow(self.network, sel, self.kernel)
        with self._lock:
            self.evaluations += 1
            return self._memo.setdefault(mask, value)

    def solve(self, selected: Iterable[int]) -> tuple[float, tuple[float, ...]]:
        """Value and an optimal flow on the full network (not memoized)."""
        return max_net_flow(self.network, selected, self.kernel)


_ORACLES: OrderedDict[int, tuple[Instance, R3Oracle]] = OrderedDict()
_ORACLE_SLOTS = 16
_ORACLES_LOCK = threading.Lock()


def oracle_for(instance: Instance) -> R3Oracle:
    """Shared evaluation context for ``instance`` (the most recent few instances are kept)."""
    key = id(instance)
    with _ORACLES_LOCK:
        entry = _ORACLES.get(key)
        if entry is not None and entry[0] is instance:
            _ORACLES.move_to_end(key)
            return entry[1]
        oracle = R3Oracle(instance)
        _ORACLES[key] = (instance, oracle)
        while len(_ORACLES) > _ORACLE_SLOTS:
            _ORACLES.popitem(last=False)
        return oracle


def r3(instance: Instance, selected: Iterable[int]) -> float:
    """Best fractional (partially counted) processed traffic on ``selected``."""
    return oracle_for(instance)(selected)


# --- basic (forest-support) assignments ----------------------------------------

def _snap(x: float, rate: float) -> float:
    if x <= EPS_CAP * rate:
        return 0.0
    if x >= rate - EPS_CAP * rate:
        return rate
    return x


def check_sv_flow(network: FlowNetwork, flow: Sequence[float], tol: float = EPS_CAP) -> None:
    """Raise ValueError unless ``flow`` is a valid s-sinks flow on ``network``."""
    if len(flow) != network.num_edges:
        raise ValueError("flow must have one value per edge")
    n = network.num_vertices
    net = [0.0] * n
    for e, x in enumerate(flow):
        if x < -tol or x > network.caps[e] + tol:
            raise ValueError(
                f"edge {network.vertex_name(network.tails[e])}->{network.vertex_name(network.heads[e])} "
                f"carries {x!r} outside [0, {network.caps[e]!r}]"
            )
        net[network.tails[e]] -= x
        net[network.heads[e]] += x
    F, V = network.instance.num_flows, network.instance.num_nodes
    scale = max([1.0, *network.caps])
    for x in range(1, 1 + F + V):
        if abs(net[x]) > tol * scale:
            raise ValueError(f"flow not conserved at {network.vertex_name(x)} (net {net[x]!r})")
    if net[0] > tol:
        raise ValueError("positive net flow at the source")


def extract_basic_assignment(
    instance: Instance, selected: Iterable[int], flow: Sequence[float], network: FlowNetwork | None = None
) -> Assignment:
    """Turn an optimal flow into an assignment whose fractional support is a forest.

    Fractional edges are added one at a time to a forest. When an edge closes a
    cycle, an alternating +/- delta is pushed around the cycle until some edge
    reaches 0 or its flow's full rate; node loads and flow totals are unchanged.
    """
    sel = _check_sinks(instance, selected)
    network = network or build_network(instance)
    check_sv_flow(network, flow)
    x: dict[tuple[int, int], float] = {}
    for (f, v), e in network.l2_index.items():
        if v in sel and flow[e] > 0.0:
            val = _snap(flow[e], instance.flows[f].rate)
            if val > 0.0:
                x[(f, v)] = val
    cancel_cycles(instance, x)
    return Assignment(x)


def cancel_cycles(instance: Instance, x: dict[tuple[int, int], float]) -> int:
    """In-place cycle canceling on the fractional support of ``x``; returns cycles canceled."""
    F = instance.num_flows
    rates = [f.rate for f in instance.flows]
    adj: dict[int, set[int]] = {}

    def fractional(f, v):
        val = x.get((f, v), 0.0)
        return 0.0 < val < rates[f]

    def path_between(a, b):
        prev = {a: a}
        q = deque([a])
        while q:
            u = q.popleft()
            if u == b:
                break
            for w in adj.get(u, ()):
                if w not in prev:
                    prev[w] = u
                    q.append(w)
        if b not in prev:
            return None
        path = [b]
        while path[-1] != a:
            path.append(prev[path[-1]])
        return path[::-1]

    def edge_of(a, b):
        return (a, b - F) if a < F else (b, a - F)

    canceled = 0
    for (f, v) in sorted(x):
        if not fractional(f, v):
            continue
        fv, vv = f, F + v
        path = path_between(vv, fv)
        if path is not None:
            # cycle: (f,v) then v ... f along the forest; signs alternate from +
            cycle = [(f, v)] + [edge_of(path[i], path[i + 1]) for i in range(len(path) - 1)]
            delta = float("inf")
            for i, e in enumerate(cycle):
                slack = rates[e[0]] - x[e] if i % 2 == 0 else x[e]
                delta = min(delta, slack)
            for i, e in enumerate(cycle):
                val = x[e] + delta if i % 2 == 0 else x[e] - delta
                x[e] = _snap(val, rates[e[0]])
            for e in cycle[1:]:
                if not fractional(*e):
                    a, b = e[0], F + e[1]
                    adj[a].discard(b)
                    adj[b].discard(a)
            canceled += 1
            if not fractional(f, v):
                continue
            if path_between(vv, fv) is not None:
                raise AssertionError("cycle canceling left a cycle")
        adj.setdefault(fv, set()).add(vv)
        adj.setdefault(vv, set()).add(fv)
    for k in [k for k, val in x.items() if val == 0.0]:
        del x[k]
    return canceled


def fractional_support(instance: Instance, assignment: Assignment) -> list[tuple[int, int]]:
    """(flow, node) pairs with 0 < y < 1 after snapping."""
    out = []
    for (f, v), val in sorted(assignment.entries.items()):
        rate = instance.flows[f].rate
        y = val / rate
        if EPS_CAP < y < 1 - EPS_CAP:
            out.append((f, v))
    return out
