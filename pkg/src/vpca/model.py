"""Domain types, the instance text format, random instances and server expansion."""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

EPS_CAP = 1e-9


class InstanceError(ValueError):
    """Semantic problem with an instance (bad ids, violated invariants)."""


class ParseError(InstanceError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Node:
    id: int
    cost: float
    capacity: float
    name: str = ""

    def __post_init__(self):
        if self.id < 0:
            raise InstanceError(f"node id {self.id} is negative")
        if not self.cost >= 0:
            raise InstanceError(f"node {self.label}: cost {self.cost} < 0")
        if not self.capacity >= 0:
            raise InstanceError(f"node {self.label}: capacity {self.capacity} < 0")

    @property
    def label(self) -> str:
        return self.name or f"n{self.id}"


@dataclass(frozen=True)
class Flow:
    id: int
    rate: float
    path: tuple[int, ...]
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "path", tuple(self.path))
        if self.id < 0:
            raise InstanceError(f"flow id {self.id} is negative")
        if not self.rate > 0:
            raise InstanceError(f"flow {self.label}: rate must be > 0, got {self.rate}")
        if not self.path:
            raise InstanceError(f"flow {self.label}: empty path")
        if len(set(self.path)) != len(self.path):
            raise InstanceError(f"flow {self.label}: path repeats a node")

    @property
    def label(self) -> str:
        return self.name or f"f{self.id}"


@dataclass(frozen=True)
class Instance:
    """A network (nodes with cost/capacity), flows on fixed paths and a budget.

    Node and flow ids are dense: ``nodes[i].id == i`` and ``flows[j].id == j``.
    """

    nodes: tuple[Node, ...]
    flows: tuple[Flow, ...]
    budget: float

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "flows", tuple(self.flows))
        if not self.budget >= 0:
            raise InstanceError(f"budget must be >= 0, got {self.budget}")
        for i, node in enumerate(self.nodes):
            if node.id != i:
                raise InstanceError(f"node ids must be dense 0..V-1; position {i} has id {node.id}")
        for j, flow in enumerate(self.flows):
            if flow.id != j:
                raise InstanceError(f"flow ids must be dense 0..F-1; position {j} has id {flow.id}")
            for v in flow.path:
                if not 0 <= v < len(self.nodes):
                    raise InstanceError(f"flow {flow.label}: unknown node id {v} in path")
        _check_unique((n.name for n in self.nodes if n.name), "node name")
        _check_unique((f.name for f in self.flows if f.name), "flow name")
        if self.flows:
            max_rate = max(f.rate for f in self.flows)
            min_cap = min(n.capacity for n in self.nodes)
            if max_rate > min_cap + EPS_CAP:
                raise InstanceError(
                    f"largest flow rate {max_rate:g} exceeds smallest node capacity {min_cap:g}"
                )

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_flows(self) -> int:
        return len(self.flows)

    @property
    def total_rate(self) -> float:
        return math.fsum(f.rate for f in self.flows)

    def node_id(self, name: str) -> int:
        for node in self.nodes:
            if node.name == name:
                return node.id
        raise KeyError(name)

    def cost_of(self, selected: Iterable[int]) -> float:
        return math.fsum(self.nodes[v].cost for v in selected)

    def with_budget(self, budget: float) -> "Instance":
        return Instance(self.nodes, self.flows, budget)

    def with_uniform_cost(self, cost: float) -> "Instance":
        nodes = [Node(n.id, cost, n.capacity, n.name) for n in self.nodes]
        return Instance(nodes, self.flows, self.budget)

    def with_uniform_capacity(self, capacity: float) -> "Instance":
        nodes = [Node(n.id, n.cost, capacity, n.name) for n in self.nodes]
        return Instance(nodes, self.flows, self.budget)

    def with_flows(self, flow_ids: Sequence[int]) -> "Instance":
        """Sub-instance keeping the given flows (renumbered densely, in the given order)."""
        flows = [
            Flow(j, self.flows[old].rate, self.flows[old].path, self.flows[old].name)
            for j, old in enumerate(flow_ids)
        ]
        return Instance(self.nodes, flows, self.budget)


def _check_unique(names: Iterable[str], what: str) -> None:
    seen = set()
    for name in names:
        if name in seen:
            raise InstanceError(f"duplicate {what} {name!r}")
        seen.add(name)


def validate(instance: Instance) -> list[str]:
    """Re-check an instance and return non-fatal warnings.

    Hard invariants are enforced at construction, so a returned list (possibly
    empty) means the instance is valid.
    """
    Instance(instance.nodes, instance.flows, instance.budget)
    warnings = []
    for flow in instance.flows:
        if all(instance.nodes[v].cost > instance.budget + EPS_CAP for v in flow.path):
            warnings.append(
                f"flow {flow.label}: no node on its path fits the budget; it can never be processed"
            )
    if not instance.flows:
        warnings.append("instance has no flows")
    return warnings


@dataclass(frozen=True)
class Assignment:
    """Sparse per-(flow, node) allocated rate."""

    entries: Mapping[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        clean = {k: float(x) for k, x in self.entries.items() if x != 0.0}
        object.__setattr__(self, "entries", MappingProxyType(clean))

    def __eq__(self, other):
        if not isinstance(other, Assignment):
            return NotImplemented
        return dict(self.entries) == dict(other.entries)

    def __hash__(self):
        return hash(frozenset(self.entries.items()))

    def node_loads(self) -> dict[int, float]:
        loads: dict[int, float] = {}
        for (_, v), x in self.entries.items():
            loads[v] = loads.get(v, 0.0) + x
        return loads

    def flow_totals(self) -> dict[int, float]:
        totals: dict[int, float] = {}
        for (f, _), x in self.entries.items():
            totals[f] = totals.get(f, 0.0) + x
        return totals

    def check(self, instance: Instance, selected: Iterable[int] | None = None) -> None:
        """Raise InstanceError if any capacity/rate/path/placement constraint is broken."""
        allowed = None if selected is None else set(selected)
        for (f, v), x in self.entries.items():
            if not 0 <= f < instance.num_flows or not 0 <= v < instance.num_nodes:
                raise InstanceError(f"assignment entry ({f}, {v}) refers to unknown ids")
            if x < 0:
                raise InstanceError(f"negative assignment {x} for flow {f} at node {v}")
            if v not in instance.flows[f].path:
                raise InstanceError(f"flow {f} assigned to node {v} off its path")
            if allowed is not None and v not in allowed:
                raise InstanceError(f"flow {f} assigned to unselected node {v}")
        for v, load in self.node_loads().items():
            if load > instance.nodes[v].capacity + EPS_CAP:
                raise InstanceError(
                    f"node {v} load {load!r} exceeds capacity {instance.nodes[v].capacity!r}"
                )
        for f, total in self.flow_totals().items():
            if total > instance.flows[f].rate + EPS_CAP:
                raise InstanceError(f"flow {f} total {total!r} exceeds rate {instance.flows[f].rate!r}")


@dataclass(frozen=True)
class Placement:
    selected: frozenset[int]
    total_cost: float
    order: tuple[int, ...] = ()
    certified: bool = True

    @classmethod
    def of(cls, instance: Instance, nodes: Iterable[int], certified: bool = True) -> "Placement":
        order = tuple(nodes)
        return cls(frozenset(order), instance.cost_of(order), order, certified)


@dataclass(frozen=True)
class Solution:
    placement: Placement
    assignment: Assignment
    fully_processed: frozenset[int]
    objective: float


def flows_covered(instance: Instance, selected: Iterable[int]) -> set[int]:
    """Ids of flows whose path meets at least one selected node."""
    sel = set(selected)
    for v in sel:
        if not 0 <= v < instance.num_nodes:
            raise InstanceError(f"unknown node id {v}")
    return {f.id for f in instance.flows if not sel.isdisjoint(f.path)}


# --- text format -------------------------------------------------------------

_NUMBER = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


def _number(token: str, line: int, column: int) -> float:
    if not _NUMBER.match(token):
        raise ParseError(f"expected a number, got {token!r}", line, column)
    return float(token)


def _tokens(raw: str) -> list[tuple[str, int]]:
    out = []
    for m in re.finditer(r"\S+", raw):
        out.append((m.group(), m.start() + 1))
    return out


def parse_instance(text: str) -> Instance:
    """Parse the line-oriented instance format.

    ::

        budget <B>
        node <name> cost <b> capacity <c>
        flow <name> rate <r> path <name1>,<name2>,...
    """
    budget = None
    node_rows: list[tuple[str, float, float, int]] = []
    flow_rows: list[tuple[str, float, list[tuple[str, int]], int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        raw = raw.split("#", 1)[0]
        toks = _tokens(raw)
        if not toks:
            continue
        kw, col = toks[0]
        if kw == "budget":
            if len(toks) != 2:
                raise ParseError("expected 'budget <B>'", lineno, col)
            if budget is not None:
                raise ParseError("budget given twice", lineno, col)
            budget = _number(toks[1][0], lineno, toks[1][1])
        elif kw == "node":
            if len(toks) != 6 or toks[2][0] != "cost" or toks[4][0] != "capacity":
                raise ParseError("expected 'node <name> cost <b> capacity <c>'", lineno, col)
            cost = _number(toks[3][0], lineno, toks[3][1])
            cap = _number(toks[5][0], lineno, toks[5][1])
            node_rows.append((toks[1][0], cost, cap, lineno))
        elif kw == "flow":
            if len(toks) != 6 or toks[2][0] != "rate" or toks[4][0] != "path":
                raise ParseError("expected 'flow <name> rate <r> path <n1>,<n2>,...'", lineno, col)
            rate = _number(toks[3][0], lineno, toks[3][1])
            path_tok, path_col = toks[5]
            names = []
            offset = 0
            for part in path_tok.split(","):
                if not part:
                    raise ParseError("empty node name in path", lineno, path_col + offset)
                names.append((part, path_col + offset))
                offset += len(part) + 1
            flow_rows.append((toks[1][0], rate, names, lineno))
        else:
            raise ParseError(f"unknown keyword {kw!r}", lineno, col)

    if budget is None:
        raise ParseError("missing 'budget' line", 1)

    ids: dict[str, int] = {}
    nodes = []
    for name, cost, cap, lineno in node_rows:
        if name in ids:
            raise ParseError(f"duplicate node {name!r}", lineno)
        ids[name] = len(nodes)
        try:
            nodes.append(Node(len(nodes), cost, cap, name))
        except InstanceError as exc:
            raise ParseError(str(exc), lineno) from None
    flows = []
    seen_flows = set()
    for name, rate, names, lineno in flow_rows:
        if name in seen_flows:
            raise ParseError(f"duplicate flow {name!r}", lineno)
        seen_flows.add(name)
        path = []
        for node_name, col in names:
            if node_name not in ids:
                raise ParseError(f"unknown node {node_name!r} in path", lineno, col)
            path.append(ids[node_name])
        try:
            flows.append(Flow(len(flows), rate, tuple(path), name))
        except InstanceError as exc:
            raise ParseError(str(exc), lineno) from None
    return Instance(nodes, flows, budget)


def format_number(x: float) -> str:
    s = f"{x:.9f}".rstrip("0").rstrip(".")
    return "0" if s in ("", "-0") else s


def serialize_instance(instance: Instance) -> str:
    lines = [f"budget {format_number(instance.budget)}"]
    for n in instance.nodes:
        lines.append(f"node {n.label} cost {format_number(n.cost)} capacity {format_number(n.capacity)}")
    for f in instance.flows:
        path = ",".join(instance.nodes[v].label for v in f.path)
        lines.append(f"flow {f.label} rate {format_number(f.rate)} path {path}")
    return "\n".join(lines) + "\n"


def load_instance(path) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read())


# --- generation and expansion --------------------------------------------------

def generate_random(
    num_nodes: int,
    num_flows: int,
    max_path_len: int,
    rate_range: tuple[float, float],
    capacity_range: tuple[float, float],
    cost_range: tuple[float, float],
    budget_fraction: float,
    seed: int,
) -> Instance:
    """Seeded random instance; paths are random simple node sequences.

    Values are rounded to 3 decimals so that the text format round-trips.
    """
    if num_nodes < 1:
        raise InstanceError("num_nodes must be >= 1")
    if num_flows < 0:
        raise InstanceError("num_flows must be >= 0")
    if max_path_len < 1:
        raise InstanceError("max_path_len must be >= 1")
    for label, (lo, hi) in (("rate", rate_range), ("capacity", capacity_range), ("cost", cost_range)):
        if lo > hi:
            raise InstanceError(f"{label} range is empty: [{lo}, {hi}]")
        if lo < 0:
            raise InstanceError(f"{label} range must be non-negative")
    if rate_range[0] <= 0:
        raise InstanceError("rates must be > 0")
    if capacity_range[0] < rate_range[1]:
        raise InstanceError("capacity range minimum must be >= rate range maximum")
    if budget_fraction < 0:
        raise InstanceError("budget_fraction must be >= 0")

    rng = random.Random(seed)

    def draw(lo, hi):
        return round(rng.uniform(lo, hi), 3) if hi > lo else float(lo)

    nodes = [
        Node(i, draw(*cost_range), draw(*capacity_range), f"n{i}") for i in range(num_nodes)
    ]
    flows = []
    longest = min(max_path_len, num_nodes)
    for j in range(num_flows):
        length = rng.randint(1, longest)
        path = tuple(rng.sample(range(num_nodes), length))
        rate = min(draw(*rate_range), rate_range[1])
        flows.append(Flow(j, max(rate, rate_range[0]), path, f"f{j}"))
    budget = float(math.floor(budget_fraction * math.fsum(n.cost for n in nodes) + EPS_CAP))
    return Instance(nodes, flows, budget)


def expand_servers(
    instance: Instance, servers_per_node: Sequence[tuple[int, float, float]]
) -> Instance:
    """Replace every node by ``count`` virtual nodes, one per server.

    ``servers_per_node[v] = (count, per-server cost, per-server capacity)``.
    Each path has every node replaced, in place, by that node's virtual nodes.
    Virtual node ``k`` of node ``name`` is called ``name#k``.
    """
    if len(servers_per_node) != instance.num_nodes:
        raise InstanceError("need one (count, cost, capacity) triple per node")
    max_rate = max((f.rate for f in instance.flows), default=0.0)
    virtual: list[list[int]] = []
    nodes: list[Node] = []
    for node, (count, cost, cap) in zip(instance.nodes, servers_per_node):
        if count < 1:
            raise InstanceError(f"node {node.label}: server count must be >= 1")
        if cap < max_rate - EPS_CAP:
            raise InstanceError(
                f"node {node.label}: server capacity {cap:g} is below the largest flow rate {max_rate:g}"
            )
        ids = []
        for k in range(count):
            ids.append(len(nodes))
            nodes.append(Node(len(nodes), cost, cap, f"{node.label}#{k}"))
        virtual.append(ids)
    flows = [
        Flow(f.id, f.rate, tuple(u for v in f.path for u in virtual[v]), f.name) for f in instance.flows
    ]
    return Instance(nodes, flows, instance.budget)


TRIANGLE_TEXT = """\
# three nodes of capacity 3, three flows of rate 2 on a triangle
budget 3
node v1 cost 1 capacity 3
node v2 cost 1 capacity 3
node v3 cost 1 capacity 3
flow f1 rate 2 path v1,v2
flow f2 rate 2 path v2,v3
flow f3 rate 2 path v3,v1
"""


def triangle_instance(budget: float = 3.0) -> Instance:
    """The three-node triangle whose full-processing value is not submodular."""
    return parse_instance(TRIANGLE_TEXT).with_budget(budget)
