"""Budgeted node selection maximizing the relaxed objective r3."""

from __future__ import annotations

import itertools
import logging
import random
from dataclasses import dataclass
from typing import Callable, Iterable

from .model import EPS_CAP, Instance, InstanceError, Placement
from .netflow import oracle_for

log = logging.getLogger(__name__)

MODES = ("SG", "EG", "VOL", "auto")


@dataclass(frozen=True)
class PlacementConfig:
    mode: str = "auto"
    eg_size_limit: int = 12
    tie_break: str = "lowest-id"  # or "random"
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown placement mode {self.mode!r}")
        if self.eg_size_limit < 3:
            raise ValueError("eg_size_limit must be at least 3")
        if self.tie_break not in ("lowest-id", "random"):
            raise ValueError(f"unknown tie_break {self.tie_break!r}")


class _Ties:
    """Pick among near-equal candidates: lowest id, or a seeded random choice."""

    def __init__(self, config: PlacementConfig):
        self.rng = random.Random(config.seed) if config.tie_break == "random" else None

    def pick(self, scored: list[tuple[float, int]]) -> tuple[float, int]:
        best = max(score for score, _ in scored)
        tied = sorted(v for score, v in scored if score >= best - EPS_CAP)
        v = tied[0] if self.rng is None else self.rng.choice(tied)
        return next(item for item in scored if item[1] == v)


def uniform_cost(instance: Instance) -> float | None:
    costs = [n.cost for n in instance.nodes]
    if costs and max(costs) - min(costs) <= EPS_CAP:
        return costs[0]
    return None


def sg_place(instance: Instance, oracle: Callable | None = None, config: PlacementConfig | None = None) -> Placement:
    """Plain greedy on marginal r3 gain, k = floor(B / b) picks."""
    config = config or PlacementConfig(mode="SG")
    oracle = oracle or oracle_for(instance)
    b = uniform_cost(instance)
    if b is None:
        raise InstanceError("SG placement needs all node costs equal")
    if b <= 0:
        raise InstanceError("SG placement needs a positive node cost")
    k = int(instance.budget // b + EPS_CAP)
    ties = _Ties(config)
    chosen: list[int] = []
    current = 0.0
    while len(chosen) < min(k, instance.num_nodes):
        base = frozenset(chosen)
        scored = [(oracle(base | {v}) - current, v) for v in range(instance.num_nodes) if v not in base]
        gain, v = ties.pick(scored)
        if gain <= EPS_CAP:
            break
        chosen.append(v)
        current = oracle(frozenset(chosen))
    return Placement.of(instance, chosen)


def _ratio_augment(instance, oracle, start: Iterable[int], ties: _Ties) -> list[int]:
    """Grow a set by best marginal-gain-per-cost among affordable nodes with positive gain."""
    chosen = list(start)
    spent = instance.cost_of(chosen)
    current = oracle(frozenset(chosen))
    while True:
        base = frozenset(chosen)
        scored = []
        gains = {}
        for u in range(instance.num_nodes):
            if u in base:
                continue
            cost = instance.nodes[u].cost
            if spent + cost > instance.budget + EPS_CAP:
                continue
            gain = oracle(base | {u}) - current
            if gain <= EPS_CAP:
                continue
            gains[u] = gain
            scored.append((gain / cost if cost > 0 else float("inf"), u))
        if not scored:
            return chosen
        _, u = ties.pick(scored)
        chosen.append(u)
        spent += instance.nodes[u].cost
        current += gains[u]


def ratio_greedy_place(instance: Instance, oracle=None, config: PlacementConfig | None = None) -> Placement:
    """Cost-aware greedy without enumeration; no approximation certificate."""
    config = config or PlacementConfig()
    oracle = oracle or oracle_for(instance)
    return Placement.of(instance, _ratio_augment(instance, oracle, (), _Ties(config)), certified=False)


def eg_place(instance: Instance, oracle: Callable | None = None, config: PlacementConfig | None = None) -> Placement:
    """Best affordable set of size <= 2, versus every affordable triple grown by ratio greedy."""
    config = config or PlacementConfig(mode="EG")
    oracle = oracle or oracle_for(instance)
    V = instance.num_nodes
    if V > config.eg_size_limit:
        raise InstanceError(f"{V} nodes exceed the enumeration limit {config.eg_size_limit}")
    ties = _Ties(config)

    def affordable(nodes):
        return instance.cost_of(nodes) <= instance.budget + EPS_CAP

    best: tuple[int, ...] = ()
    best_value = 0.0

    def consider(nodes):
        nonlocal best, best_value
        value = oracle(frozenset(nodes))
        # strict improvement keeps the first (lexicographically smallest) candidate
        if value > best_value + EPS_CAP:
            best, best_value = tuple(nodes), value

    for size in (1, 2):
        for combo in itertools.combinations(range(V), size):
            if affordable(combo):
                consider(combo)
    for combo in itertools.combinations(range(V), 3):
        if affordable(combo):
            consider(_ratio_augment(instance, oracle, combo, ties))
    return Placement.of(instance, best)


def traversing_volume(instance: Instance) -> list[float]:
    volume = [0.0] * instance.num_nodes
    for flow in instance.flows:
        for v in flow.path:
            volume[v] += flow.rate
    return volume


def vol_place(instance: Instance, config: PlacementConfig | None = None) -> Placement:
    """Highest traversing traffic first, skipping nodes the budget cannot cover."""
    volume = traversing_volume(instance)
    chosen, spent = [], 0.0
    for v in sorted(range(instance.num_nodes), key=lambda v: (-volume[v], v)):
        cost = instance.nodes[v].cost
        if spent + cost <= instance.budget + EPS_CAP:
            chosen.append(v)
            spent += cost
    return Placement.of(instance, chosen)


def place(instance: Instance, config: PlacementConfig | None = None, oracle=None) -> Placement:
    """Dispatch on config.mode; ``auto`` chooses SG for uniform costs, EG otherwise."""
    config = config or PlacementConfig()
    mode = config.mode
    if mode == "VOL":
        return vol_place(instance, config)
    oracle = oracle or oracle_for(instance)
    if mode == "auto":
        b = uniform_cost(instance)
        mode = "SG" if b is not None and b > 0 else "EG"
    if mode == "SG":
        return sg_place(instance, oracle, config)
    if instance.num_nodes > config.eg_size_limit:
        log.warning(
            "%d nodes exceed eg_size_limit=%d; using ratio greedy (no approximation guarantee)",
            instance.num_nodes, config.eg_size_limit,
        )
        return ratio_greedy_place(instance, oracle, config)
    return eg_place(instance, oracle, config)
