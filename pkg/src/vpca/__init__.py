"""Joint VNF-node placement and capacity allocation solvers."""

from .allocation import AllocationInvariantError, evaluate_j1, evaluate_r1, gca, mca
from .exact import LimitExceeded, exact_allocation, exact_vpca, feasible_full_set
from .kernels import BACKEND
from .model import (
    EPS_CAP,
    Assignment,
    Flow,
    Instance,
    InstanceError,
    Node,
    ParseError,
    Placement,
    Solution,
    expand_servers,
    flows_covered,
    generate_random,
    load_instance,
    parse_instance,
    serialize_instance,
    validate,
)
from .netflow import R3Oracle, build_network, max_net_flow, r3
from .placement import PlacementConfig, eg_place, place, sg_place, vol_place

__version__ = "0.1.0"
