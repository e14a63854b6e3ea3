"""Deterministic simulator of IRC channel desynchronisation on a server tree."""

from .channel import Change, ChannelView, ModeClass, authorize, classify, differences, make_change
from .corpus import list_builtins, load_builtin
from .desync import (
    BoundaryEdge,
    DesyncPlan,
    boundary_edges,
    detect_boundary,
    ground_truth_boundaries,
    is_synced,
    one_user_desync,
    two_user_desync,
)
from .engine import World, measure_latency, run_until_quiescent, schedule, step
from .errors import *  # noqa: F401,F403
from .scenario import Scenario, attempt_until_desynced, parse_scenario, render_scenario, run_scenario
from .splitjoin import SplitRecord, netjoin, netsplit, replay_splitsurf
from .topology import Topology, build_topology, chain, diameter, one_way_latency, path, split_components

__version__ = "0.1.0"
