"""Deterministic discrete-event world model."""

from .graph import CityGraph, Edge, GraphError, Node, Route, empty_route
from .routing import NoRoute, route_time, shortest_route
from .scheduler import Event, Scheduler
from .world import (
    CHARGE_PER_TICK,
    DRAIN_PER_TICK,
    Disruption,
    DuplicateDisruption,
    EdgePosition,
    KernelError,
    ResourceState,
    UnknownTarget,
    WorldState,
    edge_admissible,
    effective_edge_time,
    make_disruption,
)

__all__ = [
    "CHARGE_PER_TICK",
    "CityGraph",
    "DRAIN_PER_TICK",
    "Disruption",
    "DuplicateDisruption",
    "Edge",
    "EdgePosition",
    "Event",
    "GraphError",
    "KernelError",
    "NoRoute",
    "Node",
    "ResourceState",
    "Route",
    "Scheduler",
    "UnknownTarget",
    "WorldState",
    "edge_admissible",
    "effective_edge_time",
    "empty_route",
    "make_disruption",
    "route_time",
    "shortest_route",
]
