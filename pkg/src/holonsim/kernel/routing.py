"""Minimum-travel-time routing over the city graph.

Dijkstra over admissible edges only. Determinism matters more than raw
speed here: adjacency is iterated in sorted edge-id order and distances
relax strictly, so equal-cost alternatives resolve the same way in every
run.
"""

from __future__ import annotations

import heapq
from typing import Iterable, Optional

from .graph import CityGraph, Route, empty_route
from .world import Disruption, KernelError, effective_edge_time


class NoRoute(KernelError):
    """No admissible path exists between the requested endpoints."""


def shortest_route(
    graph: CityGraph,
    origin: str,
    destination: str,
    mode_set: Iterable[str],
    disruptions: Iterable[Disruption] = (),
    exclude_edges: Optional[set[str]] = None,
) -> Route:
    """Best route from origin to destination using only `mode_set` edges.

    Active weather slowdowns are priced in; blocked, closed and no-fly
    edges are excluded entirely. `exclude_edges` removes further edges
    (constraint handling, e.g. turbulence avoidance).
    """
    if not graph.has_node(origin):
        raise KernelError(f"unknown origin node {origin!r}")
    if not graph.has_node(destination):
        raise KernelError(f"unknown destination node {destination!r}")
    if origin == destination:
        return empty_route(origin)

    modes = set(mode_set)
    excluded = exclude_edges or set()
    disruptions = list(disruptions)

    dist: dict[str, int] = {origin: 0}
    prev: dict[str, tuple[str, str]] = {}  # node -> (prev node, edge id)
    heap: list[tuple[int, str]] = [(0, origin)]
    done: set[str] = set()

    while heap:
        d, node = heapq.heappop(heap)
        if node in done:
            continue
        done.add(node)
        if node == destination:
            break
        for edge in graph.incident_edges(node):
            if edge.mode not in modes or edge.id in excluded:
                continue
            t = effective_edge_time(edge, disruptions)
            if t is None:
                continue
            nxt = edge.other(node)
            nd = d + t
            if nxt not in dist or nd < dist[nxt]:
                dist[nxt] = nd
                prev[nxt] = (node, edge.id)
                heapq.heappush(heap, (nd, nxt))

    if destination not in dist:
        raise NoRoute(f"no admissible {sorted(modes)} path {origin!r} -> {destination!r}")

    nodes = [destination]
    edges: list[str] = []
    node = destination
    while node != origin:
        node, edge_id = prev[node]
        nodes.append(node)
        edges.append(edge_id)
    nodes.reverse()
    edges.reverse()
    return Route(nodes=tuple(nodes), edges=tuple(edges), total_time=dist[destination])


def route_time(
    graph: CityGraph,
    route: Route,
    disruptions: Iterable[Disruption] = (),
) -> Optional[int]:
    """Re-price an existing route; None when any edge is inadmissible."""
    disruptions = list(disruptions)
    total = 0
    for edge_id in route.edges:
        t = effective_edge_time(graph.edge(edge_id), disruptions)
        if t is None:
            return None
        total += t
    return total
