"""City graph: typed nodes and edges for ground and air mobility.

The city is a simple multigraph over discrete nodes. Air edges may only
connect vertiports, which are the sole legal modal transfer points.
All travel times are integer ticks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

NODE_KINDS = ("street", "vertiport", "poi")
EDGE_MODES = ("ground", "air")

DEFAULT_VERTIPORT_CAPACITY = 1


class GraphError(ValueError):
    """Raised when a graph violates a structural invariant."""


@dataclass(frozen=True)
class Node:
    id: str
    kind: str
    x: float = 0.0
    y: float = 0.0
    # vertiports only: simultaneous takeoff/landing slots per tick
    capacity: int = DEFAULT_VERTIPORT_CAPACITY
    charging: bool = False


@dataclass(frozen=True)
class Edge:
    id: str
    u: str
    v: str
    mode: str
    base_travel_time: int
    blocked: bool = False

    def other(self, node_id: str) -> str:
        return self.v if node_id == self.u else self.u

    def touches(self, node_id: str) -> bool:
        return node_id == self.u or node_id == self.v


@dataclass(frozen=True)
class Route:
    """An ordered edge walk between two nodes with its total travel time."""

    nodes: tuple[str, ...]
    edges: tuple[str, ...]
    total_time: int

    @property
    def origin(self) -> str:
        return self.nodes[0]

    @property
    def destination(self) -> str:
        return self.nodes[-1]

    def __len__(self) -> int:
        return len(self.edges)


def empty_route(node: str) -> Route:
    return Route(nodes=(node,), edges=(), total_time=0)


class CityGraph:
    """Validated city graph with deterministic adjacency iteration."""

    def __init__(self, nodes: list[Node], edges: list[Edge]):
        self.nodes: dict[str, Node] = {}
        self.edges: dict[str, Edge] = {}
        self._adjacency: dict[str, list[str]] = {}
        for node in nodes:
            if node.id in self.nodes:
                raise GraphError(f"duplicate node id {node.id!r}")
            if node.kind not in NODE_KINDS:
                raise GraphError(f"node {node.id!r}: unknown kind {node.kind!r}")
            if node.capacity < 1:
                raise GraphError(f"node {node.id!r}: capacity must be >= 1")
            self.nodes[node.id] = node
            self._adjacency[node.id] = []
        seen_pairs: set[tuple[str, str, str]] = set()
        for edge in edges:
            self._check_edge(edge, seen_pairs)
            self.edges[edge.id] = edge
            self._adjacency[edge.u].append(edge.id)
            self._adjacency[edge.v].append(edge.id)
        # sorted adjacency keeps routing tie-breaks reproducible
        for edge_ids in self._adjacency.values():
            edge_ids.sort()

    def _check_edge(self, edge: Edge, seen_pairs: set[tuple[str, str, str]]) -> None:
        if edge.id in self.edges:
            raise GraphError(f"duplicate edge id {edge.id!r}")
        if edge.mode not in EDGE_MODES:
            raise GraphError(f"edge {edge.id!r}: unknown mode {edge.mode!r}")
        if edge.base_travel_time < 1:
            raise GraphError(f"edge {edge.id!r}: base_travel_time must be >= 1 tick")
        for endpoint in (edge.u, edge.v):
            if endpoint not in self.nodes:
                raise GraphError(f"edge {edge.id!r}: unknown endpoint {endpoint!r}")
        if edge.u == edge.v:
            raise GraphError(f"edge {edge.id!r}: self-loops not allowed")
        if edge.mode == "air":
            for endpoint in (edge.u, edge.v):
                if self.nodes[endpoint].kind != "vertiport":
                    raise GraphError(
                        f"edge {edge.id!r}: air edges must connect vertiports, "
                        f"{endpoint!r} is a {self.nodes[endpoint].kind}"
                    )
        pair = (min(edge.u, edge.v), max(edge.u, edge.v), edge.mode)
        if pair in seen_pairs:
            raise GraphError(f"edge {edge.id!r}: duplicate (endpoints, mode) pair")
        seen_pairs.add(pair)

    def node(self, node_id: str) -> Node:
        return self.nodes[node_id]

    def edge(self, edge_id: str) -> Edge:
        return self.edges[edge_id]

    def has_node(self, node_id: str) -> bool:
        return node_id in self.nodes

    def incident_edges(self, node_id: str) -> list[Edge]:
        return [self.edges[eid] for eid in self._adjacency[node_id]]

    def vertiports(self) -> list[Node]:
        return [n for n in self.nodes.values() if n.kind == "vertiport"]
