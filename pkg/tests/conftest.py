"""Shared builders for the test suite plus the acceptance report hook."""

import random

import pytest

from holonsim.kernel import CityGraph, Edge, Node, ResourceState, WorldState, make_disruption


def build_graph(nodes, edges):
    """nodes: (id, kind) or (id, kind, charging); edges: (id, u, v, mode, time[, blocked])."""
    ns = []
    for spec in nodes:
        nid, kind = spec[0], spec[1]
        charging = spec[2] if len(spec) > 2 else False
        ns.append(Node(id=nid, kind=kind, capacity=2, charging=charging))
    es = []
    for spec in edges:
        blocked = spec[5] if len(spec) > 5 else False
        es.append(Edge(id=spec[0], u=spec[1], v=spec[2], mode=spec[3], base_travel_time=spec[4], blocked=blocked))
    return CityGraph(ns, es)


def raw_nodes(graph: CityGraph):
    return [{"id": n.id, "kind": n.kind} for n in graph.nodes.values()]


def raw_edges(graph: CityGraph):
    return [
        {"id": e.id, "u": e.u, "v": e.v, "mode": e.mode, "time": e.base_travel_time, "blocked": e.blocked}
        for e in graph.edges.values()
    ]


def raw_disruptions(disruptions):
    out = []
    for d in disruptions:
        doc = {"kind": d.kind, "target": set(d.target)}
        if d.kind == "weather_slowdown":
            doc["factor"] = d.slowdown_factor
        out.append(doc)
    return out


def random_graph_case(rnd: random.Random, max_nodes: int = 8):
    """A random small city: mixed modes, some vertiports, some disruptions.

    Returns (graph, disruption list). Disruptions are already active at
    tick 0 and never expire, so routing sees all of them.
    """
    n = rnd.randint(2, max_nodes)
    node_ids = [f"n{i}" for i in range(n)]
    n_ports = min(n, rnd.choice([0, 1, 2, 2, 3]))
    ports = set(rnd.sample(node_ids, n_ports))
    nodes = [Node(id=i, kind=("vertiport" if i in ports else "street"), capacity=2) for i in node_ids]

    edges = []
    pairs_used = set()
    target_edges = rnd.randint(n - 1, min(2 * n, n * (n - 1) // 2 + n_ports))
    attempts = 0
    while len(edges) < target_edges and attempts < 200:
        attempts += 1
        u, v = rnd.sample(node_ids, 2)
        mode = "air" if (u in ports and v in ports and rnd.random() < 0.5) else "ground"
        pair = (min(u, v), max(u, v), mode)
        if pair in pairs_used:
            continue
        pairs_used.add(pair)
        edges.append(
            Edge(
                id=f"e{len(edges)}",
                u=u,
                v=v,
                mode=mode,
                base_travel_time=rnd.randint(1, 9),
                blocked=rnd.random() < 0.08,
            )
        )
    graph = CityGraph(nodes, edges)

    disruptions = []
    if edges and rnd.random() < 0.5:
        victim = rnd.choice(edges)
        disruptions.append(
            make_disruption("d-block", "edge_blocked", [victim.id], activation=0, expiry=None)
        )
    if ports and rnd.random() < 0.4:
        disruptions.append(
            make_disruption("d-close", "vertiport_closed", [rnd.choice(sorted(ports))], activation=0, expiry=None)
        )
    if edges and rnd.random() < 0.4:
        victims = rnd.sample(edges, min(len(edges), rnd.randint(1, 3)))
        disruptions.append(
            make_disruption(
                "d-wx",
                "weather_slowdown",
                [e.id for e in victims],
                activation=0,
                expiry=None,
                slowdown_factor=rnd.choice([1.5, 2.0, 3.0]),
            )
        )
    return graph, disruptions


def make_world(graph, resources=(), disruptions=()):
    world = WorldState(graph, list(resources))
    for d in disruptions:
        world.inject_disruption(d)
    world.advance(0)
    return world


def make_resource(rid, kind, location, battery=100.0, status="idle"):
    return ResourceState(id=rid, kind=kind, location=location, battery=battery, status=status)


_ACCEPTANCE_ORDER = [
    "fig5_sequence_replication",
    "disruption_replan_continuity",
    "safety_gate_totality_and_fallback",
    "determinism",
    "routing_and_planning_oracles",
    "resource_matching_oracle",
    "federation_topology_conformance",
    "multimodal_benefit_sanity",
]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion, in criterion order."""
    seen = {}
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            if getattr(rep, "when", "call") not in ("call", None):
                continue
            name = nodeid.split("::")[-1].removeprefix("test_")
            seen[name] = seen.get(name, True) and status == "passed"
    if not seen:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name in _ACCEPTANCE_ORDER:
        if name in seen:
            word = "PASS" if seen[name] else "FAIL"
            terminalreporter.write_line(f"{word} {name}")
    for name in sorted(set(seen) - set(_ACCEPTANCE_ORDER)):
        word = "PASS" if seen[name] else "FAIL"
        terminalreporter.write_line(f"{word} {name}")


@pytest.fixture
def rnd():
    return random.Random(0xC0FFEE)
