"""Scenario files: schema validation and loading.

A scenario is a JSON document with exactly these sections: graph,
resources, passengers, scripted_disruptions, seed, limits. Validation
errors carry the path of the offending field (e.g. "graph.edges[3].mode")
so authoring mistakes are cheap to locate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources as importlib_resources
from pathlib import Path
from typing import Any, Optional

from .kernel.graph import EDGE_MODES, NODE_KINDS, CityGraph, Edge, GraphError, Node
from .kernel.world import (
    DISRUPTION_KINDS,
    RESOURCE_KINDS,
    Disruption,
    ResourceState,
    make_disruption,
)

SECTIONS = ("graph", "resources", "passengers", "scripted_disruptions", "seed", "limits")

DEFAULT_MAX_TICKS = 600
DEFAULT_APPROVAL_TIMEOUT = 30


class SchemaError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class TripRequest:
    at_tick: int
    text: str


@dataclass(frozen=True)
class PassengerSpec:
    id: str
    location: str
    trips: tuple[TripRequest, ...] = ()


@dataclass(frozen=True)
class Limits:
    max_ticks: int = DEFAULT_MAX_TICKS
    approval_timeout: int = DEFAULT_APPROVAL_TIMEOUT


@dataclass
class Scenario:
    name: str
    graph: CityGraph
    resources: list[ResourceState]
    passengers: list[PassengerSpec]
    scripted_disruptions: list[Disruption]
    seed: int = 0
    limits: Limits = field(default_factory=Limits)


def _require(doc: dict, key: str, kind, path: str):
    if key not in doc:
        raise SchemaError(path, f"missing required field {key!r}")
    value = doc[key]
    if kind is not None and not isinstance(value, kind):
        raise SchemaError(f"{path}.{key}" if path else key, f"expected {kind.__name__}")
    return value


def _check_str(value, path: str) -> str:
    if not isinstance(value, str) or not value:
        raise SchemaError(path, "expected non-empty string")
    return value


def _check_int(value, path: str, minimum: Optional[int] = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(path, "expected integer")
    if minimum is not None and value < minimum:
        raise SchemaError(path, f"must be >= {minimum}")
    return value


def _check_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(path, "expected number")
    return float(value)


def _load_graph(doc: Any) -> CityGraph:
    if not isinstance(doc, dict):
        raise SchemaError("graph", "expected object with 'nodes' and 'edges'")
    raw_nodes = _require(doc, "nodes", list, "graph")
    raw_edges = _require(doc, "edges", list, "graph")
    nodes = []
    for i, nd in enumerate(raw_nodes):
        path = f"graph.nodes[{i}]"
        if not isinstance(nd, dict):
            raise SchemaError(path, "expected object")
        kind = _check_str(nd.get("kind", "street"), f"{path}.kind")
        if kind not in NODE_KINDS:
            raise SchemaError(f"{path}.kind", f"unknown node kind {kind!r}")
        nodes.append(
            Node(
                id=_check_str(nd.get("id"), f"{path}.id"),
                kind=kind,
                x=_check_number(nd.get("x", 0.0), f"{path}.x"),
                y=_check_number(nd.get("y", 0.0), f"{path}.y"),
                capacity=_check_int(nd.get("capacity", 1), f"{path}.capacity", minimum=1),
                charging=bool(nd.get("charging", False)),
            )
        )
    edges = []
    for i, ed in enumerate(raw_edges):
        path = f"graph.edges[{i}]"
        if not isinstance(ed, dict):
            raise SchemaError(path, "expected object")
        mode = _check_str(ed.get("mode", "ground"), f"{path}.mode")
        if mode not in EDGE_MODES:
            raise SchemaError(f"{path}.mode", f"unknown edge mode {mode!r}")
        edges.append(
            Edge(
                id=_check_str(ed.get("id"), f"{path}.id"),
                u=_check_str(ed.get("u"), f"{path}.u"),
                v=_check_str(ed.get("v"), f"{path}.v"),
                mode=mode,
                base_travel_time=_check_int(ed.get("base_travel_time"), f"{path}.base_travel_time", minimum=1),
                blocked=bool(ed.get("blocked", False)),
            )
        )
    try:
        return CityGraph(nodes, edges)
    except GraphError as exc:
        raise SchemaError("graph", str(exc)) from exc


def _load_resources(doc: Any, graph: CityGraph) -> list[ResourceState]:
    if not isinstance(doc, list):
        raise SchemaError("resources", "expected list")
    out: list[ResourceState] = []
    seen: set[str] = set()
    for i, rd in enumerate(doc):
        path = f"resources[{i}]"
        if not isinstance(rd, dict):
            raise SchemaError(path, "expected object")
        rid = _check_str(rd.get("id"), f"{path}.id")
        if rid in seen:
            raise SchemaError(f"{path}.id", f"duplicate resource id {rid!r}")
        seen.add(rid)
        kind = _check_str(rd.get("kind"), f"{path}.kind")
        if kind not in RESOURCE_KINDS:
            raise SchemaError(f"{path}.kind", f"unknown resource kind {kind!r}")
        location = _check_str(rd.get("location"), f"{path}.location")
        if not graph.has_node(location):
            raise SchemaError(f"{path}.location", f"unknown node {location!r}")
        battery = _check_number(rd.get("battery", 100.0), f"{path}.battery")
        if not 0.0 <= battery <= 100.0:
            raise SchemaError(f"{path}.battery", "battery must be within [0, 100]")
        out.append(ResourceState(id=rid, kind=kind, location=location, battery=battery))
    return out


def _load_passengers(doc: Any, graph: CityGraph) -> list[PassengerSpec]:
    if not isinstance(doc, list):
        raise SchemaError("passengers", "expected list")
    out: list[PassengerSpec] = []
    seen: set[str] = set()
    for i, pd in enumerate(doc):
        path = f"passengers[{i}]"
        if not isinstance(pd, dict):
            raise SchemaError(path, "expected object")
        pid = _check_str(pd.get("id"), f"{path}.id")
        if pid in seen:
            raise SchemaError(f"{path}.id", f"duplicate passenger id {pid!r}")
        seen.add(pid)
        location = _check_str(pd.get("location"), f"{path}.location")
        if not graph.has_node(location):
            raise SchemaError(f"{path}.location", f"unknown node {location!r}")
        trips = []
        raw_trips = pd.get("trips", [])
        if not isinstance(raw_trips, list):
            raise SchemaError(f"{path}.trips", "expected list")
        for j, td in enumerate(raw_trips):
            tpath = f"{path}.trips[{j}]"
            if not isinstance(td, dict):
                raise SchemaError(tpath, "expected object")
            trips.append(
                TripRequest(
                    at_tick=_check_int(td.get("at_tick", 0), f"{tpath}.at_tick", minimum=0),
                    text=_check_str(td.get("text"), f"{tpath}.text"),
                )
            )
        out.append(PassengerSpec(id=pid, location=location, trips=tuple(trips)))
    return out


def _load_disruptions(doc: Any, graph: CityGraph) -> list[Disruption]:
    if not isinstance(doc, list):
        raise SchemaError("scripted_disruptions", "expected list")
    out: list[Disruption] = []
    seen: set[str] = set()
    for i, dd in enumerate(doc):
        path = f"scripted_disruptions[{i}]"
        if not isinstance(dd, dict):
            raise SchemaError(path, "expected object")
        did = _check_str(dd.get("id"), f"{path}.id")
        if did in seen:
            raise SchemaError(f"{path}.id", f"duplicate disruption id {did!r}")
        seen.add(did)
        kind = _check_str(dd.get("kind"), f"{path}.kind")
        if kind not in DISRUPTION_KINDS:
            raise SchemaError(f"{path}.kind", f"unknown disruption kind {kind!r}")
        target = dd.get("target")
        if isinstance(target, str):
            targets = (target,)
        elif isinstance(target, list) and target and all(isinstance(t, str) for t in target):
            targets = tuple(target)
        else:
            raise SchemaError(f"{path}.target", "expected node/edge id or list of ids")
        known = graph.edges if kind == "edge_blocked" else graph.nodes
        for t in targets:
            if t not in known:
                raise SchemaError(f"{path}.target", f"unknown target {t!r}")
        activation = _check_int(dd.get("activation", 0), f"{path}.activation", minimum=0)
        expiry = dd.get("expiry")
        if expiry is not None:
            expiry = _check_int(expiry, f"{path}.expiry", minimum=activation + 1)
        factor = _check_number(dd.get("slowdown_factor", 1.0), f"{path}.slowdown_factor")
        if factor < 1.0:
            raise SchemaError(f"{path}.slowdown_factor", "must be >= 1.0")
        try:
            out.append(make_disruption(did, kind, targets, activation, expiry, factor))
        except ValueError as exc:
            raise SchemaError(path, str(exc)) from exc
    return out


def _load_limits(doc: Any) -> Limits:
    if doc is None:
        return Limits()
    if not isinstance(doc, dict):
        raise SchemaError("limits", "expected object")
    unknown = set(doc) - {"max_ticks", "approval_timeout"}
    if unknown:
        raise SchemaError("limits", f"unknown field {sorted(unknown)[0]!r}")
    return Limits(
        max_ticks=_check_int(doc.get("max_ticks", DEFAULT_MAX_TICKS), "limits.max_ticks", minimum=1),
        approval_timeout=_check_int(
            doc.get("approval_timeout", DEFAULT_APPROVAL_TIMEOUT), "limits.approval_timeout", minimum=1
        ),
    )


def load_scenario(doc: dict, name: str = "scenario") -> Scenario:
    if not isinstance(doc, dict):
        raise SchemaError("", "scenario must be a JSON object")
    unknown = set(doc) - set(SECTIONS)
    if unknown:
        raise SchemaError(sorted(unknown)[0], "unknown section")
    graph = _load_graph(_require(doc, "graph", None, ""))
    resources = _load_resources(doc.get("resources", []), graph)
    passengers = _load_passengers(doc.get("passengers", []), graph)
    disruptions = _load_disruptions(doc.get("scripted_disruptions", []), graph)
    seed = _check_int(doc.get("seed", 0), "seed")
    limits = _load_limits(doc.get("limits"))
    return Scenario(
        name=name,
        graph=graph,
        resources=resources,
        passengers=passengers,
        scripted_disruptions=disruptions,
        seed=seed,
        limits=limits,
    )


def load_scenario_file(path: str | Path) -> Scenario:
    p = Path(path)
    with p.open(encoding="utf-8") as fh:
        doc = json.load(fh)
    return load_scenario(doc, name=p.stem)


def bundled_scenario(name: str) -> Scenario:
    """Load a scenario shipped inside the package (by file stem)."""
    pkg = importlib_resources.files("holonsim.scenarios")
    resource = pkg / f"{name}.json"
    if not resource.is_file():
        raise FileNotFoundError(f"no bundled scenario named {name!r}")
    doc = json.loads(resource.read_text(encoding="utf-8"))
    return load_scenario(doc, name=name)


def resolve_scenario(ref: str) -> Scenario:
    """Accept either a filesystem path or a bundled scenario name."""
    p = Path(ref)
    if p.suffix == ".json" or p.exists():
        return load_scenario_file(p)
    return bundled_scenario(ref)
