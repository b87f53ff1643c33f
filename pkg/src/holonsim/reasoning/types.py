"""Trip requests, plans, and the reasoner's view of the world.

Plans are closed structured data: whatever backend produced them (the
deterministic mock or a remote model), they must satisfy the same
structural invariants before anything downstream will touch them.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Optional

from ..holons import HolonId
from ..kernel import CityGraph, Edge, Node, Route, WorldState

LEG_MODES = ("scooter", "air_taxi", "ground_taxi", "walk")
MODE_EDGE_CLASS = {"scooter": "ground", "ground_taxi": "ground", "walk": "ground", "air_taxi": "air"}
PLAN_STATUSES = ("draft", "validated", "approved", "active", "completed", "aborted")

CONSTRAINT_VOCABULARY = ("avoid_turbulence", "ground_only", "max_cost")

# wire protocol version shared by every reasoner backend
PROMPT_SCHEMA_VERSION = "1"

# walking covers ground edges at a third of vehicle speed
WALK_TIME_FACTOR = 3


class ReasoningError(Exception):
    pass


class NeedsClarification(ReasoningError):
    """The utterance cannot be turned into an actionable spec."""

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason
        self.detail = detail


class NoFeasiblePlan(ReasoningError):
    pass


class NoFeasibleRevision(ReasoningError):
    pass


class BackendUnavailable(ReasoningError):
    """The reasoner backend cannot be reached at all."""


class SchemaViolation(ReasoningError):
    """A backend response does not match the wire schema."""


class Timeout(ReasoningError):
    """The backend exceeded its configured time budget."""


@dataclass(frozen=True)
class Constraint:
    name: str
    value: Optional[int] = None

    def __post_init__(self):
        if self.name not in CONSTRAINT_VOCABULARY:
            raise ValueError(f"unknown constraint {self.name!r}")

    def to_payload(self) -> dict:
        return {"name": self.name, "value": self.value}

    @classmethod
    def from_payload(cls, payload: dict) -> "Constraint":
        return cls(name=payload["name"], value=payload.get("value"))


@dataclass(frozen=True)
class TaskSpec:
    request_id: str
    passenger: HolonId
    origin: str
    destination: str
    earliest_departure: int = 0
    constraints: tuple[Constraint, ...] = ()
    free_text: str = ""
    trip_label: str = "a"
    cancellation: bool = False

    def __post_init__(self):
        if self.origin == self.destination and not self.cancellation:
            raise ValueError("origin must differ from destination")

    def has_constraint(self, name: str) -> bool:
        return any(c.name == name for c in self.constraints)

    def constraint_value(self, name: str) -> Optional[int]:
        for c in self.constraints:
            if c.name == name:
                return c.value
        return None

    def to_payload(self) -> dict:
        return {
            "request_id": self.request_id,
            "passenger": str(self.passenger),
            "origin": self.origin,
            "destination": self.destination,
            "earliest_departure": self.earliest_departure,
            "constraints": [c.to_payload() for c in self.constraints],
            "free_text": self.free_text,
            "trip_label": self.trip_label,
            "cancellation": self.cancellation,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "TaskSpec":
        return cls(
            request_id=payload["request_id"],
            passenger=HolonId.parse(payload["passenger"]),
            origin=payload["origin"],
            destination=payload["destination"],
            earliest_departure=payload.get("earliest_departure", 0),
            constraints=tuple(Constraint.from_payload(c) for c in payload.get("constraints", ())),
            free_text=payload.get("free_text", ""),
            trip_label=payload.get("trip_label", "a"),
            cancellation=payload.get("cancellation", False),
        )


@dataclass(frozen=True)
class Leg:
    leg_id: str
    mode: str
    origin: str
    destination: str
    route: Route
    planned_start: int
    planned_end: int
    assigned_resource: Optional[str] = None
    completed: bool = False

    @property
    def duration(self) -> int:
        return self.planned_end - self.planned_start

    def with_resource(self, resource_id: Optional[str]) -> "Leg":
        return replace(self, assigned_resource=resource_id)

    def as_completed(self) -> "Leg":
        return replace(self, completed=True)

    def to_payload(self) -> dict:
        return {
            "leg_id": self.leg_id,
            "mode": self.mode,
            "origin": self.origin,
            "destination": self.destination,
            "route": {
                "nodes": list(self.route.nodes),
                "edges": list(self.route.edges),
                "total_time": self.route.total_time,
            },
            "planned_start": self.planned_start,
            "planned_end": self.planned_end,
            "assigned_resource": self.assigned_resource,
            "completed": self.completed,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "Leg":
        route = payload["route"]
        return cls(
            leg_id=payload["leg_id"],
            mode=payload["mode"],
            origin=payload["origin"],
            destination=payload["destination"],
            route=Route(
                nodes=tuple(route["nodes"]),
                edges=tuple(route["edges"]),
                total_time=route["total_time"],
            ),
            planned_start=payload["planned_start"],
            planned_end=payload["planned_end"],
            assigned_resource=payload.get("assigned_resource"),
            completed=payload.get("completed", False),
        )


@dataclass(frozen=True)
class Plan:
    plan_id: str
    request_id: str
    legs: tuple[Leg, ...]
    status: str = "draft"
    revision: int = 0

    def with_status(self, status: str) -> "Plan":
        if status not in PLAN_STATUSES:
            raise ValueError(f"unknown plan status {status!r}")
        return replace(self, status=status)

    def with_legs(self, legs: tuple[Leg, ...]) -> "Plan":
        return replace(self, legs=legs)

    @property
    def remaining_legs(self) -> tuple[Leg, ...]:
        return tuple(leg for leg in self.legs if not leg.completed)

    @property
    def door_to_door(self) -> int:
        return sum(leg.route.total_time for leg in self.legs)

    def has_air_leg(self, remaining_only: bool = False) -> bool:
        legs = self.remaining_legs if remaining_only else self.legs
        return any(leg.mode == "air_taxi" for leg in legs)

    def leg(self, leg_id: str) -> Leg:
        for leg in self.legs:
            if leg.leg_id == leg_id:
                return leg
        raise KeyError(leg_id)

    def to_payload(self) -> dict:
        return {
            "plan_id": self.plan_id,
            "request_id": self.request_id,
            "revision": self.revision,
            "status": self.status,
            "legs": [leg.to_payload() for leg in self.legs],
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "Plan":
        return cls(
            plan_id=payload["plan_id"],
            request_id=payload["request_id"],
            legs=tuple(Leg.from_payload(p) for p in payload.get("legs", ())),
            status=payload.get("status", "draft"),
            revision=payload.get("revision", 0),
        )


def check_plan_structure(plan: Plan, spec: TaskSpec, graph: CityGraph) -> list[str]:
    """Structural invariant check; returns human-readable problems."""
    problems: list[str] = []
    if not plan.legs and not spec.cancellation:
        problems.append("plan has no legs")
        return problems
    if plan.legs:
        if plan.legs[0].origin != spec.origin:
            problems.append(f"first leg origin {plan.legs[0].origin!r} != spec origin {spec.origin!r}")
        if plan.legs[-1].destination != spec.destination:
            problems.append(
                f"last leg destination {plan.legs[-1].destination!r} != spec destination {spec.destination!r}"
            )
    for prev, nxt in zip(plan.legs, plan.legs[1:]):
        if prev.destination != nxt.origin:
            problems.append(f"leg {prev.leg_id} ends at {prev.destination!r} but {nxt.leg_id} starts at {nxt.origin!r}")
    for leg in plan.legs:
        if leg.mode not in LEG_MODES:
            problems.append(f"leg {leg.leg_id}: unknown mode {leg.mode!r}")
            continue
        if leg.planned_start >= leg.planned_end:
            problems.append(f"leg {leg.leg_id}: planned_start must precede planned_end")
        if leg.route.origin != leg.origin or leg.route.destination != leg.destination:
            problems.append(f"leg {leg.leg_id}: route endpoints do not match leg endpoints")
        edge_class = MODE_EDGE_CLASS[leg.mode]
        for edge_id in leg.route.edges:
            if graph.edge(edge_id).mode != edge_class:
                problems.append(f"leg {leg.leg_id}: edge {edge_id} is not a {edge_class} edge")
        if leg.mode == "air_taxi":
            for endpoint in (leg.origin, leg.destination):
                if graph.node(endpoint).kind != "vertiport":
                    problems.append(f"leg {leg.leg_id}: air leg endpoint {endpoint!r} is not a vertiport")
    return problems


@dataclass(frozen=True)
class ScheduleAdjustment:
    request_id: str
    kind: str  # delay_departure | advance_departure | cancel | reprioritize
    magnitude: int = 0

    def __post_init__(self):
        if self.kind in ("delay_departure", "advance_departure") and self.magnitude < 1:
            raise ValueError("delay/advance magnitude must be >= 1 tick")

    def to_payload(self) -> dict:
        return {"request_id": self.request_id, "kind": self.kind, "magnitude": self.magnitude}


@dataclass(frozen=True)
class ReasonerContext:
    """Frozen projection of the world that planning operates on.

    Everything a backend may look at is in here, so mock responses are a
    pure function of (prompt, seed) and digests are reproducible.
    """

    tick: int
    seed: int
    nodes: tuple[dict, ...]
    edges: tuple[dict, ...]  # effective times with weather applied, admissibility folded in
    resources: tuple[dict, ...]
    closed_vertiports: tuple[str, ...]
    turbulent_edges: tuple[str, ...]
    occupancy: tuple[dict, ...]  # booked vertiport ops and resource reservations of active plans
    rules_digest: str = ""
    history: tuple[str, ...] = ()

    @classmethod
    def capture(
        cls,
        world: WorldState,
        rules_digest: str = "",
        active_plans: tuple[Plan, ...] = (),
        history: tuple[str, ...] = (),
    ) -> "ReasonerContext":
        disruptions = world.active_disruptions()
        closed: set[str] = set()
        for d in disruptions:
            if d.kind in ("vertiport_closed", "no_fly_zone"):
                closed.update(d.target)
        turbulent = []
        nodes = tuple(
            {"id": n.id, "kind": n.kind, "capacity": n.capacity, "charging": n.charging}
            for n in sorted(world.graph.nodes.values(), key=lambda n: n.id)
        )
        edges = []
        for edge in sorted(world.graph.edges.values(), key=lambda e: e.id):
            effective = world.effective_travel_time(edge)
            edges.append(
                {
                    "id": edge.id,
                    "u": edge.u,
                    "v": edge.v,
                    "mode": edge.mode,
                    "time": effective if effective is not None else 0,
                    "admissible": effective is not None,
                }
            )
            if edge.mode == "air" and any(
                d.kind == "weather_slowdown" and edge.id in d.target for d in disruptions
            ):
                turbulent.append(edge.id)
        resources = tuple(
            {
                "id": r.id,
                "kind": r.kind,
                "location": r.location if isinstance(r.location, str) else None,
                "battery": r.battery,
                "status": r.status,
            }
            for r in sorted(world.resources.values(), key=lambda r: r.id)
        )
        occupancy = []
        for plan in active_plans:
            for leg in plan.remaining_legs:
                if leg.assigned_resource:
                    occupancy.append(
                        {
                            "plan_id": plan.plan_id,
                            "resource": leg.assigned_resource,
                            "start": leg.planned_start,
                            "end": leg.planned_end,
                        }
                    )
                if leg.mode == "air_taxi":
                    occupancy.append(
                        {"plan_id": plan.plan_id, "vertiport": leg.origin, "tick": leg.planned_start}
                    )
                    occupancy.append(
                        {"plan_id": plan.plan_id, "vertiport": leg.destination, "tick": leg.planned_end}
                    )
        return cls(
            tick=world.clock,
            seed=world.rng_seed,
            nodes=nodes,
            edges=tuple(edges),
            resources=resources,
            closed_vertiports=tuple(sorted(closed)),
            turbulent_edges=tuple(sorted(turbulent)),
            occupancy=tuple(occupancy),
            rules_digest=rules_digest,
            history=history,
        )

    def to_prompt_context(self) -> dict:
        return {
            "tick": self.tick,
            "seed": self.seed,
            "nodes": list(self.nodes),
            "edges": list(self.edges),
            "resources": list(self.resources),
            "closed_vertiports": list(self.closed_vertiports),
            "turbulent_edges": list(self.turbulent_edges),
            "occupancy": list(self.occupancy),
            "rules_digest": self.rules_digest,
        }

    @classmethod
    def from_prompt_context(cls, payload: dict) -> "ReasonerContext":
        return cls(
            tick=payload["tick"],
            seed=payload["seed"],
            nodes=tuple(payload["nodes"]),
            edges=tuple(payload["edges"]),
            resources=tuple(payload["resources"]),
            closed_vertiports=tuple(payload["closed_vertiports"]),
            turbulent_edges=tuple(payload["turbulent_edges"]),
            occupancy=tuple(payload["occupancy"]),
            rules_digest=payload.get("rules_digest", ""),
        )

    def digest(self) -> str:
        canonical = json.dumps(self.to_prompt_context(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def routing_view(self) -> CityGraph:
        """Rebuild a routable graph from the projection.

        Disruption effects are already folded into effective times and
        admissibility, so callers route with no further disruption set.
        """
        nodes = [
            Node(id=n["id"], kind=n["kind"], capacity=n["capacity"], charging=n.get("charging", False))
            for n in self.nodes
        ]
        edges = [
            Edge(
                id=e["id"],
                u=e["u"],
                v=e["v"],
                mode=e["mode"],
                base_travel_time=max(1, e["time"]),
                blocked=not e["admissible"],
            )
            for e in self.edges
        ]
        return CityGraph(nodes, edges)
