"""World state: mobility resources, disruption lifecycle, movement physics.

The world is the single source of physical truth. It owns the event
queue; all mutation happens through event processing so that two runs
with the same schedule replay identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Union

from .graph import CityGraph, Edge
from .scheduler import Event, Scheduler

RESOURCE_KINDS = ("scooter", "air_taxi", "ground_taxi")
RESOURCE_STATUSES = ("idle", "reserved", "in_service", "charging", "out_of_service")
DISRUPTION_KINDS = ("edge_blocked", "vertiport_closed", "no_fly_zone", "weather_slowdown")

# battery model: linear drain per tick while in service, recharge at charging nodes
DRAIN_PER_TICK = {"scooter": 1.0, "air_taxi": 2.0, "ground_taxi": 1.0}
CHARGE_PER_TICK = 5.0


class KernelError(Exception):
    """Base class for kernel-level failures."""


class DuplicateDisruption(KernelError):
    pass


class UnknownTarget(KernelError):
    pass


@dataclass
class EdgePosition:
    """Location on an edge, `fraction` of the way from `u` to `v`."""

    edge_id: str
    fraction: float


Location = Union[str, EdgePosition]


@dataclass
class ResourceState:
    id: str
    kind: str
    location: Location
    battery: float = 100.0
    status: str = "idle"
    assigned_task: Optional[str] = None

    def drain(self, ticks: int) -> None:
        self.battery = max(0.0, self.battery - DRAIN_PER_TICK[self.kind] * ticks)
        if self.battery <= 0.0 and self.status not in ("charging", "out_of_service"):
            self.status = "out_of_service"

    def battery_feasible(self, service_ticks: int) -> bool:
        return self.battery >= DRAIN_PER_TICK[self.kind] * service_ticks


@dataclass(frozen=True)
class Disruption:
    id: str
    kind: str
    # edge id, node id, or node set depending on kind
    target: tuple[str, ...]
    activation: int
    expiry: Optional[int] = None
    slowdown_factor: float = 1.0

    def active_at(self, tick: int) -> bool:
        if tick < self.activation:
            return False
        return self.expiry is None or tick < self.expiry


def _as_target_tuple(target) -> tuple[str, ...]:
    if isinstance(target, str):
        return (target,)
    return tuple(target)


def make_disruption(
    id: str,
    kind: str,
    target,
    activation: int,
    expiry: Optional[int] = None,
    slowdown_factor: float = 1.0,
) -> Disruption:
    if kind not in DISRUPTION_KINDS:
        raise ValueError(f"unknown disruption kind {kind!r}")
    targets = _as_target_tuple(target)
    if not targets:
        raise ValueError("disruption target must be non-empty")
    if expiry is not None and not activation < expiry:
        raise ValueError("disruption activation must precede expiry")
    if kind == "weather_slowdown" and slowdown_factor < 1.0:
        raise ValueError("slowdown_factor must be >= 1")
    return Disruption(
        id=id, kind=kind, target=targets, activation=activation,
        expiry=expiry, slowdown_factor=slowdown_factor,
    )


def edge_admissible(edge: Edge, disruptions: Iterable[Disruption]) -> bool:
    """True when the edge may be traversed given the active disruptions."""
    if edge.blocked:
        return False
    for d in disruptions:
        if d.kind == "edge_blocked" and edge.id in d.target:
            return False
        if d.kind in ("vertiport_closed", "no_fly_zone") and edge.mode == "air":
            if edge.u in d.target or edge.v in d.target:
                return False
    return True


def effective_edge_time(edge: Edge, disruptions: Iterable[Disruption]) -> Optional[int]:
    """Travel time in whole ticks under active weather, None when inadmissible.

    Weather multipliers compose multiplicatively and round up.
    """
    if not edge_admissible(edge, disruptions):
        return None
    factor = 1.0
    for d in disruptions:
        if d.kind == "weather_slowdown" and edge.id in d.target:
            factor *= d.slowdown_factor
    return math.ceil(edge.base_travel_time * factor)


class WorldState:
    """City graph, resources, disruptions and the simulation clock."""

    def __init__(self, graph: CityGraph, resources: list[ResourceState], rng_seed: int = 0):
        self.graph = graph
        self.clock = 0
        self.rng_seed = rng_seed
        self.resources: dict[str, ResourceState] = {}
        for res in resources:
            if res.id in self.resources:
                raise KernelError(f"duplicate resource id {res.id!r}")
            if res.kind not in RESOURCE_KINDS:
                raise KernelError(f"resource {res.id!r}: unknown kind {res.kind!r}")
            if isinstance(res.location, str) and not graph.has_node(res.location):
                raise KernelError(f"resource {res.id!r}: unknown location {res.location!r}")
            if not 0.0 <= res.battery <= 100.0:
                raise KernelError(f"resource {res.id!r}: battery out of range")
            self.resources[res.id] = res
        self.disruptions: dict[str, Disruption] = {}
        self._active_ids: set[str] = set()
        self.scheduler = Scheduler()
        # called after each event's handler during advance(), in (time, seq) order
        self.observer: Optional[Callable[[Event], None]] = None

    # -- disruptions ------------------------------------------------------

    def inject_disruption(self, d: Disruption) -> Event:
        """Register a disruption; it takes effect at its activation tick."""
        if d.id in self.disruptions:
            raise DuplicateDisruption(f"disruption id {d.id!r} already used")
        self._check_targets(d)
        self.disruptions[d.id] = d
        activation = max(d.activation, self.clock)
        event = self.scheduler.schedule(
            activation, "disruption_activated",
            {"disruption": d.id, "kind": d.kind, "target": list(d.target)},
            handler=self._on_disruption_activated,
        )
        if d.expiry is not None:
            self.scheduler.schedule(
                d.expiry, "disruption_expired", {"disruption": d.id},
                handler=self._on_disruption_expired,
            )
        return event

    def _check_targets(self, d: Disruption) -> None:
        if d.kind in ("edge_blocked", "weather_slowdown"):
            for eid in d.target:
                if eid not in self.graph.edges:
                    raise UnknownTarget(f"disruption {d.id!r}: unknown edge {eid!r}")
        else:
            for nid in d.target:
                if not self.graph.has_node(nid):
                    raise UnknownTarget(f"disruption {d.id!r}: unknown node {nid!r}")
            if d.kind == "no_fly_zone":
                non_vertiports = [n for n in d.target if self.graph.node(n).kind != "vertiport"]
                if non_vertiports:
                    raise UnknownTarget(
                        f"disruption {d.id!r}: no-fly zone targets non-vertiports {non_vertiports}"
                    )

    def _on_disruption_activated(self, event: Event) -> None:
        self._active_ids.add(event.payload["disruption"])

    def _on_disruption_expired(self, event: Event) -> None:
        self._active_ids.discard(event.payload["disruption"])

    def active_disruptions(self) -> list[Disruption]:
        return [self.disruptions[did] for did in sorted(self._active_ids)]

    def effective_travel_time(self, edge: Edge) -> Optional[int]:
        return effective_edge_time(edge, self.active_disruptions())

    # -- clock ------------------------------------------------------------

    def begin_tick(self, tick: int) -> list[Event]:
        """Advance to `tick`, processing events strictly before it.

        Lands the clock exactly on the tick boundary so per-tick work
        (command intake) can run before that tick's events.
        """
        if tick <= self.clock:
            return []
        processed = self.advance(tick - 1)
        self._step_clock_to(tick)
        return processed

    def advance(self, until: int) -> list[Event]:
        """Process all events with time <= until in (time, seq) order."""
        if until < self.clock:
            raise KernelError(f"cannot advance clock backwards ({self.clock} -> {until})")
        processed: list[Event] = []
        while True:
            event = self.scheduler.pop_due(until)
            if event is None:
                break
            self._step_clock_to(event.time)
            if event.handler is not None:
                event.handler(event)
            if self.observer is not None:
                self.observer(event)
            processed.append(event)
        self._step_clock_to(until)
        return processed

    def _step_clock_to(self, time: int) -> None:
        while self.clock < time:
            self.clock += 1
            self._charge_tick()

    def _charge_tick(self) -> None:
        for res in self.resources.values():
            if res.status != "charging":
                continue
            node = res.location
            if isinstance(node, str) and self.graph.node(node).charging:
                res.battery = min(100.0, res.battery + CHARGE_PER_TICK)
                if res.battery >= 100.0:
                    res.status = "idle"
