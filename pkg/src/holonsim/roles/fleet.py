"""Fleet supervisors, vehicle/vertiport holons, and leg execution.

A fleet supervisor receives execute_leg commands, spins up one task
holon per leg, and relays the task's status reports to the root. Task
holons simulate the physics: an approach delay to reach the pickup
node, per-edge traversal with battery drain, and a blocked report when
an edge becomes inadmissible or the vehicle dies mid-leg.
"""

from __future__ import annotations

import math
from typing import Optional

from ..federation import ACTION_DISCOVER, ACTION_OFFER, ACTION_CONNECT, EVENT_CONFIRMED, EVENT_PROVIDER
from ..holons import CapabilityDescriptor, Holon, HolonId
from ..matching import approach_time
from ..reasoning.types import Leg, WALK_TIME_FACTOR
from .base import ACTION_EXECUTE_LEG, StatusEvent


class ResourceHolon(Holon):
    """Machine resource: advertises its service, answers discovery rounds."""

    def __init__(self, id: HolonId, resource_id: str, kind: str):
        super().__init__(
            id,
            "resource_machine",
            capabilities=[CapabilityDescriptor(f"serve_{kind}", {}, {})],
        )
        self.resource_id = resource_id
        self.kind = kind

    def handle(self, msg, ctx) -> None:
        payload = msg.payload
        conv = payload.get("conv")
        if conv is None:
            return
        if msg.kind == "request" and payload.get("action") == ACTION_OFFER:
            offer = {"resource": self.resource_id, "holon": str(self.id)}
            res = ctx.world.resources.get(self.resource_id)
            if res is not None:
                offer["battery"] = res.battery
                offer["status"] = res.status
                if isinstance(res.location, str):
                    offer["location"] = res.location
            ctx.send(self.id, msg.sender, "propose", {"plan": offer, "conv": conv})
        elif msg.kind == "request" and payload.get("action") == ACTION_CONNECT:
            ctx.send(
                self.id,
                msg.sender,
                "inform",
                {"event": EVENT_CONFIRMED, "conv": conv, "resource": self.resource_id},
            )
        elif msg.kind == "accept":
            ctx.send(
                self.id,
                msg.sender,
                "inform",
                {"event": EVENT_CONFIRMED, "conv": conv, "resource": self.resource_id},
            )


class VertiportHolon(Holon):
    """Vertiport infrastructure; passive, capacity lives in the graph node."""

    def __init__(self, id: HolonId, node_id: str):
        super().__init__(
            id,
            "resource_machine",
            capabilities=[CapabilityDescriptor("vertiport_ops", {}, {})],
        )
        self.node_id = node_id


class TaskHolon(Holon):
    """Executes exactly one leg, then detaches itself."""

    def __init__(self, id: HolonId, leg: Leg, request_id: str, plan_id: str, revision: int):
        super().__init__(id, "task")
        self.leg = leg
        self.request_id = request_id
        self.plan_id = plan_id
        self.revision = revision
        self.running = False
        self.position = 0
        self.traversed: list[str] = []
        self.visited: list[str] = [leg.origin]
        self.traversal_started: Optional[int] = None

    def active_tasks(self) -> list[str]:
        return [self.leg.leg_id] if self.running else []

    def _resource(self, sim):
        if self.leg.assigned_resource is None:
            return None
        return sim.world.resources.get(self.leg.assigned_resource)

    def begin(self, sim) -> None:
        self.running = True
        leg = self.leg
        if leg.mode == "walk":
            self._begin_service(sim)
            return
        if leg.assigned_resource is None:
            self._fault(sim, "missing_resource")
            return
        res = self._resource(sim)
        if res is None or res.status == "out_of_service":
            self._fault(sim, "resource_unavailable")
            return
        approach = approach_time(sim.world, res, leg.origin)
        if approach is None:
            self._fault(sim, "resource_unreachable")
            return
        ticks = int(math.ceil(approach))
        res.status = "in_service"
        res.assigned_task = leg.leg_id
        if ticks > 0:
            sim.schedule(
                sim.now() + ticks,
                "approach",
                {"leg_id": leg.leg_id, "resource": res.id, "ticks": ticks},
                lambda event: self._arrived_for_pickup(sim, ticks),
            )
        else:
            self._begin_service(sim)

    def _arrived_for_pickup(self, sim, ticks: int) -> None:
        if not self.running:
            return
        res = self._resource(sim)
        if res is None:
            self._fault(sim, "resource_unavailable")
            return
        res.drain(ticks)
        res.location = self.leg.origin
        if res.status == "out_of_service":
            self._fault(sim, "battery_depleted_on_approach")
            return
        self._begin_service(sim)

    def _begin_service(self, sim) -> None:
        res = self._resource(sim)
        if res is not None:
            res.status = "in_service"
            res.location = self.leg.origin
        self.traversal_started = sim.now()
        self._emit(sim, "leg_started", at_node=self.leg.origin)
        self._advance(sim)

    def _advance(self, sim) -> None:
        route = self.leg.route
        if self.position >= len(route.edges):
            self._complete(sim)
            return
        edge = sim.world.graph.edge(route.edges[self.position])
        t = sim.world.effective_travel_time(edge)
        if t is None:
            self._blocked(sim)
            return
        if self.leg.mode == "walk":
            t *= WALK_TIME_FACTOR
        res = self._resource(sim)
        if res is not None:
            if res.status == "out_of_service":
                self._emit(sim, "resource_fault", at_node=self.visited[-1], detail={"reason": "out_of_service"})
                self._blocked(sim)
                return
            if not res.battery_feasible(t):
                self._emit(
                    sim,
                    "resource_fault",
                    at_node=self.visited[-1],
                    detail={"reason": "battery_insufficient", "battery": res.battery},
                )
                self._blocked(sim)
                return
        next_node = route.nodes[self.position + 1]
        edge_id = edge.id
        sim.schedule(
            sim.now() + t,
            "move",
            {"leg_id": self.leg.leg_id, "edge": edge_id, "to": next_node},
            lambda event: self._traversed(sim, edge_id, t, next_node),
        )

    def _traversed(self, sim, edge_id: str, ticks: int, node: str) -> None:
        if not self.running:
            return
        res = self._resource(sim)
        if res is not None:
            res.drain(ticks)
            res.location = node
        self.position += 1
        self.traversed.append(edge_id)
        self.visited.append(node)
        if self.position >= len(self.leg.route.edges):
            self._complete(sim)
            return
        if res is not None and res.status == "out_of_service":
            self._emit(sim, "resource_fault", at_node=node, detail={"reason": "battery_depleted"})
            self._blocked(sim)
            return
        self._emit(sim, "leg_progress", at_node=node)
        self._advance(sim)

    def _complete(self, sim) -> None:
        self.running = False
        res = self._resource(sim)
        if res is not None:
            res.location = self.leg.destination
            res.assigned_task = None
            if res.status != "out_of_service":
                res.status = "idle"
        elapsed = sim.now() - (self.traversal_started or sim.now())
        self._emit(sim, "leg_completed", at_node=self.leg.destination, detail={"elapsed": elapsed})
        sim.registry.detach(self.id)

    def _blocked(self, sim) -> None:
        self.running = False
        at = self.visited[-1]
        res = self._resource(sim)
        if res is not None:
            res.assigned_task = None
            if res.status != "out_of_service":
                res.status = "idle"
        self._emit(
            sim,
            "leg_blocked",
            at_node=at,
            detail={
                "traversed_edges": list(self.traversed),
                "nodes_visited": list(self.visited),
                "started_at": self.traversal_started if self.traversal_started is not None else sim.now(),
            },
        )
        sim.registry.detach(self.id)

    def _fault(self, sim, reason: str) -> None:
        self.running = False
        self._emit(sim, "resource_fault", at_node=self.leg.origin, detail={"reason": reason})
        self._emit(
            sim,
            "leg_blocked",
            at_node=self.leg.origin,
            detail={"traversed_edges": [], "nodes_visited": [self.leg.origin], "started_at": sim.now()},
        )
        sim.registry.detach(self.id)

    def _emit(self, sim, event: str, at_node: Optional[str], detail: Optional[dict] = None) -> None:
        record = StatusEvent(
            source=str(self.id),
            request_id=self.request_id,
            plan_id=self.plan_id,
            revision=self.revision,
            leg_id=self.leg.leg_id,
            mode=self.leg.mode,
            event=event,
            at_node=at_node,
            detail=detail or {},
        ).to_payload()
        sim.record("status", **record)
        if self.parent is not None:
            sim.send(self.id, self.parent, "status", record)


class FleetSupervisor(Holon):
    def __init__(self, id: HolonId, kinds: tuple[str, ...]):
        super().__init__(
            id,
            "supervisor",
            capabilities=[CapabilityDescriptor(f"dispatch_{kind}", {}, {}) for kind in kinds],
        )
        self.kinds = kinds
        self._discovery: dict[str, dict] = {}
        self._task_counter = 0

    def handle(self, msg, ctx) -> None:
        payload = msg.payload
        if payload.get("conv") is not None:
            self._handle_discovery(msg, ctx)
            return
        if msg.kind == "command" and payload.get("action") == ACTION_EXECUTE_LEG:
            self.execute_leg(msg, ctx)
        elif msg.kind == "status" and self.parent is not None:
            # relay task reports up the holarchy
            ctx.send(self.id, self.parent, "status", dict(payload))

    def execute_leg(self, msg, ctx) -> None:
        payload = msg.payload
        leg = Leg.from_payload(payload["leg"])
        self._task_counter += 1
        segment = f"task-{payload['request_id']}-{leg.leg_id}-{self._task_counter}"
        task = TaskHolon(
            self.id.child(segment),
            leg,
            request_id=payload["request_id"],
            plan_id=payload["plan_id"],
            revision=payload["revision"],
        )
        ctx.registry.register(task, parent=self.id)
        task.begin(ctx)

    # -- holonic discovery: match within this fleet's subtree --------------------

    def _handle_discovery(self, msg, sim) -> None:
        payload = msg.payload
        conv = payload["conv"]
        if msg.kind == "request" and payload.get("action") == ACTION_DISCOVER:
            hits = sim.registry.query_capabilities(payload["query"], scope=self.id)
            state = {
                "requester": msg.sender,
                "conv": conv,
                "leg": payload.get("leg"),
                "meta": payload.get("meta", {}),
                "expected": 0,
                "offers": [],
            }
            for holon_id, _cap in hits:
                sent = sim.send(self.id, holon_id, "request", {"action": ACTION_OFFER, "conv": conv})
                if sent is not None:
                    state["expected"] += 1
            if state["expected"] == 0:
                self._reply(sim, msg.sender, conv, None, None, None)
                return
            self._discovery[conv] = state
        elif msg.kind == "propose":
            state = self._discovery.get(conv)
            if state is None:
                return
            plan = payload.get("plan")
            if isinstance(plan, dict) and isinstance(plan.get("resource"), str):
                state["offers"].append(plan)
            else:
                state["expected"] -= 1
            if len(state["offers"]) < state["expected"]:
                return
            del self._discovery[conv]
            state["offers"].sort(key=lambda o: o["resource"])
            leg = Leg.from_payload(state["leg"])
            decision = sim.allocate(
                leg,
                [o["resource"] for o in state["offers"]],
                decided_by=str(self.id),
                meta=state["meta"],
            )
            if decision is None:
                self._reply(sim, state["requester"], conv, None, None, None)
                return
            chosen = next(o for o in state["offers"] if o["resource"] == decision.resource_id)
            self._reply(sim, state["requester"], conv, decision.resource_id, chosen["holon"], decision.score)
        elif msg.kind == "reject" and payload.get("reason") == "superseded":
            if payload.get("resource"):
                sim.release(payload["resource"])

    def _reply(self, sim, to, conv: str, resource, holon, score) -> None:
        sim.send(
            self.id,
            to,
            "inform",
            {
                "event": EVENT_PROVIDER,
                "conv": conv,
                "resource": resource,
                "holon": holon,
                "score": score,
            },
        )
