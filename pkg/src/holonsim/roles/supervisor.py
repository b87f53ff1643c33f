"""Root supervisor: trip lifecycle, the safety gate, status handling.

Every plan passes a three-step gate before dispatch: rule validation,
physical feasibility against the live world, and a human approval step
for high-risk plans. A pending approval resolves by operator decision
or by timeout, in which case the fallback (the best ground-only plan
computed when the gate ran) replaces the gated plan; with no fallback
the plan is rejected. Step failures short-circuit.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Optional

from ..federation import (
    ACTION_DISCOVER,
    EVENT_PROVIDER,
    REASON_NO_FEASIBLE_RESOURCE,
    REASON_NO_PROVIDER,
)
from ..holons import CapabilityDescriptor, Holon, HolonId
from ..kernel.routing import NoRoute, route_time, shortest_route
from ..kernel.world import DRAIN_PER_TICK
from ..reasoning.planning import GROUND_MODES, materialize
from ..reasoning.types import (
    NoFeasiblePlan,
    Plan,
    ScheduleAdjustment,
    TaskSpec,
    check_plan_structure,
)
from .base import (
    ACTION_DECOMPOSE,
    ACTION_EXECUTE_LEG,
    ACTION_MATCH_PLAN,
    ACTION_PLAN_TRIP,
    ACTION_REVISE,
    EVENT_ADJUSTMENT,
    EVENT_TRIP_UPDATE,
    MODE_FLEET,
    PLANNER_SEGMENT,
    ApprovalRequest,
    TripRecord,
)


class RootSupervisor(Holon):
    def __init__(self, id: HolonId):
        super().__init__(
            id,
            "supervisor",
            capabilities=[CapabilityDescriptor("supervise_system", {}, {})],
        )
        self._discovery: dict[str, dict] = {}

    @property
    def planner_id(self) -> HolonId:
        return self.id.child(PLANNER_SEGMENT)

    def handle(self, msg, ctx) -> None:
        payload = msg.payload
        if payload.get("conv") is not None:
            self._handle_discovery(msg, ctx)
            return
        if msg.kind == "request" and payload.get("action") == ACTION_PLAN_TRIP:
            self.handle_request(msg, ctx)
        elif msg.kind == "propose":
            self._on_plan_proposed(msg, ctx)
        elif msg.kind == "reject":
            self._on_plan_rejected(msg, ctx)
        elif msg.kind == "status":
            self.on_status(payload, ctx)
        elif msg.kind == "inform" and payload.get("event") == EVENT_ADJUSTMENT:
            self._on_adjustment(msg, ctx)

    # -- trip intake -----------------------------------------------------------

    def handle_request(self, msg, sim) -> str:
        payload = msg.payload
        spec = TaskSpec.from_payload(payload["spec"])
        request_id = payload["request_id"]
        plan_id = sim.next_id("p")
        trip = TripRecord(
            request_id=request_id,
            passenger=msg.sender,
            label=spec.trip_label,
            requested_at=sim.now(),
            spec=spec,
            plan_id=plan_id,
            at_node=spec.origin,
        )
        sim.trips[request_id] = trip
        sim.send(
            self.id,
            self.planner_id,
            "request",
            {"action": ACTION_DECOMPOSE, "plan_id": plan_id, "spec": spec.to_payload()},
            correlation=msg.id,
        )
        return plan_id

    def _on_plan_proposed(self, msg, sim) -> None:
        payload = msg.payload
        trip = sim.trips.get(payload.get("request_id"))
        plan = Plan.from_payload(payload["plan"])
        if trip is None or not trip.active:
            for leg in plan.remaining_legs:
                if leg.assigned_resource:
                    sim.release(leg.assigned_resource, leg.leg_id)
            return
        trip.plan = plan
        trip.reserved = {
            leg.leg_id: leg.assigned_resource
            for leg in plan.remaining_legs
            if leg.assigned_resource
        }
        sim.record(
            "plan_proposed",
            request_id=trip.request_id,
            plan_id=plan.plan_id,
            revision=plan.revision,
            plan=plan.to_payload(),
        )
        if trip.cancel_requested and trip.executing_leg is None:
            self._abort_trip(trip, sim, "cancelled")
            return
        self.safety_gate(trip, sim)

    def _on_plan_rejected(self, msg, sim) -> None:
        payload = msg.payload
        trip = sim.trips.get(payload.get("subject"))
        if trip is None or not trip.active:
            return
        self._abort_trip(trip, sim, payload.get("reason", "planning_failed"))

    # -- safety gate -------------------------------------------------------------

    def safety_gate(self, trip: TripRecord, sim) -> None:
        plan = trip.plan
        trip.status = "gated"
        base = {"request_id": trip.request_id, "plan_id": plan.plan_id, "revision": plan.revision}
        ctx = sim.capture_context(exclude_request=trip.request_id)
        verdict = sim.reasoner.validate(plan, sim.rules, ctx)
        sim.record(
            "gate_step",
            **base,
            step=1,
            outcome="pass" if verdict.ok else "fail",
            violations=[dict(v) for v in verdict.violations],
        )
        if not verdict.ok:
            self._gate_reject(trip, sim, "rule_violation")
            return
        problems = self._physical_feasibility(trip, sim)
        sim.record(
            "gate_step", **base, step=2, outcome="pass" if not problems else "fail", problems=problems
        )
        if problems:
            self._gate_reject(trip, sim, "physically_infeasible")
            return
        trip.plan = plan = plan.with_status("validated")
        risk = self._risk_class(trip, sim)
        if risk == "low":
            sim.record("gate_step", **base, step=3, outcome="skipped", risk=risk)
            self._gate_clear(trip, sim)
            return
        fallback = self._build_fallback(trip, sim)
        approval_id = sim.next_id("appr")
        timeout_at = sim.now() + sim.approval_timeout
        approval = ApprovalRequest(
            approval_id=approval_id,
            request_id=trip.request_id,
            plan_id=plan.plan_id,
            revision=plan.revision,
            risk_class=risk,
            submitted_at=sim.now(),
            timeout_at=timeout_at,
            fallback=fallback,
        )
        sim.approvals[approval_id] = approval
        trip.pending_approval = approval_id
        sim.record(
            "gate_step", **base, step=3, outcome="pending", risk=risk,
            approval_id=approval_id, timeout_at=timeout_at,
        )
        sim.record("approval_pending", **approval.to_payload())
        sim.schedule(
            timeout_at,
            "approval_timeout",
            {"approval_id": approval_id},
            lambda event: self.on_approval_timeout(approval_id, sim),
        )

    def _physical_feasibility(self, trip: TripRecord, sim) -> list[str]:
        plan = trip.plan
        world = sim.world
        problems = list(check_plan_structure(plan, trip.spec, world.graph))
        disruptions = world.active_disruptions()
        for leg in plan.remaining_legs:
            if route_time(world.graph, leg.route, disruptions) is None:
                problems.append(f"leg {leg.leg_id}: route is not admissible now")
            if leg.mode == "walk":
                continue
            if not leg.assigned_resource:
                problems.append(f"leg {leg.leg_id}: no resource assigned")
                continue
            res = world.resources.get(leg.assigned_resource)
            if res is None:
                problems.append(f"leg {leg.leg_id}: unknown resource {leg.assigned_resource!r}")
                continue
            if res.status == "out_of_service":
                problems.append(f"leg {leg.leg_id}: resource {res.id} is out of service")
            if res.status == "reserved" and res.assigned_task not in (None, leg.leg_id):
                problems.append(f"leg {leg.leg_id}: resource {res.id} is held by {res.assigned_task}")
            if not res.battery_feasible(leg.duration):
                need = DRAIN_PER_TICK[res.kind] * leg.duration
                problems.append(
                    f"leg {leg.leg_id}: resource {res.id} battery {res.battery:.0f}% < required {need:.0f}%"
                )
        return problems

    def _risk_class(self, trip: TripRecord, sim) -> str:
        plan = trip.plan
        if plan.has_air_leg(remaining_only=True):
            return "high"
        if plan.revision > 0:
            nodes: set[str] = set()
            edges: set[str] = set()
            for leg in plan.remaining_legs:
                nodes.update(leg.route.nodes)
                edges.update(leg.route.edges)
            for d in sim.world.active_disruptions():
                targets = set(d.target)
                if d.kind in ("edge_blocked", "weather_slowdown"):
                    if targets & edges:
                        return "high"
                elif targets & nodes:
                    return "high"
        return "low"

    def _build_fallback(self, trip: TripRecord, sim) -> Optional[Plan]:
        """Best ground-only continuation, frozen at gate time."""
        spec = trip.spec
        at = trip.at_node or spec.origin
        if at == spec.destination:
            return None
        ctx = sim.capture_context(exclude_request=trip.request_id)
        view = ctx.routing_view()
        try:
            shortest_route(view, at, spec.destination, GROUND_MODES)
        except NoRoute:
            return None
        prefix = tuple(leg for leg in trip.plan.legs if leg.completed)
        skeletons = [{"mode": "scooter", "origin": at, "destination": spec.destination}]
        try:
            return materialize(
                ctx,
                spec,
                skeletons,
                trip.plan.plan_id,
                revision=trip.plan.revision + 1,
                start_tick=sim.now(),
                completed_prefix=prefix,
            )
        except NoFeasiblePlan:
            return None

    def _gate_clear(self, trip: TripRecord, sim) -> None:
        plan = trip.plan
        sim.record(
            "gate_outcome",
            request_id=trip.request_id,
            plan_id=plan.plan_id,
            revision=plan.revision,
            outcome="cleared",
        )
        trip.plan = plan.with_status("approved")
        self._activate(trip, sim)

    def _gate_reject(self, trip: TripRecord, sim, reason: str) -> None:
        plan = trip.plan
        sim.record(
            "gate_outcome",
            request_id=trip.request_id,
            plan_id=plan.plan_id,
            revision=plan.revision,
            outcome="rejected",
            reason=reason,
        )
        self._abort_trip(trip, sim, f"rejected_by_gate:{reason}")

    def _activate(self, trip: TripRecord, sim) -> None:
        trip.plan = trip.plan.with_status("active")
        trip.status = "active"
        sim.record(
            "plan_activated",
            request_id=trip.request_id,
            plan_id=trip.plan.plan_id,
            revision=trip.plan.revision,
            plan=trip.plan.to_payload(),
        )
        self._notify_passenger(trip, sim, "plan_activated")
        self._dispatch_next(trip, sim)

    # -- approvals ----------------------------------------------------------------

    def resolve_approval(
        self,
        approval_id: str,
        decision: str,
        sim,
        operator: str = "operator",
        override_plan: Optional[dict] = None,
    ) -> tuple[bool, str]:
        approval = sim.approvals.get(approval_id)
        if approval is None:
            return False, "unknown_approval"
        if not approval.pending:
            return False, "approval_already_decided"
        trip = sim.trips.get(approval.request_id)
        if trip is None or not trip.active or trip.pending_approval != approval_id:
            return False, "stale_approval"
        if decision == "approve":
            approval.decision = "approved"
            approval.decided_by = operator
            trip.pending_approval = None
            sim.record(
                "approval_decided", approval_id=approval_id, decision="approved", decided_by=operator
            )
            self._gate_clear(trip, sim)
            return True, ""
        if decision == "reject":
            approval.decision = "rejected"
            approval.decided_by = operator
            trip.pending_approval = None
            sim.record(
                "approval_decided", approval_id=approval_id, decision="rejected", decided_by=operator
            )
            self._gate_reject(trip, sim, "operator_rejected")
            return True, ""
        if decision == "override":
            try:
                plan = Plan.from_payload(override_plan)
            except Exception:
                return False, "invalid_override_plan"
            plan = replace(plan, plan_id=trip.plan.plan_id, revision=trip.plan.revision + 1)
            old_plan = trip.plan
            trip.plan = plan
            verdict = sim.reasoner.validate(
                plan, sim.rules, sim.capture_context(exclude_request=trip.request_id)
            )
            problems = self._physical_feasibility(trip, sim)
            if not verdict.ok or problems:
                trip.plan = old_plan
                return False, "invalid_override_plan"
            approval.decision = "overridden"
            approval.decided_by = operator
            trip.pending_approval = None
            sim.record(
                "approval_decided",
                approval_id=approval_id,
                decision="overridden",
                decided_by=operator,
                plan_id=plan.plan_id,
                revision=plan.revision,
            )
            for leg in plan.remaining_legs:
                if leg.assigned_resource:
                    res = sim.world.resources.get(leg.assigned_resource)
                    if res is not None and res.status in ("idle", "reserved"):
                        res.status = "reserved"
                        res.assigned_task = leg.leg_id
                        trip.reserved[leg.leg_id] = res.id
            self._gate_clear(trip, sim)
            return True, ""
        return False, f"unknown_decision:{decision}"

    def on_approval_timeout(self, approval_id: str, sim) -> None:
        approval = sim.approvals.get(approval_id)
        if approval is None or not approval.pending:
            return
        trip = sim.trips.get(approval.request_id)
        if trip is None or not trip.active or trip.pending_approval != approval_id:
            return
        approval.decision = "timeout"
        approval.decided_by = "system"
        trip.pending_approval = None
        sim.record("approval_decided", approval_id=approval_id, decision="timeout", decided_by="system")
        if approval.fallback is None:
            sim.record(
                "gate_outcome",
                request_id=trip.request_id,
                plan_id=approval.plan_id,
                revision=approval.revision,
                outcome="rejected",
                reason="approval_timeout_no_fallback",
            )
            self._abort_trip(trip, sim, "approval_timeout_no_fallback")
            return
        sim.record(
            "gate_outcome",
            request_id=trip.request_id,
            plan_id=approval.plan_id,
            revision=approval.revision,
            outcome="fallback_activated",
            fallback_revision=approval.fallback.revision,
        )
        self._release_remaining(trip, sim)
        trip.plan = approval.fallback
        trip.status = "planning"
        self._notify_passenger(trip, sim, "fallback_activated")
        sim.send(
            self.id,
            self.planner_id,
            "request",
            {
                "action": ACTION_MATCH_PLAN,
                "request_id": trip.request_id,
                "spec": trip.spec.to_payload(),
                "plan": approval.fallback.to_payload(),
            },
        )

    # -- execution ------------------------------------------------------------------

    def _dispatch_next(self, trip: TripRecord, sim) -> None:
        if trip.cancel_requested:
            self._abort_trip(trip, sim, "cancelled")
            return
        remaining = trip.plan.remaining_legs
        if not remaining:
            self._complete_trip(trip, sim)
            return
        leg = remaining[0]
        delay = trip.delay_next
        trip.delay_next = 0
        when = max(sim.now(), leg.planned_start + delay)
        if when > sim.now():
            request_id, leg_id = trip.request_id, leg.leg_id
            sim.schedule(
                when,
                "dispatch",
                {"request_id": request_id, "leg_id": leg_id},
                lambda event: self._dispatch_leg(request_id, leg_id, sim),
            )
        else:
            self._dispatch_leg(trip.request_id, leg.leg_id, sim)

    def _dispatch_leg(self, request_id: str, leg_id: str, sim) -> None:
        trip = sim.trips.get(request_id)
        if trip is None or not trip.active or trip.plan is None:
            return
        if trip.cancel_requested:
            self._abort_trip(trip, sim, "cancelled")
            return
        try:
            leg = trip.plan.leg(leg_id)
        except Exception:
            return
        if leg.completed:
            return
        trip.executing_leg = leg_id
        trip.status = "active"
        fleet = self.id.child(MODE_FLEET[leg.mode])
        sim.send(
            self.id,
            fleet,
            "command",
            {
                "action": ACTION_EXECUTE_LEG,
                "leg": leg.to_payload(),
                "request_id": trip.request_id,
                "plan_id": trip.plan.plan_id,
                "revision": trip.plan.revision,
            },
        )

    def on_status(self, payload: dict, sim) -> None:
        trip = sim.trips.get(payload.get("request_id"))
        if trip is None or not trip.active or trip.plan is None:
            return
        if payload.get("revision") != trip.plan.revision:
            return
        event = payload["event"]
        leg_id = payload.get("leg_id")
        if event == "leg_started":
            trip.executing_leg = leg_id
            self._notify_passenger(trip, sim, "leg_started", leg_id=leg_id, mode=payload.get("mode"))
        elif event == "leg_progress":
            self._move_passenger(trip, sim, payload.get("at_node"))
        elif event == "resource_fault":
            self._notify_passenger(trip, sim, "resource_fault", leg_id=leg_id)
        elif event == "leg_completed":
            self._on_leg_completed(trip, sim, leg_id, payload)
        elif event == "leg_blocked":
            self._on_leg_blocked(trip, sim, leg_id, payload)

    def _on_leg_completed(self, trip: TripRecord, sim, leg_id: str, payload: dict) -> None:
        legs = list(trip.plan.legs)
        for i, leg in enumerate(legs):
            if leg.leg_id == leg_id and not leg.completed:
                legs[i] = leg.as_completed()
                self._move_passenger(trip, sim, leg.destination)
                break
        trip.plan = trip.plan.with_legs(tuple(legs))
        trip.executing_leg = None
        trip.reserved.pop(leg_id, None)
        if trip.cancel_requested:
            self._abort_trip(trip, sim, "cancelled")
            return
        if not trip.plan.remaining_legs:
            self._complete_trip(trip, sim)
            return
        if trip.pending_revision:
            trip.pending_revision = False
            self._request_revision(trip, sim, trip.at_node)
            return
        self._dispatch_next(trip, sim)

    def _on_leg_blocked(self, trip: TripRecord, sim, leg_id: str, payload: dict) -> None:
        detail = payload.get("detail", {})
        at = payload.get("at_node")
        self._move_passenger(trip, sim, at)
        trip.executing_leg = None
        trip.pending_revision = False
        self._release_remaining(trip, sim)
        if trip.cancel_requested:
            self._abort_trip(trip, sim, "cancelled")
            return
        legs = list(trip.plan.legs)
        idx = next((i for i, leg in enumerate(legs) if leg.leg_id == leg_id), None)
        if idx is not None:
            blocked = legs[idx]
            traversed = detail.get("traversed_edges", [])
            visited = detail.get("nodes_visited", [blocked.origin])
            if traversed:
                # split: the traversed part joins the completed prefix, the
                # rest stays open so the revision knows where it was headed
                from ..kernel.graph import Route

                started = detail.get("started_at", sim.now())
                sub_route = Route(
                    nodes=tuple(visited),
                    edges=tuple(traversed),
                    total_time=max(1, sim.now() - started),
                )
                sub_leg = replace(
                    blocked,
                    destination=at,
                    route=sub_route,
                    planned_start=started,
                    planned_end=max(started + 1, sim.now()),
                    completed=True,
                )
                stub = replace(
                    blocked,
                    origin=at,
                    planned_start=sim.now(),
                    planned_end=sim.now() + max(1, blocked.planned_end - sim.now()),
                    assigned_resource=None,
                )
                legs[idx : idx + 1] = [sub_leg, stub]
            trip.plan = trip.plan.with_legs(tuple(legs))
        self._request_revision(trip, sim, at)

    def _request_revision(self, trip: TripRecord, sim, at_node: Optional[str]) -> None:
        at = at_node or trip.at_node or trip.spec.origin
        if at == trip.spec.destination:
            self._complete_trip(trip, sim)
            return
        trip.status = "replanning"
        self._release_remaining(trip, sim)
        sim.send(
            self.id,
            self.planner_id,
            "request",
            {
                "action": ACTION_REVISE,
                "request_id": trip.request_id,
                "spec": trip.spec.to_payload(),
                "plan": trip.plan.to_payload(),
                "at_node": at,
            },
        )

    def on_disruption(self, disruption, sim) -> None:
        """Proactive replanning for trips whose remaining route is affected.

        Trips between legs revise immediately; trips mid-leg are flagged
        and revise at the next leg boundary (the task holon reports
        blockage on its own if the current leg becomes impassable).
        """
        targets = set(disruption.target)
        for trip in sim.active_trips():
            if trip.plan is None or trip.status not in ("active",):
                continue
            nodes: set[str] = set()
            edges: set[str] = set()
            for leg in trip.plan.remaining_legs:
                nodes.update(leg.route.nodes)
                edges.update(leg.route.edges)
            hit = (
                targets & edges
                if disruption.kind in ("edge_blocked", "weather_slowdown")
                else targets & nodes
            )
            if not hit:
                continue
            if trip.executing_leg is None:
                self._request_revision(trip, sim, trip.at_node)
            else:
                trip.pending_revision = True

    # -- adjustments -------------------------------------------------------------

    def _on_adjustment(self, msg, sim) -> None:
        payload = msg.payload["adjustment"]
        adjustment = ScheduleAdjustment(
            request_id=payload["request_id"],
            kind=payload["kind"],
            magnitude=payload.get("magnitude", 0),
        )
        trip = sim.trips.get(adjustment.request_id)
        if trip is None or not trip.active:
            return
        sim.record(
            "schedule_adjusted",
            request_id=adjustment.request_id,
            kind=adjustment.kind,
            magnitude=adjustment.magnitude,
        )
        if adjustment.kind == "cancel":
            trip.cancel_requested = True
            if trip.executing_leg is None and trip.status in ("gated", "active"):
                self._abort_trip(trip, sim, "cancelled")
        elif adjustment.kind == "delay_departure":
            trip.delay_next += adjustment.magnitude
        elif adjustment.kind == "advance_departure":
            trip.delay_next -= adjustment.magnitude
        elif adjustment.kind == "reprioritize":
            trip.priority = "high"

    # -- terminal states ------------------------------------------------------------

    def _complete_trip(self, trip: TripRecord, sim) -> None:
        trip.status = "completed"
        trip.completed_at = sim.now()
        if trip.plan is not None:
            trip.plan = trip.plan.with_status("completed")
        self._release_remaining(trip, sim)
        sim.record(
            "trip_completed",
            request_id=trip.request_id,
            plan_id=trip.plan.plan_id if trip.plan else None,
            revision=trip.plan.revision if trip.plan else None,
            requested_at=trip.requested_at,
            completed_at=trip.completed_at,
            duration=trip.completed_at - trip.requested_at,
        )
        self._notify_passenger(trip, sim, "completed", final=True)

    def _abort_trip(self, trip: TripRecord, sim, reason: str) -> None:
        if trip.pending_approval is not None:
            approval = sim.approvals.get(trip.pending_approval)
            if approval is not None and approval.pending:
                approval.decision = "rejected"
                approval.decided_by = "system"
                sim.record(
                    "approval_decided",
                    approval_id=approval.approval_id,
                    decision="rejected",
                    decided_by="system",
                )
            trip.pending_approval = None
        trip.status = "aborted"
        trip.completed_at = sim.now()
        self._release_remaining(trip, sim)
        if trip.plan is not None and trip.plan.status != "completed":
            trip.plan = trip.plan.with_status("aborted")
        sim.record("trip_aborted", request_id=trip.request_id, reason=reason)
        self._notify_passenger(trip, sim, "aborted", reason=reason, final=True)

    # -- helpers ------------------------------------------------------------------

    def _release_remaining(self, trip: TripRecord, sim) -> None:
        if trip.plan is None:
            return
        for leg in trip.plan.legs:
            if not leg.completed and leg.assigned_resource and leg.leg_id != trip.executing_leg:
                sim.release(leg.assigned_resource, leg.leg_id)
                trip.reserved.pop(leg.leg_id, None)

    def _move_passenger(self, trip: TripRecord, sim, node: Optional[str]) -> None:
        if not node:
            return
        trip.at_node = node
        passenger = sim.registry.get(trip.passenger) if sim.registry.contains(trip.passenger) else None
        if passenger is not None:
            passenger.location = node

    def _notify_passenger(self, trip: TripRecord, sim, phase: str, **extra) -> None:
        if not sim.registry.contains(trip.passenger):
            return
        payload = {
            "event": EVENT_TRIP_UPDATE,
            "request_id": trip.request_id,
            "phase": phase,
            **extra,
        }
        sim.send(self.id, trip.passenger, "inform", payload)

    # -- holonic discovery (root relays between planner and fleets) -----------------

    def _handle_discovery(self, msg, sim) -> None:
        payload = msg.payload
        conv = payload["conv"]
        if msg.kind == "request" and payload.get("action") == ACTION_DISCOVER:
            query = payload["query"]
            fleets = []
            for child in self.children:
                if child == msg.sender:
                    continue
                holon = sim.registry.get(child)
                if holon.role != "supervisor":
                    continue
                if sim.registry.query_capabilities(query, scope=child):
                    fleets.append(child)
            state = {
                "requester": msg.sender,
                "conv": conv,
                "expected": 0,
                "replies": [],
            }
            for fleet in fleets:
                sent = sim.send(self.id, fleet, "request", dict(payload))
                if sent is not None:
                    state["expected"] += 1
            if state["expected"] == 0:
                sim.send(
                    self.id,
                    msg.sender,
                    "reject",
                    {"subject": conv, "reason": REASON_NO_PROVIDER, "conv": conv},
                )
                return
            self._discovery[conv] = state
        elif msg.kind == "inform" and payload.get("event") == EVENT_PROVIDER:
            state = self._discovery.get(conv)
            if state is None:
                return
            state["replies"].append(
                {
                    "fleet": msg.sender,
                    "resource": payload.get("resource"),
                    "holon": payload.get("holon"),
                    "score": payload.get("score"),
                }
            )
            if len(state["replies"]) < state["expected"]:
                return
            del self._discovery[conv]
            offers = [r for r in state["replies"] if r["resource"]]
            if not offers:
                sim.send(
                    self.id,
                    state["requester"],
                    "reject",
                    {"subject": conv, "reason": REASON_NO_FEASIBLE_RESOURCE, "conv": conv},
                )
                return
            offers.sort(key=lambda r: (-(r["score"] or 0.0), r["resource"]))
            best = offers[0]
            for loser in offers[1:]:
                sim.send(
                    self.id,
                    loser["fleet"],
                    "reject",
                    {"subject": conv, "reason": "superseded", "conv": conv, "resource": loser["resource"]},
                )
            sim.send(
                self.id,
                state["requester"],
                "inform",
                {
                    "event": EVENT_PROVIDER,
                    "conv": conv,
                    "resource": best["resource"],
                    "holon": best["holon"],
                    "confirm": "done",
                },
            )
