"""Planner holon: decomposes trips into legs and secures resources.

The pipeline for one job is strictly sequential: draft the legs, then
for each leg that needs a vehicle run one discovery conversation under
the installed coordination strategy, then materialize the final plan
and propose it to the root supervisor. When discovery for a leg fails,
substitution applies in order: walk (if the walk takes at most
WALK_SUBSTITUTION_MAX_TICKS), then a ground taxi, then one whole-trip
ground-only replan before giving up.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..federation import (
    ACTION_CONNECT,
    EVENT_CANDIDATES,
    EVENT_CONFIRMED,
    EVENT_PROVIDER,
    REASON_NO_FEASIBLE_RESOURCE,
    REASON_PROVIDER_LOST,
)
from ..holons import CapabilityDescriptor, Holon, HolonId
from ..kernel.routing import NoRoute, shortest_route
from ..matching import MODE_RESOURCE_KIND
from ..reasoning.planning import GROUND_MODES, materialize, route_for_leg
from ..reasoning.types import (
    Constraint,
    Leg,
    NeedsClarification,
    NoFeasiblePlan,
    NoFeasibleRevision,
    Plan,
    TaskSpec,
    WALK_TIME_FACTOR,
)
from .base import ACTION_DECOMPOSE, ACTION_MATCH_PLAN, ACTION_REVISE

WALK_SUBSTITUTION_MAX_TICKS = 5


@dataclass
class PlanJob:
    kind: str  # plan | revise | match_plan | probe
    request_id: str
    plan_id: str
    revision: int
    spec: Optional[TaskSpec]
    skeletons: list[dict]
    completed_prefix: tuple[Leg, ...] = ()
    correlation: Optional[str] = None
    allocations: dict = field(default_factory=dict)  # skeleton index -> resource id or None
    leg_index: int = 0
    conv: Optional[str] = None
    current_leg: Optional[Leg] = None
    pending_resource: Optional[tuple[str, str]] = None  # (resource id, holon id)
    ground_retry_done: bool = False
    tried_modes: set = field(default_factory=set)  # modes already tried for the current leg


def _skeletons_of(legs) -> list[dict]:
    return [{"mode": leg.mode, "origin": leg.origin, "destination": leg.destination} for leg in legs]


class PlannerHolon(Holon):
    def __init__(self, id: HolonId):
        super().__init__(
            id,
            "planner",
            capabilities=[CapabilityDescriptor("plan_trips", {}, {})],
        )
        self._jobs_by_conv: dict[str, PlanJob] = {}
        self._open_jobs: list[PlanJob] = []

    def active_tasks(self) -> list[str]:
        return sorted(job.request_id for job in self._open_jobs)

    # -- message entry points ------------------------------------------------

    def handle(self, msg, ctx) -> None:
        if msg.payload.get("conv") is not None:
            self._handle_discovery(msg, ctx)
            return
        if msg.kind != "request":
            return
        action = msg.payload.get("action")
        if action == ACTION_DECOMPOSE:
            self._begin_plan(msg, ctx)
        elif action == ACTION_REVISE:
            self._begin_revise(msg, ctx)
        elif action == ACTION_MATCH_PLAN:
            self._begin_match(msg, ctx)

    def _begin_plan(self, msg, sim) -> None:
        payload = msg.payload
        spec = TaskSpec.from_payload(payload["spec"])
        plan_id = payload["plan_id"]
        ctx = sim.capture_context()
        try:
            draft = sim.reasoner.generate_plan(spec, ctx, plan_id)
        except (NoFeasiblePlan, NeedsClarification) as exc:
            self._reject(sim, spec.request_id, "no_feasible_plan", str(exc), msg.id)
            return
        job = PlanJob(
            kind="plan",
            request_id=spec.request_id,
            plan_id=plan_id,
            revision=0,
            spec=spec,
            skeletons=_skeletons_of(draft.legs),
            correlation=msg.id,
        )
        self._open_jobs.append(job)
        self._advance(job, sim)

    def _begin_revise(self, msg, sim) -> None:
        payload = msg.payload
        spec = TaskSpec.from_payload(payload["spec"])
        plan = Plan.from_payload(payload["plan"])
        at_node = payload["at_node"]
        prefix = tuple(leg for leg in plan.legs if leg.completed)
        ctx = sim.capture_context(exclude_request=spec.request_id)
        try:
            revised = sim.reasoner.revise_plan(
                plan, spec, ctx, at_node, completed_prefix=prefix, rules=sim.rules
            )
        except (NoFeasibleRevision, NoFeasiblePlan) as exc:
            self._reject(sim, spec.request_id, "no_feasible_revision", str(exc), msg.id)
            return
        job = PlanJob(
            kind="revise",
            request_id=spec.request_id,
            plan_id=plan.plan_id,
            revision=revised.revision,
            spec=spec,
            skeletons=_skeletons_of(leg for leg in revised.legs if not leg.completed),
            completed_prefix=prefix,
            correlation=msg.id,
        )
        self._open_jobs.append(job)
        self._advance(job, sim)

    def _begin_match(self, msg, sim) -> None:
        """Secure resources for an already-drafted plan (gate fallbacks)."""
        payload = msg.payload
        spec = TaskSpec.from_payload(payload["spec"])
        plan = Plan.from_payload(payload["plan"])
        job = PlanJob(
            kind="match_plan",
            request_id=spec.request_id,
            plan_id=plan.plan_id,
            revision=plan.revision,
            spec=spec,
            skeletons=_skeletons_of(plan.remaining_legs),
            completed_prefix=tuple(leg for leg in plan.legs if leg.completed),
            correlation=msg.id,
        )
        self._open_jobs.append(job)
        self._advance(job, sim)

    # -- probe conversations (bare discovery, no trip attached) ---------------

    def start_probe(self, query: str, leg: Leg, sim) -> str:
        job = PlanJob(
            kind="probe",
            request_id=f"probe:{leg.leg_id}",
            plan_id="",
            revision=0,
            spec=None,
            skeletons=[],
        )
        conv = sim.start_conversation(
            self, query, leg, meta={"request_id": job.request_id, "plan_id": "", "revision": 0}
        )
        job.conv = conv
        job.current_leg = leg
        self._jobs_by_conv[conv] = job
        self._open_jobs.append(job)
        return conv

    # -- pipeline ------------------------------------------------------------

    def _advance(self, job: PlanJob, sim) -> None:
        while job.leg_index < len(job.skeletons):
            sk = job.skeletons[job.leg_index]
            if sk["mode"] == "walk":
                job.allocations[job.leg_index] = None
                job.leg_index += 1
                job.tried_modes.clear()
                continue
            try:
                leg = self._provisional_leg(job, sim)
            except NoFeasiblePlan:
                self._substitute(job, sim, "no_route")
                return
            query = f"serve_{MODE_RESOURCE_KIND[sk['mode']]}"
            conv = sim.start_conversation(
                self,
                query,
                leg,
                meta={"request_id": job.request_id, "plan_id": job.plan_id, "revision": job.revision},
            )
            job.conv = conv
            job.current_leg = leg
            self._jobs_by_conv[conv] = job
            return
        self._finalize(job, sim)

    def _provisional_leg(self, job: PlanJob, sim) -> Leg:
        """Route one skeleton now, for battery filtering during matching.

        The final plan is re-routed at finalize time; leg ids are
        positional, so the provisional id already matches the final one.
        """
        ctx = sim.capture_context(exclude_request=job.request_id)
        view = ctx.routing_view()
        sk = job.skeletons[job.leg_index]
        route = route_for_leg(view, ctx, job.spec, sk)
        number = len(job.completed_prefix) + job.leg_index + 1
        leg_id = f"T_{job.spec.trip_label}{number}"
        start = sim.now()
        return Leg(leg_id, sk["mode"], sk["origin"], sk["destination"], route, start, start + route.total_time)

    def _finalize(self, job: PlanJob, sim) -> None:
        ctx = sim.capture_context(exclude_request=job.request_id)
        try:
            plan = materialize(
                ctx,
                job.spec,
                job.skeletons,
                job.plan_id,
                revision=job.revision,
                completed_prefix=job.completed_prefix,
            )
        except NoFeasiblePlan:
            self._substitute(job, sim, "no_route")
            return
        prefix_len = len(job.completed_prefix)
        legs = list(plan.legs)
        for idx, resource_id in job.allocations.items():
            if resource_id is not None:
                legs[prefix_len + idx] = legs[prefix_len + idx].with_resource(resource_id)
        plan = plan.with_legs(tuple(legs))
        self._close_job(job)
        sim.send(
            self.id,
            self.parent,
            "propose",
            {"plan": plan.to_payload(), "request_id": job.request_id},
            correlation=job.correlation,
        )

    def _substitute(self, job: PlanJob, sim, reason: str) -> None:
        if job.kind == "probe":
            self._close_job(job)
            return
        sk = job.skeletons[job.leg_index]
        job.tried_modes.add(sk["mode"])
        ctx = sim.capture_context(exclude_request=job.request_id)
        view = ctx.routing_view()
        ground = None
        try:
            ground = shortest_route(view, sk["origin"], sk["destination"], GROUND_MODES)
        except NoRoute:
            pass
        if sk["mode"] != "walk" and ground is not None:
            if ground.total_time * WALK_TIME_FACTOR <= WALK_SUBSTITUTION_MAX_TICKS:
                job.skeletons[job.leg_index] = {**sk, "mode": "walk"}
                self._advance(job, sim)
                return
            # ground vehicle kinds stand in for each other and for failed air legs
            for mode in ("ground_taxi", "scooter"):
                if mode != sk["mode"] and mode not in job.tried_modes:
                    job.skeletons[job.leg_index] = {**sk, "mode": mode}
                    self._advance(job, sim)
                    return
        if job.kind == "plan" and not job.ground_retry_done:
            self._retry_ground_only(job, sim, reason)
            return
        self._fail_job(job, sim, reason)

    def _retry_ground_only(self, job: PlanJob, sim, reason: str) -> None:
        job.ground_retry_done = True
        self._release_allocations(job, sim)
        spec = job.spec
        if not spec.has_constraint("ground_only"):
            spec = TaskSpec(
                request_id=spec.request_id,
                passenger=spec.passenger,
                origin=spec.origin,
                destination=spec.destination,
                earliest_departure=spec.earliest_departure,
                constraints=spec.constraints + (Constraint("ground_only"),),
                free_text=spec.free_text,
                trip_label=spec.trip_label,
            )
        ctx = sim.capture_context(exclude_request=job.request_id)
        try:
            draft = sim.reasoner.generate_plan(spec, ctx, job.plan_id)
        except (NoFeasiblePlan, NeedsClarification):
            self._fail_job(job, sim, reason)
            return
        job.spec = spec
        job.skeletons = _skeletons_of(leg for leg in draft.legs if not leg.completed)
        job.allocations = {}
        job.leg_index = 0
        job.tried_modes.clear()
        self._advance(job, sim)

    def _fail_job(self, job: PlanJob, sim, reason: str) -> None:
        self._release_allocations(job, sim)
        self._close_job(job)
        if job.kind == "probe":
            return
        kind = "no_feasible_revision" if job.kind == "revise" else "no_feasible_plan"
        self._reject(sim, job.request_id, kind, reason, job.correlation)

    def _release_allocations(self, job: PlanJob, sim) -> None:
        for resource_id in job.allocations.values():
            if resource_id is not None:
                sim.release(resource_id)
        job.allocations = {}

    def _close_job(self, job: PlanJob) -> None:
        if job.conv is not None:
            self._jobs_by_conv.pop(job.conv, None)
            job.conv = None
        if job in self._open_jobs:
            self._open_jobs.remove(job)

    def _reject(self, sim, request_id: str, reason: str, detail: str, correlation) -> None:
        sim.send(
            self.id,
            self.parent,
            "reject",
            {"subject": request_id, "reason": reason, "detail": detail},
            correlation=correlation,
        )

    # -- discovery conversation, requester side --------------------------------

    def _handle_discovery(self, msg, sim) -> None:
        payload = msg.payload
        conv = payload["conv"]
        job = self._jobs_by_conv.get(conv)
        if job is None:
            return
        if msg.kind == "reject":
            sim.fail_conversation(conv, payload.get("reason", "rejected"))
            return
        if msg.kind != "inform":
            return
        event = payload.get("event")
        if event == EVENT_CANDIDATES:
            candidates = payload.get("candidates", [])
            decision = sim.allocate(
                job.current_leg,
                [c["resource"] for c in candidates],
                decided_by=str(self.id),
                meta={"request_id": job.request_id, "plan_id": job.plan_id, "revision": job.revision},
            )
            if decision is None:
                sim.fail_conversation(conv, REASON_NO_FEASIBLE_RESOURCE)
                return
            chosen = next(c for c in candidates if c["resource"] == decision.resource_id)
            job.pending_resource = (decision.resource_id, chosen["holon"])
            if payload.get("confirm") == "direct":
                self._connect(job, sim, chosen["holon"], decision.resource_id)
            else:
                self._complete_conversation(job, sim, decision.resource_id)
        elif event == EVENT_PROVIDER:
            job.pending_resource = (payload["resource"], payload["holon"])
            if payload.get("confirm") == "direct":
                self._connect(job, sim, payload["holon"], payload["resource"])
            else:
                self._complete_conversation(job, sim, payload["resource"])
        elif event == EVENT_CONFIRMED and job.pending_resource is not None:
            self._complete_conversation(job, sim, job.pending_resource[0])

    def _connect(self, job: PlanJob, sim, holon: str, resource_id: str) -> None:
        sent = sim.send(
            self.id,
            HolonId.parse(holon),
            "request",
            {"action": ACTION_CONNECT, "conv": job.conv, "resource": resource_id},
        )
        if sent is None:
            sim.release(resource_id)
            sim.fail_conversation(job.conv, REASON_PROVIDER_LOST)

    def _complete_conversation(self, job: PlanJob, sim, resource_id: str) -> None:
        conv = job.conv
        self._jobs_by_conv.pop(conv, None)
        job.conv = None
        job.pending_resource = None
        sim.finish_conversation(conv, provider=resource_id)
        if job.kind == "probe":
            self._close_job(job)
            return
        job.allocations[job.leg_index] = resource_id
        job.leg_index += 1
        job.tried_modes.clear()
        self._advance(job, sim)

    def on_conversation_failed(self, conv: str, reason: str, sim) -> None:
        job = self._jobs_by_conv.pop(conv, None)
        if job is None:
            return
        job.conv = None
        if job.pending_resource is not None:
            job.pending_resource = None
        self._substitute(job, sim, reason)
