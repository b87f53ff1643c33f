"""Simulation runtime: world, holarchy, message transport, run loop.

One Simulation owns everything a run needs and doubles as the context
object (`ctx`) passed to holon handlers. Determinism comes from three
rules: all cross-holon messages travel through the world's (time, seq)
event queue with a one-tick delivery delay; operator commands drain at
tick boundaries before that tick's events; log sequence numbers are
append order. Identical scenario, seed, and command script produce a
byte-identical log.
"""

from __future__ import annotations

import dataclasses
import string
from typing import Callable, Optional

from .federation import (
    ACTION_DISCOVER,
    REASON_NO_PROVIDER,
    ConversationRecord,
    CoordinationMetrics,
    NoProvider,
    Strategy,
    compute_metrics,
    make_strategy,
)
from .holons import Holon, HolonId, HolonRegistry, Message, UnknownRecipient
from .kernel.world import KernelError, WorldState, make_disruption
from .logstore import LogStore
from .matching import MODE_RESOURCE_KIND, AllocationDecision, NoCandidate, match_resources
from .reasoning import Reasoner, ReasonerContext, RuleSet
from .reasoning.types import Leg
from .roles import (
    AIR_FLEET_SEGMENT,
    GROUND_FLEET_SEGMENT,
    PLANNER_SEGMENT,
    ROOT_SEGMENT,
    ApprovalRequest,
    FleetSupervisor,
    PassengerHolon,
    PlannerHolon,
    ResourceHolon,
    RootSupervisor,
    TripRecord,
    VertiportHolon,
)
from .scenario import Scenario

COMMAND_KINDS = (
    "approve",
    "override",
    "reject",
    "inject_disruption",
    "passenger_message",
    "pause",
    "resume",
    "step",
)

RUN_STATUSES = ("loaded", "running", "paused", "finished")


def trip_label(index: int) -> str:
    letters = string.ascii_lowercase
    if index < len(letters):
        return letters[index]
    return letters[index % len(letters)] + str(index // len(letters) + 1)


class Simulation:
    def __init__(
        self,
        scenario: Scenario,
        strategy: str | Strategy = "holonic",
        reasoner: Optional[Reasoner] = None,
        rules: Optional[RuleSet] = None,
        log_path=None,
        run_id: Optional[str] = None,
        approval_timeout: Optional[int] = None,
    ):
        self.scenario = scenario
        # fresh ResourceState copies: the world mutates them, the scenario must stay reusable
        self.world = WorldState(
            scenario.graph,
            [dataclasses.replace(res) for res in scenario.resources],
            rng_seed=scenario.seed,
        )
        self.world.observer = self._on_world_event
        self.log = LogStore(log_path)
        self.rules = rules or RuleSet.default()
        self.reasoner = reasoner or Reasoner()
        self.reasoner.on_fallback = self._on_reasoner_fallback
        self.strategy = strategy if isinstance(strategy, Strategy) else make_strategy(strategy)
        self.approval_timeout = (
            approval_timeout if approval_timeout is not None else scenario.limits.approval_timeout
        )
        self.run_id = run_id or f"{scenario.name}-{scenario.seed}"
        self.status = "loaded"

        self.registry = HolonRegistry(transport=self._transport)
        self.trips: dict[str, TripRecord] = {}
        self.approvals: dict[str, ApprovalRequest] = {}
        self.conversations: dict[str, ConversationRecord] = {}
        self.reasoner_fallbacks: list[dict] = []

        self._counters: dict[str, int] = {}
        self._commands: list[tuple[int, int, dict]] = []
        self._command_order = 0
        self._trip_count = 0
        self._paused = False
        self._step_budget = 0

        self._build_holarchy()
        for disruption in scenario.scripted_disruptions:
            self.world.inject_disruption(disruption)
        self._seed_script()

    # -- setup -----------------------------------------------------------------

    def _build_holarchy(self) -> None:
        root_id = HolonId.of(ROOT_SEGMENT)
        self.supervisor = RootSupervisor(root_id)
        self.registry.register(self.supervisor)
        self.planner = PlannerHolon(root_id.child(PLANNER_SEGMENT))
        self.registry.register(self.planner, parent=root_id)
        ground = FleetSupervisor(root_id.child(GROUND_FLEET_SEGMENT), ("scooter", "ground_taxi"))
        air = FleetSupervisor(root_id.child(AIR_FLEET_SEGMENT), ("air_taxi",))
        self.registry.register(ground, parent=root_id)
        self.registry.register(air, parent=root_id)
        for res in self.scenario.resources:
            fleet = air if res.kind == "air_taxi" else ground
            holon = ResourceHolon(fleet.id.child(res.id), res.id, res.kind)
            self.registry.register(holon, parent=fleet.id)
        for node in sorted(self.scenario.graph.vertiports(), key=lambda n: n.id):
            self.registry.register(VertiportHolon(air.id.child(node.id), node.id), parent=air.id)
        for passenger in self.scenario.passengers:
            holon = PassengerHolon(root_id.child(passenger.id), passenger.location)
            self.registry.register(holon, parent=root_id)
        self.strategy.setup(self)

    def _seed_script(self) -> None:
        for passenger in self.scenario.passengers:
            for trip in passenger.trips:
                self.submit_command(
                    "passenger_message",
                    {"passenger": passenger.id, "text": trip.text},
                    at_tick=trip.at_tick,
                )

    # -- context services (used by holons) ---------------------------------------

    def now(self) -> int:
        return self.world.clock

    def resolve_passenger(self, pid) -> Optional[HolonId]:
        """Map a bare name ("c1") or full path ("S-SoS/c1") to a passenger holon id."""
        if not pid or not isinstance(pid, str):
            return None
        try:
            hid = HolonId.parse(pid) if "/" in pid else self.registry.root.child(pid)
        except ValueError:
            return None
        if not self.registry.contains(hid):
            return None
        return hid if isinstance(self.registry.get(hid), PassengerHolon) else None

    def next_id(self, series: str) -> str:
        self._counters[series] = self._counters.get(series, 0) + 1
        return f"{series}{self._counters[series]}"

    def record(self, kind: str, /, **payload) -> dict:
        return self.log.append(self.world.clock, kind, payload)

    def schedule(self, tick: int, kind: str, payload: dict, handler: Callable) -> None:
        self.world.scheduler.schedule(max(tick, self.world.clock), kind, payload, handler)

    def send(
        self,
        sender: HolonId,
        recipient: HolonId,
        kind: str,
        payload: dict,
        correlation: Optional[str] = None,
    ) -> Optional[Message]:
        msg = Message(
            id=self.next_id("m"),
            sender=sender,
            recipient=recipient,
            kind=kind,
            payload=payload,
            correlation=correlation,
            sent_at=self.world.clock,
        )
        try:
            self.registry.send(msg)
        except UnknownRecipient:
            self.record(
                "delivery_failed",
                message_id=msg.id,
                sender=str(sender),
                recipient=str(recipient),
                stage="send",
            )
            return None
        return msg

    def _transport(self, msg: Message, seq: int) -> None:
        # one tick of messaging latency keeps handler effects ordered
        self.world.scheduler.schedule(
            msg.sent_at + 1,
            "message",
            {"message_id": msg.id},
            handler=lambda event: self._deliver(msg),
        )

    def _deliver(self, msg: Message) -> None:
        conv = msg.payload.get("conv")
        rec = self.conversations.get(conv) if conv else None
        delivered = self.registry.deliver(msg)
        self.record(
            "message",
            message_id=msg.id,
            sender=str(msg.sender),
            recipient=str(msg.recipient),
            kind=msg.kind,
            correlation=msg.correlation,
            payload=msg.payload,
        )
        if delivered and rec is not None and rec.state == "open":
            rec.add_hop(msg, self.world.clock)
        if not delivered:
            self.record(
                "delivery_failed",
                message_id=msg.id,
                sender=str(msg.sender),
                recipient=str(msg.recipient),
                stage="deliver",
            )
            if rec is not None and rec.state == "open":
                self.fail_conversation(conv, "delivery_failed")
            return
        holon = self.registry.get(msg.recipient)
        while holon.inbox:
            pending = holon.inbox.popleft()
            holon.handle(pending, self)

    def capture_context(self, exclude_request: Optional[str] = None) -> ReasonerContext:
        plans = tuple(
            trip.plan
            for trip in self.trips.values()
            if trip.active and trip.plan is not None and trip.request_id != exclude_request
        )
        return ReasonerContext.capture(
            self.world, rules_digest=self.rules.digest(), active_plans=plans
        )

    def allocate(
        self,
        leg: Leg,
        candidate_ids: list[str],
        decided_by: str,
        meta: Optional[dict] = None,
    ) -> Optional[AllocationDecision]:
        """Run the shared selection rule, reserve the winner, log the decision."""
        candidates = [
            self.world.resources[rid] for rid in candidate_ids if rid in self.world.resources
        ]
        try:
            decision = match_resources(leg, candidates, self.world)
        except NoCandidate:
            return None
        res = self.world.resources[decision.resource_id]
        res.status = "reserved"
        res.assigned_task = decision.task_id
        meta = meta or {}
        self.record(
            "allocation",
            task_id=decision.task_id,
            resource_id=decision.resource_id,
            score=decision.score,
            alternatives_considered=decision.alternatives_considered,
            decided_by=decided_by,
            **{k: meta[k] for k in ("request_id", "plan_id", "revision") if k in meta},
        )
        return decision

    def release(self, resource_id: str, leg_id: Optional[str] = None) -> None:
        res = self.world.resources.get(resource_id)
        if res is None:
            return
        if res.status == "reserved" and (leg_id is None or res.assigned_task == leg_id):
            res.status = "idle"
            res.assigned_task = None

    def active_trips(self) -> list[TripRecord]:
        return [trip for trip in self.trips.values() if trip.active]

    # -- conversations -------------------------------------------------------------

    def start_conversation(self, requester: Holon, query: str, leg: Leg, meta: dict) -> str:
        conv = self.next_id("conv")
        self.conversations[conv] = ConversationRecord(
            conv_id=conv,
            initiator=str(requester.id),
            query=query,
            strategy=self.strategy.kind,
            started_at=self.world.clock,
        )
        self.record(
            "conversation_started",
            conv=conv,
            initiator=str(requester.id),
            query=query,
            strategy=self.strategy.kind,
        )
        entry = self.strategy.entry(self, requester)
        sent = self.send(
            requester.id,
            entry,
            "request",
            {"action": ACTION_DISCOVER, "conv": conv, "query": query, "leg": leg.to_payload(), "meta": meta},
        )
        if sent is None:
            # defer so the requester can file its bookkeeping for `conv` first
            self.schedule(
                self.world.clock,
                "conversation_failure",
                {"conv": conv},
                lambda event: self.fail_conversation(conv, "entry_unreachable"),
            )
        return conv

    def finish_conversation(self, conv: str, provider: Optional[str]) -> None:
        rec = self.conversations.get(conv)
        if rec is None or rec.state != "open":
            return
        rec.state = "done"
        rec.provider = provider
        rec.finished_at = self.world.clock
        self.record(
            "conversation_finished", conv=conv, outcome="done", provider=provider, hops=len(rec.hops)
        )

    def fail_conversation(self, conv: str, reason: str) -> None:
        rec = self.conversations.get(conv)
        if rec is None or rec.state != "open":
            return
        rec.state = "failed"
        rec.reason = reason
        rec.finished_at = self.world.clock
        self.record(
            "conversation_finished", conv=conv, outcome="failed", reason=reason, hops=len(rec.hops)
        )
        initiator = HolonId.parse(rec.initiator)
        if self.registry.contains(initiator):
            holon = self.registry.get(initiator)
            callback = getattr(holon, "on_conversation_failed", None)
            if callback is not None:
                callback(conv, reason, self)

    def route_conversation(self, leg: Leg, query: Optional[str] = None) -> ConversationRecord:
        """Drive one bare discovery conversation to a terminal state."""
        self.start()
        query = query or f"serve_{MODE_RESOURCE_KIND[leg.mode]}"
        conv = self.planner.start_probe(query, leg, self)
        rec = self.conversations[conv]
        while rec.state == "open" and self.tick_once(self.scenario.limits.max_ticks):
            pass
        if rec.state == "failed" and rec.reason == REASON_NO_PROVIDER:
            raise NoProvider(query)
        return rec

    # -- reasoner and world hooks -----------------------------------------------------

    def _on_reasoner_fallback(self, backend: str, error: Exception) -> None:
        entry = {"backend": backend, "error": type(error).__name__}
        self.reasoner_fallbacks.append(entry)
        self.record("reasoner_fallback", **entry)

    def _on_world_event(self, event) -> None:
        if event.kind == "disruption_activated":
            self.record("disruption_activated", **event.payload)
            disruption = self.world.disruptions.get(event.payload["disruption"])
            if disruption is not None:
                self.supervisor.on_disruption(disruption, self)
        elif event.kind == "disruption_expired":
            self.record("disruption_expired", **event.payload)

    # -- operator commands ---------------------------------------------------------

    def submit_command(self, kind: str, payload: Optional[dict] = None, at_tick: Optional[int] = None) -> dict:
        if kind not in COMMAND_KINDS:
            raise ValueError(f"unknown command kind {kind!r}")
        payload = dict(payload or {})
        command_id = self.next_id("c")
        if kind == "passenger_message" and "request_id" not in payload:
            payload["request_id"] = self.next_id("r")
            payload["label"] = trip_label(self._trip_count)
            self._trip_count += 1
        at = at_tick if at_tick is not None else self.world.clock + 1
        doc = {"command_id": command_id, "kind": kind, "at_tick": at, "payload": payload}
        self._commands.append((at, self._command_order, doc))
        self._command_order += 1
        return doc

    def _next_command_tick(self) -> Optional[int]:
        if not self._commands:
            return None
        return min(entry[0] for entry in self._commands)

    def _drain_commands(self, until: int) -> None:
        due = sorted(
            [entry for entry in self._commands if entry[0] <= until], key=lambda e: (e[0], e[1])
        )
        if not due:
            return
        remaining = [entry for entry in self._commands if entry[0] > until]
        self._commands = remaining
        for _, _, doc in due:
            self._apply_command(doc)

    def _apply_command(self, doc: dict) -> None:
        kind = doc["kind"]
        payload = doc["payload"]
        command_id = doc["command_id"]

        def accept(**extra) -> None:
            self.record("command_accepted", command_id=command_id, kind=kind, **extra)

        def reject(error: str) -> None:
            self.record("command_rejected", command_id=command_id, kind=kind, error=error)

        if kind == "passenger_message":
            pid = payload.get("passenger")
            holon_id = self.resolve_passenger(pid)
            if holon_id is None:
                reject(f"unknown_passenger:{pid}")
                return
            accept(request_id=payload.get("request_id"))
            self.record(
                "passenger_utterance",
                passenger=pid,
                request_id=payload.get("request_id"),
                text=payload.get("text", ""),
            )
            holon = self.registry.get(holon_id)
            holon.receive_text(
                payload.get("text", ""),
                payload.get("request_id", self.next_id("r")),
                payload.get("label", trip_label(self._trip_count)),
                self,
            )
        elif kind in ("approve", "reject", "override"):
            operator = payload.get("operator", "operator")
            approval_id = payload.get("approval_id")
            if approval_id == "*":
                targets = sorted(a for a, req in self.approvals.items() if req.pending)
            elif approval_id:
                targets = [approval_id]
            else:
                reject("missing_approval_id")
                return
            if not targets:
                reject("no_pending_approvals")
                return
            decision = {"approve": "approve", "reject": "reject", "override": "override"}[kind]
            for target in targets:
                ok, error = self.supervisor.resolve_approval(
                    target,
                    decision,
                    self,
                    operator=operator,
                    override_plan=payload.get("plan"),
                )
                if ok:
                    accept(approval_id=target)
                else:
                    reject(f"{error}:{target}")
        elif kind == "inject_disruption":
            try:
                disruption = make_disruption(
                    id=payload.get("id") or self.next_id("d"),
                    kind=payload["kind"],
                    target=payload["target"],
                    activation=payload.get("activation", self.world.clock),
                    expiry=payload.get("expiry"),
                    slowdown_factor=payload.get("slowdown_factor", 1.0),
                )
                self.world.inject_disruption(disruption)
            except (KeyError, ValueError, KernelError) as exc:
                reject(f"invalid_disruption:{exc}")
                return
            accept(disruption=disruption.id)
            self.record(
                "disruption_injected",
                disruption=disruption.id,
                kind=disruption.kind,
                target=list(disruption.target),
                activation=disruption.activation,
                expiry=disruption.expiry,
            )
        elif kind == "pause":
            self._paused = True
            self.status = "paused"
            accept()
        elif kind == "resume":
            self._paused = False
            if self.status == "paused":
                self.status = "running"
            accept()
        elif kind == "step":
            self._step_budget += 1
            accept()
        else:  # pragma: no cover - submit_command validates kinds
            reject("unknown_command")

    # -- run loop --------------------------------------------------------------------

    def start(self) -> None:
        if self.status != "loaded":
            return
        self.status = "running"
        self.record(
            "run_started",
            run_id=self.run_id,
            scenario=self.scenario.name,
            seed=self.scenario.seed,
            strategy=self.strategy.kind,
            rules_digest=self.rules.digest(),
        )
        for d in self.scenario.scripted_disruptions:
            self.record(
                "disruption_injected",
                disruption=d.id,
                kind=d.kind,
                target=list(d.target),
                activation=d.activation,
                expiry=d.expiry,
            )

    def pause(self) -> None:
        """Freeze the clock now; step commands then buy single event ticks."""
        if self.status == "finished":
            return
        self.start()
        self._paused = True
        self.status = "paused"

    def tick_once(self, limit: int) -> bool:
        """Run one scheduling step; returns False when nothing is left to do.

        Paused runs freeze the clock: queued world events stay put, while
        pending operator commands apply one per call (so scripted resume
        still lands). A step command buys exactly one event tick.
        """
        if self._paused:
            # paperwork first: a step budget must see the events that queued
            # commands are about to schedule, or it burns on an empty queue
            if self._commands:
                first = min(self._commands, key=lambda e: (e[0], e[1]))
                self._commands.remove(first)
                self._apply_command(first[2])
                return True
            if self._step_budget > 0:
                next_evt = self.world.scheduler.peek_time()
                if next_evt is not None and next_evt <= limit:
                    self.world.begin_tick(next_evt)
                    self._drain_commands(self.world.clock)
                    self.world.advance(max(next_evt, self.world.clock))
                    self._step_budget -= 1
                    return True
                self._step_budget = 0
            return False
        next_cmd = self._next_command_tick()
        next_evt = self.world.scheduler.peek_time()
        candidates = [t for t in (next_cmd, next_evt) if t is not None]
        if not candidates:
            return False
        target = max(min(candidates), self.world.clock)
        if target > limit:
            self.world.advance(limit)
            return False
        self.world.begin_tick(target)
        self._drain_commands(target)
        self.world.advance(target)
        return True

    def paced_tick(self, limit: Optional[int] = None) -> bool:
        """Advance exactly one tick of simulated time (wall-clock paced mode).

        Unlike tick_once, an idle run still moves forward, so approval
        countdowns and scenario limits play out in wall time. Returns False
        once the run is finished.
        """
        limit = limit if limit is not None else self.scenario.limits.max_ticks
        if self.status == "finished":
            return False
        self.start()
        if self._paused:
            while self.tick_once(limit):
                if not self._paused:
                    break
            return True
        target = self.world.clock + 1
        if target > limit:
            self.finish()
            return False
        while not self._paused:
            next_cmd = self._next_command_tick()
            next_evt = self.world.scheduler.peek_time()
            due = [t for t in (next_cmd, next_evt) if t is not None and t <= target]
            if not due:
                break
            step_to = max(min(due), self.world.clock)
            self.world.begin_tick(step_to)
            self._drain_commands(step_to)
            self.world.advance(step_to)
        if not self._paused:
            self.world.begin_tick(target)
            self._drain_commands(target)
            self.world.advance(target)
        return True

    def run(self, max_ticks: Optional[int] = None) -> None:
        self.start()
        limit = max_ticks if max_ticks is not None else self.scenario.limits.max_ticks
        while self.tick_once(limit):
            pass
        self.finish()

    def finish(self) -> None:
        if self.status == "finished":
            return
        self.status = "finished"
        summary = {"completed": 0, "aborted": 0, "open": 0}
        for trip in self.trips.values():
            if trip.status == "completed":
                summary["completed"] += 1
            elif trip.status == "aborted":
                summary["aborted"] += 1
            else:
                summary["open"] += 1
        self.record("run_finished", tick=self.world.clock, trips=summary)
        self.log.close()

    # -- inspection --------------------------------------------------------------------

    def coordination_metrics(self) -> CoordinationMetrics:
        return compute_metrics(list(self.conversations.values()), self.strategy.kind)

    def metrics(self) -> dict:
        trips = list(self.trips.values())
        completed = [t for t in trips if t.status == "completed"]
        durations = [t.completed_at - t.requested_at for t in completed if t.completed_at is not None]
        return {
            "run_id": self.run_id,
            "tick": self.world.clock,
            "status": self.status,
            "trips": {
                "total": len(trips),
                "completed": len(completed),
                "aborted": sum(1 for t in trips if t.status == "aborted"),
                "open": sum(1 for t in trips if t.active),
            },
            "mean_trip_duration": (sum(durations) / len(durations)) if durations else None,
            "reasoner_fallbacks": len(self.reasoner_fallbacks),
            "coordination": self.coordination_metrics().to_payload(),
        }

    def snapshot(self) -> dict:
        return {
            "run_id": self.run_id,
            "tick": self.world.clock,
            "status": self.status,
            "strategy": self.strategy.kind,
            "trips": [trip.to_payload() for trip in self.trips.values()],
            "resources": [
                {
                    "id": res.id,
                    "kind": res.kind,
                    "location": res.location if isinstance(res.location, str) else None,
                    "battery": res.battery,
                    "status": res.status,
                    "assigned_task": res.assigned_task,
                }
                for res in sorted(self.world.resources.values(), key=lambda r: r.id)
            ],
            "active_disruptions": [
                {
                    "id": d.id,
                    "kind": d.kind,
                    "target": list(d.target),
                    "activation": d.activation,
                    "expiry": d.expiry,
                }
                for d in self.world.active_disruptions()
            ],
            "pending_approvals": [
                a.to_payload() for a in self.approvals.values() if a.pending
            ],
        }


def build_reasoner(
    backend: str = "mock",
    remote_url: Optional[str] = None,
    remote_budget: float = 5.0,
) -> Reasoner:
    if backend == "remote":
        from .reasoning.remote import RemoteBackend

        if not remote_url:
            raise ValueError("remote reasoner needs a url")
        return Reasoner(
            backends={"remote": RemoteBackend(remote_url, time_budget=remote_budget)},
            primary="remote",
        )
    if backend != "mock":
        raise ValueError(f"unknown reasoner backend {backend!r}")
    return Reasoner()


def run_comparison(
    scenario: Scenario,
    strategies: tuple[str, ...] = ("facilitator", "broker", "matchmaker", "mediator", "holonic"),
    max_ticks: Optional[int] = None,
) -> dict:
    """Run the same scenario once per strategy; collect per-pattern metrics."""
    results = {}
    for kind in strategies:
        sim = Simulation(scenario, strategy=kind)
        sim.run(max_ticks=max_ticks)
        results[kind] = sim.metrics()
    return {"scenario": scenario.name, "seed": scenario.seed, "strategies": results}
