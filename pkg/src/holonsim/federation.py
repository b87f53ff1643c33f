"""Coordination strategies for resource discovery.

Five interaction patterns decide how a requester finds and secures a
provider: facilitator, broker, matchmaker, mediator, and holonic
(recursive delegation along the holarchy). All strategies end in the
same selection rule (see matching.match_resources, reached via
ctx.allocate), so allocations are comparable across patterns; what
differs is the message topology, which is recorded per conversation
and checked by the conformance predicates below.

Conversation protocol, by payload convention (all hops carry "conv"):

- request  {action: "discover", conv, query, leg, meta}   requester -> entry
- request  {action: "offer", conv}                        middle -> provider
- propose  {plan: {resource, holon, ...}, conv}           provider -> middle
- inform   {event: "candidates", candidates, confirm}     middle -> requester
- inform   {event: "provider", resource, holon, confirm}  middle -> requester
- request  {action: "connect", conv, resource}            requester -> provider
- accept   {subject: conv, conv, resource}                mediator -> provider
- inform   {event: "confirmed", conv, resource}           provider -> upstream
- reject   {subject: conv, reason, conv}                  failure, any stage

The requester reacts to payload fields, not to the strategy name:
"confirm" tells it whether a direct contact round is still required
("direct"), or the provider is already secured ("none"/"done").
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .holons import CapabilityDescriptor, Holon, HolonId, Message
from .reasoning.types import Leg

STRATEGY_KINDS = ("facilitator", "broker", "matchmaker", "mediator", "holonic")

ACTION_DISCOVER = "discover"
ACTION_OFFER = "offer"
ACTION_CONNECT = "connect"
EVENT_CANDIDATES = "candidates"
EVENT_PROVIDER = "provider"
EVENT_CONFIRMED = "confirmed"

REASON_NO_PROVIDER = "no_provider"
REASON_NO_FEASIBLE_RESOURCE = "no_feasible_resource"
REASON_PROVIDER_LOST = "provider_lost"


class NoProvider(Exception):
    """Discovery found no holon advertising the requested capability."""


@dataclass
class ConversationRecord:
    conv_id: str
    initiator: str
    query: str
    strategy: str
    started_at: int
    hops: list[dict] = field(default_factory=list)
    state: str = "open"  # open | done | failed
    provider: Optional[str] = None
    finished_at: Optional[int] = None
    reason: Optional[str] = None

    def add_hop(self, msg: Message, tick: int) -> None:
        self.hops.append(
            {"sender": str(msg.sender), "recipient": str(msg.recipient), "kind": msg.kind, "tick": tick}
        )


# -- middle agents -----------------------------------------------------------


def _offer_entry(payload: dict) -> Optional[dict]:
    plan = payload.get("plan")
    if isinstance(plan, dict) and isinstance(plan.get("resource"), str):
        return plan
    return None


class _CollectingAgent(Holon):
    """Shared fan-out machinery: query providers, gather their offers."""

    def __init__(self, id: HolonId):
        super().__init__(
            id,
            "supervisor",
            capabilities=[CapabilityDescriptor("coordinate_discovery", {}, {})],
        )
        self._pending: dict[str, dict] = {}

    def _begin_collect(self, msg: Message, ctx) -> Optional[dict]:
        payload = msg.payload
        conv = payload["conv"]
        hits = ctx.registry.query_capabilities(payload["query"])
        state = {
            "requester": msg.sender,
            "conv": conv,
            "leg": payload.get("leg"),
            "meta": payload.get("meta", {}),
            "expected": 0,
            "offers": [],
        }
        for holon_id, _name in hits:
            sent = ctx.send(self.id, holon_id, "request", {"action": ACTION_OFFER, "conv": conv})
            if sent is not None:
                state["expected"] += 1
        if state["expected"] == 0:
            ctx.send(
                self.id,
                msg.sender,
                "reject",
                {"subject": conv, "reason": REASON_NO_PROVIDER, "conv": conv},
            )
            return None
        self._pending[conv] = state
        return state

    def _collect_offer(self, msg: Message) -> Optional[dict]:
        """Returns the state once all expected offers arrived, else None."""
        conv = msg.payload.get("conv")
        state = self._pending.get(conv)
        if state is None:
            return None
        entry = _offer_entry(msg.payload)
        if entry is not None:
            state["offers"].append(entry)
        else:
            state["expected"] -= 1
        if len(state["offers"]) >= state["expected"]:
            state["offers"].sort(key=lambda o: o["resource"])
            return self._pending.pop(conv)
        return None

    def _allocate(self, state: dict, ctx):
        leg = Leg.from_payload(state["leg"])
        candidates = [o["resource"] for o in state["offers"]]
        return ctx.allocate(leg, candidates, decided_by=str(self.id), meta=state["meta"])


class FacilitatorHolon(_CollectingAgent):
    """Relays queries and replies; never selects. Every hop touches it."""

    def handle(self, msg: Message, ctx) -> None:
        payload = msg.payload
        if msg.kind == "request" and payload.get("action") == ACTION_DISCOVER:
            self._begin_collect(msg, ctx)
        elif msg.kind == "propose":
            state = self._collect_offer(msg)
            if state is not None:
                ctx.send(
                    self.id,
                    state["requester"],
                    "inform",
                    {
                        "event": EVENT_CANDIDATES,
                        "conv": state["conv"],
                        "candidates": state["offers"],
                        "confirm": "none",
                    },
                )


class BrokerHolon(_CollectingAgent):
    """Selects on the requester's behalf, then steps out of the way."""

    def handle(self, msg: Message, ctx) -> None:
        payload = msg.payload
        if msg.kind == "request" and payload.get("action") == ACTION_DISCOVER:
            self._begin_collect(msg, ctx)
        elif msg.kind == "propose":
            state = self._collect_offer(msg)
            if state is None:
                return
            decision = self._allocate(state, ctx)
            if decision is None:
                ctx.send(
                    self.id,
                    state["requester"],
                    "reject",
                    {"subject": state["conv"], "reason": REASON_NO_FEASIBLE_RESOURCE, "conv": state["conv"]},
                )
                return
            chosen = next(o for o in state["offers"] if o["resource"] == decision.resource_id)
            ctx.send(
                self.id,
                state["requester"],
                "inform",
                {
                    "event": EVENT_PROVIDER,
                    "conv": state["conv"],
                    "resource": decision.resource_id,
                    "holon": chosen["holon"],
                    "confirm": "direct",
                },
            )


class MatchmakerHolon(Holon):
    """Answers from the capability index; contact happens directly after."""

    def __init__(self, id: HolonId):
        super().__init__(
            id,
            "supervisor",
            capabilities=[CapabilityDescriptor("coordinate_discovery", {}, {})],
        )

    def handle(self, msg: Message, ctx) -> None:
        payload = msg.payload
        if msg.kind != "request" or payload.get("action") != ACTION_DISCOVER:
            return
        conv = payload["conv"]
        hits = ctx.registry.query_capabilities(payload["query"])
        if not hits:
            ctx.send(
                self.id,
                msg.sender,
                "reject",
                {"subject": conv, "reason": REASON_NO_PROVIDER, "conv": conv},
            )
            return
        candidates = [{"resource": hid.leaf, "holon": str(hid)} for hid, _name in hits]
        ctx.send(
            self.id,
            msg.sender,
            "inform",
            {"event": EVENT_CANDIDATES, "conv": conv, "candidates": candidates, "confirm": "direct"},
        )


class MediatorHolon(_CollectingAgent):
    """Gathers, selects, and actively coordinates the assignment."""

    def handle(self, msg: Message, ctx) -> None:
        payload = msg.payload
        if msg.kind == "request" and payload.get("action") == ACTION_DISCOVER:
            self._begin_collect(msg, ctx)
        elif msg.kind == "propose":
            state = self._collect_offer(msg)
            if state is None:
                return
            decision = self._allocate(state, ctx)
            if decision is None:
                ctx.send(
                    self.id,
                    state["requester"],
                    "reject",
                    {"subject": state["conv"], "reason": REASON_NO_FEASIBLE_RESOURCE, "conv": state["conv"]},
                )
                return
            chosen = next(o for o in state["offers"] if o["resource"] == decision.resource_id)
            state["chosen"] = chosen
            self._pending[state["conv"]] = state
            sent = ctx.send(
                self.id,
                HolonId.parse(chosen["holon"]),
                "accept",
                {"subject": state["conv"], "conv": state["conv"], "resource": decision.resource_id},
            )
            if sent is None:
                self._pending.pop(state["conv"], None)
                ctx.release(decision.resource_id, Leg.from_payload(state["leg"]).leg_id)
                ctx.send(
                    self.id,
                    state["requester"],
                    "reject",
                    {"subject": state["conv"], "reason": REASON_PROVIDER_LOST, "conv": state["conv"]},
                )
        elif msg.kind == "inform" and payload.get("event") == EVENT_CONFIRMED:
            state = self._pending.pop(payload.get("conv"), None)
            if state is None:
                return
            chosen = state["chosen"]
            ctx.send(
                self.id,
                state["requester"],
                "inform",
                {
                    "event": EVENT_PROVIDER,
                    "conv": state["conv"],
                    "resource": chosen["resource"],
                    "holon": chosen["holon"],
                    "confirm": "done",
                },
            )


# -- strategies --------------------------------------------------------------


@dataclass(frozen=True)
class Strategy:
    kind: str
    middle_class: Optional[type] = None

    @property
    def middle_segment(self) -> Optional[str]:
        return self.kind if self.middle_class else None

    def setup(self, sim) -> None:
        """Register the middle agent (if the pattern has one) under the root."""
        if self.middle_class is None:
            return
        mid = sim.registry.root.child(self.middle_segment)
        sim.registry.register(self.middle_class(mid), parent=sim.registry.root)

    def entry(self, sim, requester: Holon) -> HolonId:
        if self.middle_class is None:
            if requester.parent is None:
                raise ValueError("holonic discovery needs a parented requester")
            return requester.parent
        return sim.registry.root.child(self.middle_segment)

    def middle_ids(self, sim) -> set[str]:
        if self.middle_class is not None:
            return {str(sim.registry.root.child(self.middle_segment))}
        # holonic: the supervisors along the tree act as middle agents
        return {
            str(h.id)
            for h in sim.registry.all_holons()
            if h.role == "supervisor"
        }


def make_strategy(kind: str) -> Strategy:
    classes = {
        "facilitator": FacilitatorHolon,
        "broker": BrokerHolon,
        "matchmaker": MatchmakerHolon,
        "mediator": MediatorHolon,
        "holonic": None,
    }
    if kind not in classes:
        raise ValueError(f"unknown strategy {kind!r}")
    return Strategy(kind=kind, middle_class=classes[kind])


# -- conformance predicates --------------------------------------------------


def _touches(hop: dict, agents: set[str]) -> bool:
    return hop["sender"] in agents or hop["recipient"] in agents


def _is_tree_edge(hop: dict) -> bool:
    a = HolonId.parse(hop["sender"])
    b = HolonId.parse(hop["recipient"])
    return a.parent == b or b.parent == a


def conversation_conforms(record: ConversationRecord, middle: set[str]) -> tuple[bool, str]:
    """Check a finished conversation's transcript against its pattern."""
    hops = record.hops
    if not hops:
        return False, "empty transcript"
    kind = record.strategy
    if kind == "facilitator":
        if not all(_touches(h, middle) for h in hops):
            return False, "hop bypasses the facilitator"
        if any(h["kind"] == "accept" for h in hops):
            return False, "facilitator must not coordinate assignments"
        return True, ""
    if kind == "broker":
        direct_start = None
        for i, h in enumerate(hops):
            if not _touches(h, middle):
                direct_start = i
                break
        if direct_start is None:
            return False, "no direct contact after brokering"
        if direct_start == 0:
            return False, "conversation must start at the broker"
        if any(_touches(h, middle) for h in hops[direct_start:]):
            return False, "broker participated after the handoff"
        if len(hops) - direct_start < 2:
            return False, "direct contact needs a request and a reply"
        return True, ""
    if kind == "matchmaker":
        touching = [h for h in hops if _touches(h, middle)]
        if len(touching) != 2:
            return False, f"matchmaker hops = {len(touching)}, expected exactly 2"
        if touching != hops[:2]:
            return False, "matchmaker hops must open the conversation"
        return True, ""
    if kind == "mediator":
        if not all(_touches(h, middle) for h in hops):
            return False, "hop bypasses the mediator"
        if not any(h["kind"] == "accept" and h["sender"] in middle for h in hops):
            return False, "mediator never coordinated an assignment"
        return True, ""
    if kind == "holonic":
        for h in hops:
            if not _is_tree_edge(h):
                return False, f"hop {h['sender']} -> {h['recipient']} is not a holarchy edge"
        return True, ""
    return False, f"unknown strategy {kind!r}"


# -- metrics -----------------------------------------------------------------


@dataclass
class CoordinationMetrics:
    strategy: str
    conversations: int
    completed: int
    failed: int
    total_messages: int
    per_agent: dict[str, int]
    bottleneck_agent: Optional[str]
    bottleneck_load: int
    mean_discovery_latency: Optional[float]

    def to_payload(self) -> dict:
        return {
            "strategy": self.strategy,
            "conversations": self.conversations,
            "completed": self.completed,
            "failed": self.failed,
            "total_messages": self.total_messages,
            "per_agent": dict(sorted(self.per_agent.items())),
            "bottleneck_agent": self.bottleneck_agent,
            "bottleneck_load": self.bottleneck_load,
            "mean_discovery_latency": self.mean_discovery_latency,
        }


def compute_metrics(records: list[ConversationRecord], strategy: str) -> CoordinationMetrics:
    per_agent: dict[str, int] = {}
    total = 0
    latencies = []
    completed = failed = 0
    for rec in records:
        total += len(rec.hops)
        for hop in rec.hops:
            per_agent[hop["sender"]] = per_agent.get(hop["sender"], 0) + 1
            per_agent[hop["recipient"]] = per_agent.get(hop["recipient"], 0) + 1
        if rec.state == "done":
            completed += 1
            if rec.finished_at is not None:
                latencies.append(rec.finished_at - rec.started_at)
        elif rec.state == "failed":
            failed += 1
    bottleneck_agent = None
    bottleneck_load = 0
    if per_agent:
        # ties broken by agent id so the report is stable
        bottleneck_agent = min(per_agent, key=lambda a: (-per_agent[a], a))
        bottleneck_load = per_agent[bottleneck_agent]
    return CoordinationMetrics(
        strategy=strategy,
        conversations=len(records),
        completed=completed,
        failed=failed,
        total_messages=total,
        per_agent=per_agent,
        bottleneck_agent=bottleneck_agent,
        bottleneck_load=bottleneck_load,
        mean_discovery_latency=(sum(latencies) / len(latencies)) if latencies else None,
    )
