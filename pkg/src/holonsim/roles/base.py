"""Shared vocabulary for the specialized holon roles.

Message payload conventions for the trip workflow (discovery payloads
are documented in the federation module):

- request {action: "plan_trip", spec, request_id}       passenger -> root
- request {action: "decompose", spec, plan_id}          root -> planner
- request {action: "revise", spec, plan, at_node}       root -> planner
- request {action: "match_plan", spec, plan}            root -> planner
- propose {plan, request_id}                            planner -> root
- reject  {subject: request_id, reason}                 planner -> root
- command {action: "execute_leg", leg, ...}             root -> fleet
- status  {event: leg_*, ...}                           task -> fleet -> root
- inform  {event: "schedule_adjustment", adjustment}    passenger -> root
- inform  {event: "trip_update", ...}                   root -> passenger
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..holons import HolonId
from ..reasoning.types import Plan, TaskSpec

ROOT_SEGMENT = "S-SoS"
GROUND_FLEET_SEGMENT = "S-CS1"
AIR_FLEET_SEGMENT = "S-CS2"
PLANNER_SEGMENT = "planner"

ACTION_PLAN_TRIP = "plan_trip"
ACTION_DECOMPOSE = "decompose"
ACTION_REVISE = "revise"
ACTION_MATCH_PLAN = "match_plan"
ACTION_EXECUTE_LEG = "execute_leg"
EVENT_ADJUSTMENT = "schedule_adjustment"
EVENT_TRIP_UPDATE = "trip_update"

STATUS_EVENT_KINDS = ("leg_started", "leg_progress", "leg_blocked", "leg_completed", "resource_fault")
GATE_OUTCOMES = ("cleared", "fallback_activated", "rejected")
RISK_CLASSES = ("low", "high")
TRIP_STATUSES = ("planning", "gated", "active", "replanning", "completed", "aborted")

# which fleet supervisor dispatches each leg mode; walk legs carry no
# vehicle but are still tracked by the ground fleet
MODE_FLEET = {
    "scooter": GROUND_FLEET_SEGMENT,
    "ground_taxi": GROUND_FLEET_SEGMENT,
    "walk": GROUND_FLEET_SEGMENT,
    "air_taxi": AIR_FLEET_SEGMENT,
}


@dataclass(frozen=True)
class StatusEvent:
    """Progress report emitted by a task holon while executing a leg."""

    source: str
    request_id: str
    plan_id: str
    revision: int
    leg_id: str
    mode: str
    event: str
    at_node: Optional[str] = None
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.event not in STATUS_EVENT_KINDS:
            raise ValueError(f"unknown status event {self.event!r}")

    def to_payload(self) -> dict:
        return {
            "event": self.event,
            "source": self.source,
            "request_id": self.request_id,
            "plan_id": self.plan_id,
            "revision": self.revision,
            "leg_id": self.leg_id,
            "mode": self.mode,
            "at_node": self.at_node,
            "detail": dict(self.detail),
        }


@dataclass
class ApprovalRequest:
    """A high-risk plan waiting for an operator decision."""

    approval_id: str
    request_id: str
    plan_id: str
    revision: int
    risk_class: str
    submitted_at: int
    timeout_at: int
    fallback: Optional[Plan] = None
    decision: Optional[str] = None  # approved | rejected | overridden | timeout
    decided_by: Optional[str] = None

    @property
    def pending(self) -> bool:
        return self.decision is None

    def to_payload(self) -> dict:
        return {
            "approval_id": self.approval_id,
            "request_id": self.request_id,
            "plan_id": self.plan_id,
            "revision": self.revision,
            "risk_class": self.risk_class,
            "submitted_at": self.submitted_at,
            "timeout_at": self.timeout_at,
            "fallback": self.fallback.to_payload() if self.fallback else None,
            "decision": self.decision,
            "decided_by": self.decided_by,
        }


@dataclass
class TripRecord:
    """Supervisor-side ledger entry for one passenger trip."""

    request_id: str
    passenger: HolonId
    label: str
    requested_at: int
    spec: Optional[TaskSpec] = None
    plan_id: Optional[str] = None
    plan: Optional[Plan] = None
    status: str = "planning"
    at_node: Optional[str] = None
    executing_leg: Optional[str] = None
    pending_approval: Optional[str] = None
    pending_revision: bool = False
    cancel_requested: bool = False
    delay_next: int = 0
    priority: str = "normal"
    reserved: dict = field(default_factory=dict)  # leg_id -> resource_id
    completed_at: Optional[int] = None

    @property
    def active(self) -> bool:
        return self.status not in ("completed", "aborted")

    def to_payload(self) -> dict:
        return {
            "request_id": self.request_id,
            "passenger": str(self.passenger),
            "label": self.label,
            "requested_at": self.requested_at,
            "status": self.status,
            "plan_id": self.plan_id,
            "revision": self.plan.revision if self.plan else None,
            "at_node": self.at_node,
            "executing_leg": self.executing_leg,
            "pending_approval": self.pending_approval,
            "priority": self.priority,
            "completed_at": self.completed_at,
        }
