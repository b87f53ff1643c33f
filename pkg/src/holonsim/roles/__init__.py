from .base import (
    ACTION_DECOMPOSE,
    ACTION_EXECUTE_LEG,
    ACTION_MATCH_PLAN,
    ACTION_PLAN_TRIP,
    ACTION_REVISE,
    AIR_FLEET_SEGMENT,
    ApprovalRequest,
    EVENT_ADJUSTMENT,
    EVENT_TRIP_UPDATE,
    GATE_OUTCOMES,
    GROUND_FLEET_SEGMENT,
    MODE_FLEET,
    PLANNER_SEGMENT,
    RISK_CLASSES,
    ROOT_SEGMENT,
    STATUS_EVENT_KINDS,
    StatusEvent,
    TRIP_STATUSES,
    TripRecord,
)
from .fleet import FleetSupervisor, ResourceHolon, TaskHolon, VertiportHolon
from .passenger import PassengerHolon
from .planner import WALK_SUBSTITUTION_MAX_TICKS, PlanJob, PlannerHolon
from .supervisor import RootSupervisor

__all__ = [
    "ACTION_DECOMPOSE",
    "ACTION_EXECUTE_LEG",
    "ACTION_MATCH_PLAN",
    "ACTION_PLAN_TRIP",
    "ACTION_REVISE",
    "AIR_FLEET_SEGMENT",
    "ApprovalRequest",
    "EVENT_ADJUSTMENT",
    "EVENT_TRIP_UPDATE",
    "FleetSupervisor",
    "GATE_OUTCOMES",
    "GROUND_FLEET_SEGMENT",
    "MODE_FLEET",
    "PLANNER_SEGMENT",
    "PassengerHolon",
    "PlanJob",
    "PlannerHolon",
    "ResourceHolon",
    "RISK_CLASSES",
    "ROOT_SEGMENT",
    "RootSupervisor",
    "STATUS_EVENT_KINDS",
    "StatusEvent",
    "TaskHolon",
    "TRIP_STATUSES",
    "TripRecord",
    "VertiportHolon",
    "WALK_SUBSTITUTION_MAX_TICKS",
]
