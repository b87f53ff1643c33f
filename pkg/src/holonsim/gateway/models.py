"""Request/response documents for the HTTP surface.

Pydantic stays at this boundary; the core package trades in plain
dataclasses and dicts.
"""

from __future__ import annotations

from typing import Any, Literal, Optional, Union

from pydantic import BaseModel, Field

from ..runtime import COMMAND_KINDS


class CreateRunRequest(BaseModel):
    scenario: Union[str, dict]  # bundled name, file path, or inline document
    seed: Optional[int] = None
    strategy: Literal["facilitator", "broker", "matchmaker", "mediator", "holonic"] = "holonic"
    ticks_per_second: Optional[float] = Field(default=None, gt=0)
    paused: bool = False  # start frozen; step commands advance one event tick each


class RunDescriptor(BaseModel):
    run_id: str
    scenario: str
    seed: int
    status: str
    tick: int
    strategy: str


class TripSubmission(BaseModel):
    passenger: str
    text: str


class TripAck(BaseModel):
    request_id: str
    command_id: str
    at_tick: int


class CommandSubmission(BaseModel):
    kind: str
    payload: dict = Field(default_factory=dict)

    def validated_kind(self) -> str:
        if self.kind not in COMMAND_KINDS:
            raise ValueError(f"unknown command kind {self.kind!r}")
        return self.kind


class CommandAck(BaseModel):
    command_id: str
    kind: str
    at_tick: int


class ApprovalView(BaseModel):
    approval_id: str
    request_id: str
    plan_id: str
    revision: int
    risk_class: str
    submitted_at: int
    timeout_at: int
    fallback: Optional[dict] = None
    decision: Optional[str] = None
    decided_by: Optional[str] = None


class EventsPage(BaseModel):
    events: list[dict]
    next: int


class StateView(BaseModel):
    run_id: str
    tick: int
    status: str
    strategy: str
    trips: list[dict]
    resources: list[dict]
    active_disruptions: list[dict]
    pending_approvals: list[dict]


class MetricsView(BaseModel):
    run_id: str
    tick: int
    status: str
    trips: dict
    mean_trip_duration: Optional[float] = None
    reasoner_fallbacks: int
    coordination: dict


class ErrorBody(BaseModel):
    error: str
    detail: Any = None
