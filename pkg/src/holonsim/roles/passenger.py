"""Passenger holon: turns free-text utterances into structured intents."""

from __future__ import annotations

from typing import Optional

from ..holons import Holon, HolonId
from ..reasoning.types import NeedsClarification
from .base import ACTION_PLAN_TRIP, EVENT_ADJUSTMENT


class PassengerHolon(Holon):
    def __init__(self, id: HolonId, location: str):
        super().__init__(id, "resource_human")
        self.location = location
        self.active_request: Optional[str] = None
        self.trip_count = 0
        self.notifications: list[dict] = []

    def receive_text(self, text: str, request_id: str, label: str, sim) -> None:
        """Route an utterance: update to the active trip, or a new request.

        Update phrasing only makes sense against a live trip, so the
        interpreter runs first when one exists; anything it cannot read
        falls through to new-trip parsing.
        """
        ctx = sim.capture_context()
        if self.active_request is not None:
            try:
                adjustment = sim.reasoner.interpret_update(text, ctx, self.active_request)
            except NeedsClarification:
                adjustment = None
            if adjustment is not None:
                sim.send(
                    self.id,
                    self.parent,
                    "inform",
                    {"event": EVENT_ADJUSTMENT, "adjustment": adjustment.to_payload()},
                )
                return
        try:
            spec = sim.reasoner.parse_request(
                text,
                ctx,
                request_id=request_id,
                passenger=self.id.leaf,
                passenger_location=self.location,
                earliest_departure=sim.now(),
                trip_label=label,
            )
        except NeedsClarification as exc:
            sim.record(
                "clarification_needed",
                passenger=self.id.leaf,
                request_id=request_id,
                reason=exc.reason,
                detail=exc.detail,
            )
            return
        sim.record("task_spec", request_id=request_id, passenger=self.id.leaf, spec=spec.to_payload())
        self.active_request = request_id
        self.trip_count += 1
        sim.send(
            self.id,
            self.parent,
            "request",
            {"action": ACTION_PLAN_TRIP, "request_id": request_id, "spec": spec.to_payload()},
        )

    def handle(self, msg, ctx) -> None:
        if msg.kind == "inform":
            self.notifications.append(dict(msg.payload))
            payload = msg.payload
            if payload.get("request_id") == self.active_request and payload.get("final"):
                self.active_request = None
