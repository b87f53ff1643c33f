"""Deterministic rule-based reasoner backend.

The mock answers the same structured prompts a remote model would see,
and its response is a pure function of the prompt (the prompt carries
the full world projection, so no hidden state sneaks in). Parsing is
keyword grammar over a closed vocabulary; planning reuses the modal
combination search.
"""

from __future__ import annotations

import re
from typing import Optional

from ..holons import HolonId
from . import planning
from .types import (
    Constraint,
    NeedsClarification,
    Plan,
    PROMPT_SCHEMA_VERSION,
    ReasonerContext,
    TaskSpec,
)

DEFAULT_DELAY_TICKS = 6

_WORD = re.compile(r"[A-Za-z0-9_]+")
_MAX_COST = re.compile(r"(?:max\s+cost|budget|under|within)\s+(\d+)", re.IGNORECASE)
_DELAY_N = re.compile(r"delay(?:ed)?(?:\s+by)?\s+(\d+)|(\d+)\s+ticks?\s+late", re.IGNORECASE)

_GROUND_ONLY_HINTS = (("ground", "only"), ("no", "flying"), ("no", "air"), ("no", "flights"))


def _tokens(text: str) -> list[str]:
    return _WORD.findall(text)


class _NodeResolver:
    def __init__(self, node_ids: list[str]):
        self.exact = set(node_ids)
        lowered: dict[str, Optional[str]] = {}
        for node_id in node_ids:
            key = node_id.lower()
            lowered[key] = None if key in lowered else node_id
        self.lowered = lowered

    def resolve(self, token: str) -> Optional[str]:
        if token in self.exact:
            return token
        return self.lowered.get(token.lower())


def _first_resolvable(tokens: list[str], resolver: _NodeResolver) -> Optional[str]:
    for token in tokens:
        node = resolver.resolve(token)
        if node is not None:
            return node
    return None


def parse_request_text(
    text: str,
    ctx: ReasonerContext,
    request_id: str,
    passenger: str,
    passenger_location: Optional[str] = None,
    earliest_departure: int = 0,
    trip_label: str = "a",
) -> TaskSpec:
    """Keyword-grammar parse of a trip utterance into a TaskSpec."""
    if not text.strip():
        raise NeedsClarification("empty_request")
    resolver = _NodeResolver([n["id"] for n in ctx.nodes])
    tokens = _tokens(text)
    lowered = [t.lower() for t in tokens]

    origin = None
    if "from" in lowered:
        idx = lowered.index("from")
        tail = tokens[idx + 1 :]
        stop = [t.lower() for t in tail]
        cut = stop.index("to") if "to" in stop else len(tail)
        origin = _first_resolvable(tail[:cut], resolver)
    destination = None
    if "to" in lowered:
        # last "to" so phrasing like "I want to go from X to Y" resolves Y
        idx = len(lowered) - 1 - lowered[::-1].index("to")
        destination = _first_resolvable(tokens[idx + 1 :], resolver)

    if origin is None:
        origin = passenger_location
    if destination is None or origin is None:
        raise NeedsClarification(
            "unresolvable_location",
            "could not resolve both origin and destination to graph nodes",
        )
    if origin == destination:
        raise NeedsClarification("origin_equals_destination", f"already at {destination}")

    constraints: list[Constraint] = []
    if "turbulence" in lowered:
        constraints.append(Constraint("avoid_turbulence"))
    for a, b in _GROUND_ONLY_HINTS:
        if any(x == a and y == b for x, y in zip(lowered, lowered[1:])):
            constraints.append(Constraint("ground_only"))
            break
    costs = {int(m.group(1)) for m in _MAX_COST.finditer(text)}
    if len(costs) > 1:
        raise NeedsClarification("contradictory_constraints", f"conflicting cost limits {sorted(costs)}")
    if costs:
        constraints.append(Constraint("max_cost", costs.pop()))

    return TaskSpec(
        request_id=request_id,
        passenger=HolonId.parse(passenger),
        origin=origin,
        destination=destination,
        earliest_departure=earliest_departure,
        constraints=tuple(constraints),
        free_text=text,
        trip_label=trip_label,
    )


def interpret_update_text(text: str, request_id: str) -> dict:
    """Map a free-text update onto a schedule adjustment payload."""
    if not text.strip():
        raise NeedsClarification("empty_update")
    low = text.lower()
    if "cancel" in low:
        return {"request_id": request_id, "kind": "cancel", "magnitude": 0}
    match = _DELAY_N.search(text)
    if match:
        magnitude = int(match.group(1) or match.group(2))
        return {"request_id": request_id, "kind": "delay_departure", "magnitude": max(1, magnitude)}
    if "late" in low or "delay" in low:
        return {"request_id": request_id, "kind": "delay_departure", "magnitude": DEFAULT_DELAY_TICKS}
    if "urgent" in low or "asap" in low or "priority" in low:
        return {"request_id": request_id, "kind": "reprioritize", "magnitude": 0}
    raise NeedsClarification("unrecognized_update", text[:80])


class MockBackend:
    """Pure rule-based backend speaking the reasoner wire schema."""

    name = "mock"

    def call(self, prompt: dict) -> dict:
        task = prompt["task"]
        response = self._dispatch(task)
        return {"response": response, "schema_version": PROMPT_SCHEMA_VERSION}

    def _dispatch(self, task: dict) -> dict:
        op = task.get("op")
        args = task.get("args", {})
        ctx = ReasonerContext.from_prompt_context(task["context"])
        try:
            if op == "parse_request":
                spec = parse_request_text(
                    args["text"],
                    ctx,
                    request_id=args["request_id"],
                    passenger=args["passenger"],
                    passenger_location=args.get("passenger_location"),
                    earliest_departure=args.get("earliest_departure", 0),
                    trip_label=args.get("trip_label", "a"),
                )
                return {"task_spec": spec.to_payload()}
            if op == "generate_plan":
                spec = TaskSpec.from_payload(args["spec"])
                view = ctx.routing_view()
                combos = planning.enumerate_combos(view, ctx, spec)
                if not combos:
                    return {"error": {"kind": "no_feasible_plan", "reason": "no admissible modal combination"}}
                combos.sort(key=lambda c: (c[0], c[1]))
                return {"legs": combos[0][2], "alternates": [c[2] for c in combos[1:]]}
            if op == "revise_plan":
                spec = TaskSpec.from_payload(args["spec"])
                plan = Plan.from_payload(args["plan"])
                candidates = planning.revision_skeletons(
                    ctx, spec, plan.remaining_legs, args["at_node"]
                )
                if not candidates:
                    return {"error": {"kind": "no_feasible_revision", "reason": "no candidate routes"}}
                return {"legs": candidates[0], "alternates": candidates[1:]}
            if op == "interpret_update":
                return {"adjustment": interpret_update_text(args["text"], args["request_id"])}
        except NeedsClarification as exc:
            return {"error": {"kind": "needs_clarification", "reason": exc.reason, "detail": exc.detail}}
        return {"error": {"kind": "unsupported_op", "reason": str(op)}}
