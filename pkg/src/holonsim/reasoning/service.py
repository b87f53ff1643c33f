"""Reasoner facade: one entry point over pluggable backends.

Holons talk to this, not to backends directly. The facade builds wire
prompts, schema-checks whatever comes back, and falls back to the mock
when the remote backend is unreachable, too slow, or malformed. Mock
and remote answer the same prompts, so swapping backends never changes
any schema downstream.
"""

from __future__ import annotations

from typing import Callable, Optional

from . import planning
from .mock import MockBackend
from .rules import RuleSet, Verdict, validate_plan
from .types import (
    BackendUnavailable,
    LEG_MODES,
    NeedsClarification,
    NoFeasiblePlan,
    NoFeasibleRevision,
    Leg,
    Plan,
    PROMPT_SCHEMA_VERSION,
    ReasonerContext,
    ScheduleAdjustment,
    SchemaViolation,
    TaskSpec,
    Timeout,
)

DEFAULT_ROLE_PROMPT = "You coordinate trips for an urban air mobility network."

_ADJUSTMENT_KINDS = ("delay_departure", "advance_departure", "cancel", "reprioritize")

_FALLBACK_ERRORS = (BackendUnavailable, SchemaViolation, Timeout)


def build_prompt(role_prompt: str, ctx: ReasonerContext, op: str, args: dict) -> dict:
    return {
        "role_prompt": role_prompt,
        "context_digest": ctx.digest(),
        "task": {"op": op, "args": args, "context": ctx.to_prompt_context()},
        "schema_version": PROMPT_SCHEMA_VERSION,
    }


class Reasoner:
    """Backend registry plus the reasoning operations holons use."""

    def __init__(
        self,
        backends: Optional[dict] = None,
        primary: str = "mock",
        on_fallback: Optional[Callable[[str, Exception], None]] = None,
    ):
        self.backends: dict = {"mock": MockBackend()}
        if backends:
            self.backends.update(backends)
        if primary not in self.backends:
            raise ValueError(f"unknown backend {primary!r}")
        self.primary = primary
        self.on_fallback = on_fallback
        self.fallback_count = 0

    # -- wire level ----------------------------------------------------

    def reasoner_call(self, prompt: dict, backend: Optional[str] = None) -> dict:
        """Send one structured prompt to one backend; no fallback here."""
        name = backend or self.primary
        if name not in self.backends:
            raise BackendUnavailable(f"backend {name!r} not registered")
        envelope = self.backends[name].call(prompt)
        if not isinstance(envelope, dict) or not isinstance(envelope.get("response"), dict):
            raise SchemaViolation("backend envelope missing 'response' document")
        if envelope.get("schema_version") != PROMPT_SCHEMA_VERSION:
            raise SchemaViolation(f"unexpected schema_version {envelope.get('schema_version')!r}")
        return envelope["response"]

    def _raise_for_error(self, response: dict) -> None:
        error = response.get("error")
        if error is None:
            return
        kind = error.get("kind") if isinstance(error, dict) else None
        reason = error.get("reason", "") if isinstance(error, dict) else ""
        detail = error.get("detail", "") if isinstance(error, dict) else ""
        if kind == "needs_clarification":
            raise NeedsClarification(reason or "unclear", detail)
        if kind == "no_feasible_plan":
            raise NoFeasiblePlan(reason or "no feasible plan")
        if kind == "no_feasible_revision":
            raise NoFeasibleRevision(reason or "no feasible revision")
        raise SchemaViolation(f"backend reported unknown error kind {kind!r}")

    def _invoke(self, role_prompt: str, ctx: ReasonerContext, op: str, args: dict, decode: Callable):
        prompt = build_prompt(role_prompt, ctx, op, args)
        order = [self.primary] if self.primary == "mock" else [self.primary, "mock"]
        for i, name in enumerate(order):
            try:
                response = self.reasoner_call(prompt, backend=name)
                self._raise_for_error(response)
                return decode(response)
            except _FALLBACK_ERRORS as exc:
                if i + 1 < len(order):
                    self.fallback_count += 1
                    if self.on_fallback:
                        self.on_fallback(name, exc)
                    continue
                raise
        raise BackendUnavailable("no backend answered")  # unreachable

    # -- response schemas ----------------------------------------------

    @staticmethod
    def _check_skeletons(skeletons, ctx: ReasonerContext, strict: bool) -> Optional[list[dict]]:
        node_ids = {n["id"] for n in ctx.nodes}
        if not isinstance(skeletons, list) or not skeletons:
            if strict:
                raise SchemaViolation("plan response needs a non-empty 'legs' list")
            return None
        out = []
        for leg in skeletons:
            ok = (
                isinstance(leg, dict)
                and leg.get("mode") in LEG_MODES
                and leg.get("origin") in node_ids
                and leg.get("destination") in node_ids
            )
            if not ok:
                if strict:
                    raise SchemaViolation(f"malformed leg skeleton: {leg!r}")
                return None
            out.append(leg)
        return out

    def _decode_plan_response(self, response: dict, ctx: ReasonerContext) -> list[list[dict]]:
        if "legs" not in response:
            raise SchemaViolation("plan response missing 'legs' field")
        legs = self._check_skeletons(response["legs"], ctx, strict=True)
        candidates = [legs]
        for alt in response.get("alternates", []) or []:
            checked = self._check_skeletons(alt, ctx, strict=False)
            if checked is not None:
                candidates.append(checked)
        return candidates

    # -- reasoning operations ------------------------------------------

    def parse_request(
        self,
        text: str,
        ctx: ReasonerContext,
        request_id: str,
        passenger: str,
        passenger_location: Optional[str] = None,
        earliest_departure: int = 0,
        trip_label: str = "a",
        role_prompt: str = DEFAULT_ROLE_PROMPT,
    ) -> TaskSpec:
        if not text or not text.strip():
            raise NeedsClarification("empty_request")
        args = {
            "text": text,
            "request_id": request_id,
            "passenger": passenger,
            "passenger_location": passenger_location,
            "earliest_departure": earliest_departure,
            "trip_label": trip_label,
        }

        def decode(response: dict) -> TaskSpec:
            payload = response.get("task_spec")
            if not isinstance(payload, dict):
                raise SchemaViolation("parse response missing 'task_spec'")
            try:
                return TaskSpec.from_payload(payload)
            except (KeyError, ValueError, TypeError) as exc:
                raise SchemaViolation(f"malformed task_spec: {exc}") from exc

        return self._invoke(role_prompt, ctx, "parse_request", args, decode)

    def generate_plan(
        self,
        spec: TaskSpec,
        ctx: ReasonerContext,
        plan_id: str,
        role_prompt: str = DEFAULT_ROLE_PROMPT,
    ) -> Plan:
        args = {"spec": spec.to_payload()}
        candidates = self._invoke(
            role_prompt, ctx, "generate_plan", args, lambda r: self._decode_plan_response(r, ctx)
        )
        for skeletons in candidates:
            try:
                return planning.materialize(ctx, spec, skeletons, plan_id=plan_id)
            except NoFeasiblePlan:
                continue
        raise NoFeasiblePlan(f"no proposed combination is routable for {spec.request_id}")

    def revise_plan(
        self,
        plan: Plan,
        spec: TaskSpec,
        ctx: ReasonerContext,
        at_node: str,
        completed_prefix: tuple[Leg, ...] = (),
        rules: Optional[RuleSet] = None,
        role_prompt: str = DEFAULT_ROLE_PROMPT,
    ) -> Plan:
        args = {"spec": spec.to_payload(), "plan": plan.to_payload(), "at_node": at_node}
        candidates = self._invoke(
            role_prompt, ctx, "revise_plan", args, lambda r: self._decode_plan_response(r, ctx)
        )
        for skeletons in candidates:
            try:
                revised = planning.materialize(
                    ctx,
                    spec,
                    skeletons,
                    plan_id=plan.plan_id,
                    revision=plan.revision + 1,
                    start_tick=ctx.tick,
                    completed_prefix=completed_prefix,
                )
            except NoFeasiblePlan:
                continue
            if rules is None or validate_plan(revised, rules, ctx).ok:
                return revised
        raise NoFeasibleRevision(f"no feasible revision for {plan.plan_id} from {at_node}")

    def interpret_update(
        self,
        text: str,
        ctx: ReasonerContext,
        request_id: str,
        role_prompt: str = DEFAULT_ROLE_PROMPT,
    ) -> ScheduleAdjustment:
        if not text or not text.strip():
            raise NeedsClarification("empty_update")
        args = {"text": text, "request_id": request_id}

        def decode(response: dict) -> ScheduleAdjustment:
            payload = response.get("adjustment")
            if not isinstance(payload, dict) or payload.get("kind") not in _ADJUSTMENT_KINDS:
                raise SchemaViolation("update response missing a valid 'adjustment'")
            try:
                return ScheduleAdjustment(
                    request_id=payload.get("request_id", request_id),
                    kind=payload["kind"],
                    magnitude=int(payload.get("magnitude", 0)),
                )
            except (ValueError, TypeError) as exc:
                raise SchemaViolation(f"malformed adjustment: {exc}") from exc

        return self._invoke(role_prompt, ctx, "interpret_update", args, decode)

    @staticmethod
    def validate(plan: Plan, rules: RuleSet, ctx: ReasonerContext) -> Verdict:
        return validate_plan(plan, rules, ctx)
