"""Toy regulation rule set and the pure plan validator.

Rules live in a structured file (ids, parameters, enabled flags) so a
scenario can swap or disable individual checks. Each rule id doubles as
the violation id it emits, which keeps verdicts self-describing.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..kernel.world import DRAIN_PER_TICK
from .types import Plan, ReasonerContext

# vertiport_closed covers no-fly zones too: both make air ops illegal there
KNOWN_RULES = (
    "vertiport_closed",
    "vertiport_capacity",
    "battery_insufficient",
    "resource_overlap",
)


class RuleSetError(ValueError):
    """Raised when a rule file is malformed."""


@dataclass(frozen=True)
class Rule:
    id: str
    enabled: bool = True
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Verdict:
    ok: bool
    violations: tuple[dict, ...] = ()


class RuleSet:
    """Ordered collection of regulation rules."""

    def __init__(self, rules: list[Rule]):
        seen = set()
        for rule in rules:
            if rule.id not in KNOWN_RULES:
                raise RuleSetError(f"unknown rule id {rule.id!r}")
            if rule.id in seen:
                raise RuleSetError(f"duplicate rule id {rule.id!r}")
            seen.add(rule.id)
        self.rules = tuple(rules)

    @classmethod
    def default(cls) -> "RuleSet":
        return cls([Rule(id=rid) for rid in KNOWN_RULES])

    @classmethod
    def from_file(cls, path: str | Path) -> "RuleSet":
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise RuleSetError(f"cannot load rule file {path}: {exc}") from exc
        entries = raw.get("rules")
        if not isinstance(entries, list):
            raise RuleSetError("rule file must have a top-level 'rules' list")
        rules = []
        for entry in entries:
            if not isinstance(entry, dict) or "id" not in entry:
                raise RuleSetError(f"malformed rule entry: {entry!r}")
            rules.append(
                Rule(
                    id=entry["id"],
                    enabled=bool(entry.get("enabled", True)),
                    params=dict(entry.get("params", {})),
                )
            )
        return cls(rules)

    def enabled_ids(self) -> list[str]:
        return [r.id for r in self.rules if r.enabled]

    def rule(self, rule_id: str) -> Optional[Rule]:
        for r in self.rules:
            if r.id == rule_id:
                return r
        return None

    def digest(self) -> str:
        canonical = json.dumps(
            [{"id": r.id, "enabled": r.enabled, "params": r.params} for r in self.rules],
            sort_keys=True,
            separators=(",", ":"),
        )
        return hashlib.sha256(canonical.encode()).hexdigest()


def _overlaps(s1: int, e1: int, s2: int, e2: int) -> bool:
    return s1 < e2 and s2 < e1


def _check_vertiport_closed(plan: Plan, ctx: ReasonerContext) -> list[dict]:
    closed = set(ctx.closed_vertiports)
    out = []
    for leg in plan.remaining_legs:
        if leg.mode != "air_taxi":
            continue
        for node in (leg.origin, leg.destination):
            if node in closed:
                out.append(
                    {"rule": "vertiport_closed", "leg": leg.leg_id, "detail": f"vertiport {node} unavailable"}
                )
    return out


def _check_vertiport_capacity(plan: Plan, ctx: ReasonerContext) -> list[dict]:
    capacity = {n["id"]: n.get("capacity", 1) for n in ctx.nodes if n["kind"] == "vertiport"}
    # ops already booked by other plans, per (vertiport, tick)
    booked: dict[tuple[str, int], int] = {}
    for entry in ctx.occupancy:
        if "vertiport" in entry and entry.get("plan_id") != plan.plan_id:
            key = (entry["vertiport"], entry["tick"])
            booked[key] = booked.get(key, 0) + 1
    out = []
    own: dict[tuple[str, int], int] = {}
    for leg in plan.remaining_legs:
        if leg.mode != "air_taxi":
            continue
        for node, tick in ((leg.origin, leg.planned_start), (leg.destination, leg.planned_end)):
            key = (node, tick)
            own[key] = own.get(key, 0) + 1
            total = booked.get(key, 0) + own[key]
            if node in capacity and total > capacity[node]:
                out.append(
                    {
                        "rule": "vertiport_capacity",
                        "leg": leg.leg_id,
                        "detail": f"{node} over capacity at tick {tick} ({total} > {capacity[node]})",
                    }
                )
    return out


def _check_battery_insufficient(plan: Plan, ctx: ReasonerContext, params: dict) -> list[dict]:
    drain = dict(DRAIN_PER_TICK)
    drain.update(params.get("drain", {}))
    battery = {r["id"]: r["battery"] for r in ctx.resources}
    out = []
    for leg in plan.remaining_legs:
        if not leg.assigned_resource or leg.mode not in drain:
            continue
        if leg.assigned_resource not in battery:
            out.append(
                {
                    "rule": "battery_insufficient",
                    "leg": leg.leg_id,
                    "detail": f"unknown resource {leg.assigned_resource}",
                }
            )
            continue
        required = leg.duration * drain[leg.mode]
        if battery[leg.assigned_resource] < required:
            out.append(
                {
                    "rule": "battery_insufficient",
                    "leg": leg.leg_id,
                    "detail": (
                        f"{leg.assigned_resource} has {battery[leg.assigned_resource]:.0f}%, "
                        f"leg needs {required:.0f}%"
                    ),
                }
            )
    return out


def _check_resource_overlap(plan: Plan, ctx: ReasonerContext) -> list[dict]:
    out = []
    remaining = [leg for leg in plan.remaining_legs if leg.assigned_resource]
    for i, leg in enumerate(remaining):
        for other in remaining[:i]:
            if other.assigned_resource != leg.assigned_resource:
                continue
            if _overlaps(leg.planned_start, leg.planned_end, other.planned_start, other.planned_end):
                out.append(
                    {
                        "rule": "resource_overlap",
                        "leg": leg.leg_id,
                        "detail": f"{leg.assigned_resource} also serves {other.leg_id}",
                    }
                )
        for entry in ctx.occupancy:
            if "resource" not in entry or entry.get("plan_id") == plan.plan_id:
                continue
            if entry["resource"] != leg.assigned_resource:
                continue
            if _overlaps(leg.planned_start, leg.planned_end, entry["start"], entry["end"]):
                out.append(
                    {
                        "rule": "resource_overlap",
                        "leg": leg.leg_id,
                        "detail": f"{leg.assigned_resource} booked by plan {entry['plan_id']}",
                    }
                )
    return out


def validate_plan(plan: Plan, rules: RuleSet, ctx: ReasonerContext) -> Verdict:
    """Check a draft plan against every enabled rule. Pure."""
    violations: list[dict] = []
    for rule in rules.rules:
        if not rule.enabled:
            continue
        if rule.id == "vertiport_closed":
            violations.extend(_check_vertiport_closed(plan, ctx))
        elif rule.id == "vertiport_capacity":
            violations.extend(_check_vertiport_capacity(plan, ctx))
        elif rule.id == "battery_insufficient":
            violations.extend(_check_battery_insufficient(plan, ctx, rule.params))
        elif rule.id == "resource_overlap":
            violations.extend(_check_resource_overlap(plan, ctx))
    return Verdict(ok=not violations, violations=tuple(violations))
