"""Post-hoc log checks: structural invariants and sequence-template matching.

All checks work on the plain record dicts a LogStore produces (or a loaded
NDJSON file). Nothing here touches the live simulation, so the checks stay
independent of the code paths that wrote the log.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

from .logstore import encode_record

_MISSING = object()

GATE_CLEAR_OUTCOMES = ("cleared", "fallback_activated")
TERMINAL_LEG_EVENTS = ("leg_completed", "leg_blocked")


@dataclass
class CheckResult:
    name: str
    passed: bool
    details: list[str] = field(default_factory=list)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({self.details[0]})" if self.details and not self.passed else ""
        return f"{status} {self.name}{extra}"


def log_digest(records: list[dict]) -> str:
    import hashlib

    h = hashlib.sha256()
    for rec in records:
        h.update(encode_record(rec).encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


def check_monotone(records: list[dict]) -> CheckResult:
    """Sequence numbers count up from zero and ticks never run backwards."""
    details = []
    last_tick = None
    for i, rec in enumerate(records):
        if rec.get("seq") != i:
            details.append(f"record {i}: seq {rec.get('seq')} != {i}")
            break
        tick = rec.get("tick")
        if not isinstance(tick, int):
            details.append(f"record {i}: non-integer tick {tick!r}")
            break
        if last_tick is not None and tick < last_tick:
            details.append(f"record {i}: tick {tick} < {last_tick}")
            break
        last_tick = tick
    return CheckResult("monotone_order", not details, details)


def check_gate_totality(records: list[dict]) -> CheckResult:
    """No air leg starts without a prior clearing gate outcome for its plan."""
    details = []
    cleared: set[tuple] = set()
    for rec in records:
        if rec.get("kind") == "gate_outcome":
            p = rec["payload"]
            if p.get("outcome") == "cleared":
                cleared.add((p.get("plan_id"), p.get("revision")))
            elif p.get("outcome") == "fallback_activated":
                cleared.add((p.get("plan_id"), p.get("fallback_revision")))
        elif rec.get("kind") == "status":
            p = rec["payload"]
            if p.get("event") == "leg_started" and p.get("mode") == "air_taxi":
                key = (p.get("plan_id"), p.get("revision"))
                if key not in cleared:
                    details.append(
                        f"seq {rec['seq']}: air leg {p.get('leg_id')} started without "
                        f"gate clearance for plan {key[0]} rev {key[1]}"
                    )
    return CheckResult("gate_totality", not details, details)


def check_gate_order(records: list[dict]) -> CheckResult:
    """Gate steps run 1 then 2 then 3 per plan revision; a failed step ends the run."""
    details = []
    steps: dict[tuple, list[dict]] = {}
    outcomes: dict[tuple, int] = {}
    for rec in records:
        if rec.get("kind") == "gate_step":
            p = rec["payload"]
            steps.setdefault((p.get("plan_id"), p.get("revision")), []).append(p)
        elif rec.get("kind") == "gate_outcome":
            p = rec["payload"]
            key = (p.get("plan_id"), p.get("revision"))
            outcomes[key] = outcomes.get(key, 0) + 1
    for key, seq in steps.items():
        numbers = [p.get("step") for p in seq]
        if numbers != sorted(numbers) or len(set(numbers)) != len(numbers):
            details.append(f"plan {key}: gate steps out of order {numbers}")
            continue
        if numbers and numbers[0] != 1:
            details.append(f"plan {key}: gate starts at step {numbers[0]}")
            continue
        if numbers == [1, 3] or (len(numbers) > 1 and numbers != list(range(1, len(numbers) + 1))):
            details.append(f"plan {key}: gate skipped a step {numbers}")
            continue
        for i, p in enumerate(seq):
            if p.get("outcome") == "fail" and i != len(seq) - 1:
                details.append(f"plan {key}: steps continued after failed step {p.get('step')}")
                break
    for key, count in outcomes.items():
        if count > 1:
            details.append(f"plan {key}: {count} gate outcomes")
    return CheckResult("gate_step_order", not details, details)


def check_status_discipline(records: list[dict]) -> CheckResult:
    """Each leg starts once, ends at most once, and completions follow plan order."""
    details = []
    seen: dict[tuple, list[str]] = {}
    plan_orders: dict[tuple, list[str]] = {}
    completions: dict[tuple, list[str]] = {}
    for rec in records:
        if rec.get("kind") == "plan_activated":
            p = rec["payload"]
            legs = [leg.get("leg_id") for leg in p.get("plan", {}).get("legs", [])]
            plan_orders[(p.get("plan_id"), p.get("revision"))] = legs
        if rec.get("kind") != "status":
            continue
        p = rec["payload"]
        key = (p.get("plan_id"), p.get("revision"), p.get("leg_id"))
        events = seen.setdefault(key, [])
        event = p.get("event")
        if event == "leg_started" and "leg_started" in events:
            details.append(f"seq {rec['seq']}: leg {key[2]} started twice")
        if event in ("leg_progress", *TERMINAL_LEG_EVENTS) and "leg_started" not in events:
            details.append(f"seq {rec['seq']}: {event} for {key[2]} before leg_started")
        if any(e in TERMINAL_LEG_EVENTS for e in events):
            details.append(f"seq {rec['seq']}: {event} for {key[2]} after terminal event")
        events.append(event)
        if event == "leg_completed":
            completions.setdefault((p.get("plan_id"), p.get("revision")), []).append(
                p.get("leg_id")
            )
    for key, done in completions.items():
        order = plan_orders.get(key)
        if order is None:
            continue
        positions = [order.index(leg) for leg in done if leg in order]
        if positions != sorted(positions):
            details.append(f"plan {key}: completions out of plan order {done}")
    return CheckResult("status_discipline", not details, details)


def check_fallback_timeliness(records: list[dict]) -> CheckResult:
    """A fallback activates no later than one tick past its approval deadline."""
    details = []
    deadlines: dict[tuple, int] = {}
    for rec in records:
        kind = rec.get("kind")
        p = rec.get("payload", {})
        if kind == "gate_step" and p.get("step") == 3 and p.get("outcome") == "pending":
            deadlines[(p.get("plan_id"), p.get("revision"))] = p.get("timeout_at")
        elif kind == "gate_outcome" and p.get("outcome") == "fallback_activated":
            key = (p.get("plan_id"), p.get("revision"))
            timeout_at = deadlines.get(key)
            if timeout_at is None:
                details.append(f"seq {rec['seq']}: fallback for {key} without pending approval")
            elif rec["tick"] > timeout_at + 1:
                details.append(
                    f"seq {rec['seq']}: fallback at tick {rec['tick']} "
                    f"past deadline {timeout_at}"
                )
    return CheckResult("fallback_timeliness", not details, details)


def check_conversation_closure(records: list[dict]) -> CheckResult:
    details = []
    open_convs: dict[str, int] = {}
    for rec in records:
        p = rec.get("payload", {})
        if rec.get("kind") == "conversation_started":
            open_convs[p.get("conv")] = rec["seq"]
        elif rec.get("kind") == "conversation_finished":
            open_convs.pop(p.get("conv"), None)
    for conv, seq in sorted(open_convs.items(), key=lambda kv: kv[1]):
        details.append(f"conversation {conv} (seq {seq}) never finished")
    return CheckResult("conversation_closure", not details, details)


# -- sequence templates --------------------------------------------------------


def resolve_path(record: dict, path: str) -> Any:
    """Walk a dotted path through nested dicts; digit parts index lists."""
    value: Any = record
    for part in path.split("."):
        if isinstance(value, dict) and part in value:
            value = value[part]
        elif isinstance(value, list) and part.isdigit() and int(part) < len(value):
            value = value[int(part)]
        else:
            return _MISSING
    return value


@dataclass
class SequenceMatch:
    ok: bool
    matched: list[tuple[int, int]] = field(default_factory=list)  # (step index, record seq)
    bindings: dict[str, Any] = field(default_factory=dict)
    failed_step: Optional[int] = None
    detail: str = ""


def _step_matches(record: dict, step: dict, bindings: dict) -> Optional[dict]:
    trial = dict(bindings)
    for path, expected in step.items():
        actual = resolve_path(record, path)
        if actual is _MISSING:
            return None
        if isinstance(expected, str) and expected.startswith("$"):
            if expected in trial:
                if trial[expected] != actual:
                    return None
            else:
                trial[expected] = actual
        elif actual != expected:
            return None
    return trial


def match_sequence(records: list[dict], template: list[dict]) -> SequenceMatch:
    """Match template steps as a subsequence of the log.

    A step is a mapping of dotted record paths to expected values. String
    values beginning with `$` are variables: they bind on first use and must
    agree on every later use. Matching is greedy; backtracking is not needed
    because earlier bindings only ever narrow later steps.
    """
    bindings: dict[str, Any] = {}
    matched: list[tuple[int, int]] = []
    pos = 0
    for idx, step in enumerate(template):
        found = False
        while pos < len(records):
            rec = records[pos]
            trial = _step_matches(rec, step, bindings)
            pos += 1
            if trial is not None:
                bindings = trial
                matched.append((idx, rec["seq"]))
                found = True
                break
        if not found:
            return SequenceMatch(
                False,
                matched,
                bindings,
                failed_step=idx,
                detail=f"template step {idx} unmatched: {step}",
            )
    return SequenceMatch(True, matched, bindings)


STRUCTURAL_CHECKS = (
    check_monotone,
    check_gate_totality,
    check_gate_order,
    check_status_discipline,
    check_fallback_timeliness,
    check_conversation_closure,
)


def verify_log(records: list[dict], template: Optional[list[dict]] = None) -> list[CheckResult]:
    results = [check(records) for check in STRUCTURAL_CHECKS]
    if template is not None:
        match = match_sequence(records, template)
        results.append(
            CheckResult("sequence_template", match.ok, [match.detail] if match.detail else [])
        )
    return results
