"""Log verifier: every structural check must catch its own violation class."""

import copy

import pytest

from holonsim.runtime import Simulation
from holonsim.verify import (
    check_conversation_closure,
    check_fallback_timeliness,
    check_gate_order,
    check_gate_totality,
    check_monotone,
    check_status_discipline,
    log_digest,
    match_sequence,
    resolve_path,
    verify_log,
)

from test_roles import air_city, has_pending_approval, run_until


@pytest.fixture(scope="module")
def clean_log():
    """One full approved air trip; mutated copies feed the negative cases."""
    sim = Simulation(air_city(approval_timeout=40))
    assert run_until(sim, has_pending_approval)
    sim.submit_command("approve", {"approval_id": "*"})
    sim.run()
    assert next(iter(sim.trips.values())).status == "completed"
    return sim.log.records


def mutated(records, pred, fn):
    out = copy.deepcopy(records)
    for rec in out:
        if pred(rec):
            fn(rec)
            return out
    raise AssertionError("mutation target not found")


class TestStructuralChecks:
    def test_clean_log_passes_everything(self, clean_log):
        for result in verify_log(clean_log):
            assert result.passed, result.line()

    def test_monotone_catches_seq_gap(self, clean_log):
        bad = copy.deepcopy(clean_log)
        bad[3]["seq"] = 99
        result = check_monotone(bad)
        assert not result.passed and "seq" in result.details[0]

    def test_monotone_catches_backwards_tick(self, clean_log):
        bad = copy.deepcopy(clean_log)
        bad[-1]["tick"] = 0
        assert bad[-2]["tick"] > 0
        result = check_monotone(bad)
        assert not result.passed

    def test_gate_totality_catches_unapproved_air_start(self, clean_log):
        bad = [
            r
            for r in copy.deepcopy(clean_log)
            if not (r["kind"] == "gate_outcome" and r["payload"].get("outcome") == "cleared")
        ]
        for i, rec in enumerate(bad):
            rec["seq"] = i
        result = check_gate_totality(bad)
        assert not result.passed and "without" in result.details[0]

    def test_gate_order_catches_skipped_step(self, clean_log):
        bad = [
            r
            for r in copy.deepcopy(clean_log)
            if not (r["kind"] == "gate_step" and r["payload"].get("step") == 2)
        ]
        for i, rec in enumerate(bad):
            rec["seq"] = i
        result = check_gate_order(bad)
        assert not result.passed and "skipped" in result.details[0]

    def test_gate_order_catches_continuation_after_failure(self, clean_log):
        bad = mutated(
            clean_log,
            lambda r: r["kind"] == "gate_step" and r["payload"]["step"] == 1,
            lambda r: r["payload"].__setitem__("outcome", "fail"),
        )
        result = check_gate_order(bad)
        assert not result.passed and "after failed step" in result.details[0]

    def test_gate_order_catches_double_outcome(self, clean_log):
        bad = copy.deepcopy(clean_log)
        outcome = next(r for r in bad if r["kind"] == "gate_outcome")
        dup = copy.deepcopy(outcome)
        dup["seq"] = len(bad)
        bad.append(dup)
        result = check_gate_order(bad)
        assert not result.passed and "gate outcomes" in result.details[0]

    def test_status_discipline_catches_double_start(self, clean_log):
        bad = copy.deepcopy(clean_log)
        start = next(
            r
            for r in bad
            if r["kind"] == "status" and r["payload"].get("event") == "leg_started"
        )
        dup = copy.deepcopy(start)
        dup["seq"] = len(bad)
        dup["tick"] = bad[-1]["tick"]
        bad.append(dup)
        result = check_status_discipline(bad)
        assert not result.passed and "started twice" in result.details[0]

    def test_status_discipline_catches_event_before_start(self, clean_log):
        bad = mutated(
            clean_log,
            lambda r: r["kind"] == "status" and r["payload"].get("event") == "leg_started",
            lambda r: r["payload"].__setitem__("event", "leg_progress"),
        )
        result = check_status_discipline(bad)
        assert not result.passed and "before leg_started" in result.details[0]

    def test_status_discipline_catches_out_of_order_completion(self, clean_log):
        bad = copy.deepcopy(clean_log)
        completions = [
            r
            for r in bad
            if r["kind"] == "status" and r["payload"].get("event") == "leg_completed"
        ]
        assert len(completions) >= 2
        completions[0]["payload"]["leg_id"], completions[1]["payload"]["leg_id"] = (
            completions[1]["payload"]["leg_id"],
            completions[0]["payload"]["leg_id"],
        )
        result = check_status_discipline(bad)
        assert not result.passed

    def test_conversation_closure_catches_dangling_conv(self, clean_log):
        bad = [
            r
            for r in copy.deepcopy(clean_log)
            if r["kind"] != "conversation_finished"
        ]
        for i, rec in enumerate(bad):
            rec["seq"] = i
        result = check_conversation_closure(bad)
        assert not result.passed and "never finished" in result.details[0]


@pytest.fixture(scope="module")
def fallback_log():
    sim = Simulation(air_city(approval_timeout=8))
    sim.run()
    assert next(iter(sim.trips.values())).status == "completed"
    return sim.log.records


class TestFallbackTimeliness:
    def test_clean_fallback_passes(self, fallback_log):
        assert check_fallback_timeliness(fallback_log).passed

    def test_late_fallback_caught(self, fallback_log):
        bad = mutated(
            fallback_log,
            lambda r: r["kind"] == "gate_outcome"
            and r["payload"].get("outcome") == "fallback_activated",
            lambda r: r.__setitem__("tick", r["tick"] + 10),
        )
        result = check_fallback_timeliness(bad)
        assert not result.passed and "past deadline" in result.details[0]

    def test_fallback_without_pending_approval_caught(self, fallback_log):
        bad = [
            r
            for r in copy.deepcopy(fallback_log)
            if not (r["kind"] == "gate_step" and r["payload"].get("step") == 3)
        ]
        for i, rec in enumerate(bad):
            rec["seq"] = i
        result = check_fallback_timeliness(bad)
        assert not result.passed and "without pending approval" in result.details[0]


class TestResolvePath:
    def test_nested_dict_walk(self):
        rec = {"kind": "status", "payload": {"event": "leg_started", "leg": {"mode": "walk"}}}
        assert resolve_path(rec, "payload.leg.mode") == "walk"

    def test_digit_parts_index_lists(self):
        rec = {"payload": {"plan": {"legs": [{"leg_id": "T_a1"}, {"leg_id": "T_a2"}]}}}
        assert resolve_path(rec, "payload.plan.legs.1.leg_id") == "T_a2"

    def test_missing_path_is_sentinel_not_none(self):
        rec = {"payload": {"value": None}}
        assert resolve_path(rec, "payload.value") is None
        missing = resolve_path(rec, "payload.other")
        assert missing is not None and missing != {} and missing != ""

    def test_index_out_of_range_is_missing(self):
        rec = {"payload": {"legs": [1]}}
        assert resolve_path(rec, "payload.legs.5") == resolve_path(rec, "nope")


class TestMatchSequence:
    RECORDS = [
        {"seq": 0, "tick": 1, "kind": "task_spec", "payload": {"request_id": "r1"}},
        {"seq": 1, "tick": 2, "kind": "plan_proposed", "payload": {"request_id": "r1", "plan_id": "p1"}},
        {"seq": 2, "tick": 3, "kind": "plan_proposed", "payload": {"request_id": "r2", "plan_id": "p2"}},
        {"seq": 3, "tick": 4, "kind": "plan_activated", "payload": {"plan_id": "p1"}},
    ]

    def test_subsequence_with_bindings(self):
        template = [
            {"kind": "task_spec", "payload.request_id": "$r"},
            {"kind": "plan_proposed", "payload.request_id": "$r", "payload.plan_id": "$p"},
            {"kind": "plan_activated", "payload.plan_id": "$p"},
        ]
        match = match_sequence(self.RECORDS, template)
        assert match.ok
        assert match.bindings == {"$r": "r1", "$p": "p1"}
        assert [seq for _, seq in match.matched] == [0, 1, 3]

    def test_binding_conflict_fails(self):
        template = [
            {"kind": "plan_proposed", "payload.plan_id": "$p"},
            {"kind": "plan_activated", "payload.plan_id": "$p"},
        ]
        records = [r for r in self.RECORDS if r["seq"] in (2, 3)]  # binds p2, activation is p1
        match = match_sequence(records, template)
        assert not match.ok
        assert match.failed_step == 1
        assert "unmatched" in match.detail

    def test_order_violation_fails(self):
        template = [
            {"kind": "plan_activated"},
            {"kind": "task_spec"},
        ]
        match = match_sequence(self.RECORDS, template)
        assert not match.ok and match.failed_step == 1

    def test_literal_mismatch_skips_record(self):
        template = [{"kind": "plan_proposed", "payload.request_id": "r2"}]
        match = match_sequence(self.RECORDS, template)
        assert match.ok
        assert match.matched == [(0, 2)]

    def test_empty_template_matches_trivially(self):
        match = match_sequence(self.RECORDS, [])
        assert match.ok and match.matched == []


class TestDigest:
    def test_digest_is_content_sensitive(self, clean_log):
        base = log_digest(clean_log)
        assert base == log_digest(copy.deepcopy(clean_log))
        bumped = copy.deepcopy(clean_log)
        bumped[0]["tick"] += 1
        assert log_digest(bumped) != base

    def test_template_result_appended_by_verify_log(self, clean_log):
        results = verify_log(clean_log, template=[{"kind": "run_started"}])
        assert results[-1].name == "sequence_template" and results[-1].passed
        results = verify_log(clean_log, template=[{"kind": "no_such_kind"}])
        assert results[-1].name == "sequence_template" and not results[-1].passed
        assert results[-1].line().startswith("FAIL sequence_template")
