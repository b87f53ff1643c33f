"""Reasoning layer: mock grammar, rule validation, backends and fallback."""

import httpx
import pytest

from holonsim.kernel import WorldState, make_disruption, shortest_route
from holonsim.reasoning import (
    Constraint,
    Leg,
    NeedsClarification,
    NoFeasiblePlan,
    Plan,
    ReasonerContext,
    Reasoner,
    RuleSet,
    TaskSpec,
)
from holonsim.reasoning.mock import MockBackend, interpret_update_text, parse_request_text
from holonsim.reasoning.planning import revision_skeletons
from holonsim.reasoning.remote import RemoteBackend
from holonsim.reasoning.rules import Rule, RuleSetError, validate_plan
from holonsim.reasoning.types import (
    BackendUnavailable,
    PROMPT_SCHEMA_VERSION,
    SchemaViolation,
    Timeout,
)

from conftest import build_graph, make_resource, make_world


def fig_graph():
    return build_graph(
        [
            ("X", "street"),
            ("A", "street"),
            ("V1", "vertiport", True),
            ("V2", "vertiport", True),
            ("B", "street"),
            ("Y", "street"),
        ],
        [
            ("e-xa", "X", "A", "ground", 2),
            ("e-av1", "A", "V1", "ground", 2),
            ("e-v1v2", "V1", "V2", "air", 6),
            ("e-v2b", "V2", "B", "ground", 2),
            ("e-by", "B", "Y", "ground", 2),
            ("e-ab", "A", "B", "ground", 30),
        ],
    )


def ctx_for(graph=None, disruptions=(), resources=(), active_plans=()):
    world = make_world(graph or fig_graph(), resources=resources, disruptions=disruptions)
    return ReasonerContext.capture(world, active_plans=tuple(active_plans))


def spec_for(ctx, origin="X", destination="Y", **kw):
    return TaskSpec(
        request_id="r1",
        passenger=None,
        origin=origin,
        destination=destination,
        earliest_departure=0,
        free_text="",
        **kw,
    )


class TestMockParser:
    def test_ride_from_x_to_y(self):
        ctx = ctx_for()
        spec = parse_request_text("ride from X to Y", ctx, "r1", "S-SoS/c1")
        assert (spec.origin, spec.destination) == ("X", "Y")
        assert spec.request_id == "r1"

    def test_last_to_wins_for_destination(self):
        ctx = ctx_for()
        spec = parse_request_text("I want to go from X to Y", ctx, "r1", "S-SoS/c1")
        assert (spec.origin, spec.destination) == ("X", "Y")

    def test_origin_falls_back_to_passenger_location(self):
        ctx = ctx_for()
        spec = parse_request_text("take me to B", ctx, "r1", "S-SoS/c1", passenger_location="A")
        assert (spec.origin, spec.destination) == ("A", "B")

    def test_unresolvable_destination_needs_clarification(self):
        ctx = ctx_for()
        with pytest.raises(NeedsClarification):
            parse_request_text("ride from X to Narnia", ctx, "r1", "S-SoS/c1")

    def test_same_origin_destination_needs_clarification(self):
        ctx = ctx_for()
        with pytest.raises(NeedsClarification):
            parse_request_text("ride from X to X", ctx, "r1", "S-SoS/c1")

    def test_constraint_keywords(self):
        ctx = ctx_for()
        spec = parse_request_text("ride from X to Y, avoid turbulence", ctx, "r1", "S-SoS/c1")
        assert spec.has_constraint("avoid_turbulence")

    def test_update_grammar(self):
        assert interpret_update_text("cancel the trip", "r1")["kind"] == "cancel"
        adj = interpret_update_text("delay by 4 ticks", "r1")
        assert adj["kind"] == "delay_departure" and adj["magnitude"] == 4
        assert interpret_update_text("this is urgent", "r1")["kind"] == "reprioritize"
        with pytest.raises(NeedsClarification):
            interpret_update_text("the weather is nice", "r1")

    def test_parse_is_pure(self):
        ctx = ctx_for()
        one = parse_request_text("ride from X to Y", ctx, "r1", "S-SoS/c1")
        two = parse_request_text("ride from X to Y", ctx, "r1", "S-SoS/c1")
        assert one == two


class TestGeneratePlan:
    def reasoner(self):
        return Reasoner()

    def test_prefers_air_on_fig_graph(self):
        ctx = ctx_for()
        plan = self.reasoner().generate_plan(spec_for(ctx), ctx, plan_id="p1")
        assert [leg.mode for leg in plan.legs] == ["scooter", "air_taxi", "scooter"]
        assert [leg.leg_id for leg in plan.legs] == ["T_a1", "T_a2", "T_a3"]
        assert plan.status == "draft" and plan.revision == 0

    def test_ground_only_constraint(self):
        ctx = ctx_for()
        spec = spec_for(ctx, constraints=(Constraint("ground_only"),))
        plan = self.reasoner().generate_plan(spec, ctx, plan_id="p1")
        assert all(leg.mode != "air_taxi" for leg in plan.legs)

    def test_adjacent_nodes_single_leg(self):
        ctx = ctx_for()
        plan = self.reasoner().generate_plan(spec_for(ctx, "B", "Y"), ctx, plan_id="p1")
        assert len(plan.legs) == 1 and plan.legs[0].mode == "scooter"

    def test_disconnected_raises_no_feasible_plan(self):
        g = build_graph(
            [("A", "street"), ("B", "street"), ("Z", "street")],
            [("ab", "A", "B", "ground", 1)],
        )
        ctx = ctx_for(graph=g)
        with pytest.raises(NoFeasiblePlan):
            self.reasoner().generate_plan(spec_for(ctx, "A", "Z"), ctx, plan_id="p1")

    def test_mock_outputs_are_pure(self):
        ctx = ctx_for()
        r = self.reasoner()
        a = r.generate_plan(spec_for(ctx), ctx, plan_id="p1")
        b = r.generate_plan(spec_for(ctx), ctx, plan_id="p1")
        assert a == b


class TestRules:
    def plan_with(self, legs):
        return Plan(plan_id="p1", request_id="r1", legs=tuple(legs), status="draft", revision=0)

    def air_leg(self, graph, origin="V1", dest="V2", resource="air-1", start=0, leg_id="T_a2"):
        route = shortest_route(graph, origin, dest, {"air"})
        return Leg(
            leg_id=leg_id, mode="air_taxi", origin=origin, destination=dest,
            route=route, planned_start=start, planned_end=start + route.total_time,
            assigned_resource=resource,
        )

    def test_vertiport_closed_violation(self):
        g = fig_graph()
        d = make_disruption("dc", "vertiport_closed", ["V2"], activation=0)
        ctx = ctx_for(graph=g, disruptions=[d], resources=[make_resource("air-1", "air_taxi", "V1")])
        plan = self.plan_with([self.air_leg(g)])
        verdict = validate_plan(plan, RuleSet.default(), ctx)
        assert not verdict.ok
        assert {"vertiport_closed"} == {v["rule"] for v in verdict.violations if v["leg"] == "T_a2"} - {"battery_insufficient"}

    def test_vertiport_capacity_violation_counts_other_plans(self):
        g = fig_graph()
        air = make_resource("air-1", "air_taxi", "V1")
        other_legs = [self.air_leg(g, resource="air-2", leg_id="T_b1"), self.air_leg(g, resource="air-3", leg_id="T_b2")]
        other = Plan(plan_id="p0", request_id="r0", legs=tuple(other_legs), status="active", revision=0)
        ctx = ctx_for(graph=g, resources=[air], active_plans=[other])
        plan = self.plan_with([self.air_leg(g)])
        verdict = validate_plan(plan, RuleSet.default(), ctx)
        assert any(v["rule"] == "vertiport_capacity" for v in verdict.violations)

    def test_battery_insufficient_violation(self):
        g = fig_graph()
        ctx = ctx_for(graph=g, resources=[make_resource("air-1", "air_taxi", "V1", battery=5.0)])
        plan = self.plan_with([self.air_leg(g)])  # 6 ticks * 2%/tick needs 12%
        verdict = validate_plan(plan, RuleSet.default(), ctx)
        assert any(v["rule"] == "battery_insufficient" for v in verdict.violations)

    def test_resource_overlap_violation(self):
        g = fig_graph()
        ctx = ctx_for(graph=g, resources=[make_resource("air-1", "air_taxi", "V1")])
        l1 = self.air_leg(g, start=0, leg_id="T_a1")
        l2 = self.air_leg(g, origin="V2", dest="V1", start=3, leg_id="T_a2")
        verdict = validate_plan(self.plan_with([l1, l2]), RuleSet.default(), ctx)
        assert any(v["rule"] == "resource_overlap" for v in verdict.violations)

    def test_clean_plan_passes_all_rules(self):
        g = fig_graph()
        ctx = ctx_for(graph=g, resources=[make_resource("air-1", "air_taxi", "V1")])
        verdict = validate_plan(self.plan_with([self.air_leg(g)]), RuleSet.default(), ctx)
        assert verdict.ok and verdict.violations == ()

    def test_disabled_rule_is_skipped(self):
        g = fig_graph()
        d = make_disruption("dc", "vertiport_closed", ["V2"], activation=0)
        ctx = ctx_for(graph=g, disruptions=[d], resources=[make_resource("air-1", "air_taxi", "V1")])
        rules = RuleSet(
            [Rule("vertiport_closed", enabled=False), Rule("vertiport_capacity"), Rule("battery_insufficient"), Rule("resource_overlap")]
        )
        verdict = validate_plan(self.plan_with([self.air_leg(g)]), rules, ctx)
        assert all(v["rule"] != "vertiport_closed" for v in verdict.violations)

    def test_rule_file_round_trip_and_digest(self, tmp_path):
        p = tmp_path / "rules.json"
        p.write_text('{"rules": [{"id": "vertiport_closed"}, {"id": "battery_insufficient", "enabled": false}]}')
        rs = RuleSet.from_file(p)
        assert rs.enabled_ids() == ["vertiport_closed"]
        assert rs.digest() != RuleSet.default().digest()

    def test_unknown_rule_id_rejected(self):
        with pytest.raises(RuleSetError):
            RuleSet([Rule("no_flying_on_tuesdays")])


class TestRevisionSkeletons:
    def test_prefers_same_structure_then_air_then_taxi(self):
        g = fig_graph()
        ctx = ctx_for(graph=g)
        spec = spec_for(ctx)
        route = shortest_route(g, "V1", "V2", {"air"})
        remaining = (
            Leg(leg_id="T_a2", mode="air_taxi", origin="V1", destination="V2",
                route=route, planned_start=4, planned_end=10),
        )
        candidates = revision_skeletons(ctx, spec, remaining, at_node="V1")
        assert candidates[0][0]["mode"] == "air_taxi"  # reroute same structure
        assert candidates[-1] == [{"mode": "ground_taxi", "origin": "V1", "destination": "Y"}]

    def test_air_blocked_falls_to_ground_taxi(self):
        g = fig_graph()
        d = make_disruption("db", "edge_blocked", ["e-v1v2"], activation=0)
        ctx = ctx_for(graph=g, disruptions=[d])
        spec = spec_for(ctx)
        route = shortest_route(g, "V1", "V2", {"air"})
        remaining = (
            Leg(leg_id="T_a2", mode="air_taxi", origin="V1", destination="V2",
                route=route, planned_start=4, planned_end=10),
        )
        candidates = revision_skeletons(ctx, spec, remaining, at_node="V1")
        assert candidates, "ground taxi fallback should remain"
        assert all(c[0]["mode"] != "air_taxi" or c[0]["origin"] != "V1" for c in candidates[:-1])
        assert candidates[-1][0]["mode"] == "ground_taxi"


class _ScriptedTransport:
    """Fake remote transport: pops canned behaviors per call."""

    def __init__(self, plays):
        self.plays = list(plays)
        self.calls = []

    def __call__(self, endpoint, body, budget):
        self.calls.append((endpoint, body, budget))
        play = self.plays.pop(0)
        if isinstance(play, Exception):
            raise play
        return play


class TestRemoteBackend:
    def ctx(self):
        return ctx_for()

    def test_timeout_maps_to_budget_error(self):
        transport = _ScriptedTransport([httpx.ReadTimeout("slow")])
        backend = RemoteBackend("http://model", time_budget=0.5, transport=transport)
        with pytest.raises(Timeout, match="budget"):
            backend.call({"task": {}})

    def test_http_error_maps_to_unavailable(self):
        transport = _ScriptedTransport([httpx.ConnectError("refused")])
        backend = RemoteBackend("http://model", transport=transport)
        with pytest.raises(BackendUnavailable):
            backend.call({"task": {}})

    def test_bad_schema_version_rejected(self):
        transport = _ScriptedTransport([{"response": {}, "schema_version": "v999"}])
        backend = RemoteBackend("http://model", transport=transport)
        with pytest.raises(SchemaViolation):
            backend.call({"task": {}})

    def test_well_formed_envelope_passes_through(self):
        envelope = {"response": {"legs": []}, "schema_version": PROMPT_SCHEMA_VERSION}
        backend = RemoteBackend("http://model", transport=_ScriptedTransport([envelope]))
        assert backend.call({"task": {}}) == envelope


class TestFallbackChain:
    def test_remote_failure_falls_back_to_mock(self):
        fallbacks = []
        transport = _ScriptedTransport([httpx.ReadTimeout("slow")])
        reasoner = Reasoner(
            backends={"remote": RemoteBackend("http://model", transport=transport)},
            primary="remote",
            on_fallback=lambda name, exc: fallbacks.append((name, type(exc).__name__)),
        )
        ctx = ctx_for()
        plan = reasoner.generate_plan(spec_for(ctx), ctx, plan_id="p1")
        assert plan.legs, "mock should have produced the plan"
        assert fallbacks == [("remote", "Timeout")]
        assert reasoner.fallback_count == 1

    def test_remote_schema_violation_falls_back(self):
        transport = _ScriptedTransport([{"response": "not-a-dict", "schema_version": PROMPT_SCHEMA_VERSION}])
        reasoner = Reasoner(
            backends={"remote": RemoteBackend("http://model", transport=transport)},
            primary="remote",
        )
        ctx = ctx_for()
        plan = reasoner.generate_plan(spec_for(ctx), ctx, plan_id="p1")
        assert plan.legs and reasoner.fallback_count == 1

    def test_mock_primary_never_falls_back(self):
        reasoner = Reasoner()
        g = build_graph(
            [("A", "street"), ("Z", "street")],
            [],
        )
        ctx = ctx_for(graph=g)
        with pytest.raises(NoFeasiblePlan):
            reasoner.generate_plan(spec_for(ctx, "A", "Z"), ctx, plan_id="p1")
        assert reasoner.fallback_count == 0

    def test_unknown_primary_rejected(self):
        with pytest.raises(ValueError):
            Reasoner(primary="oracle")


class TestMockBackendWire:
    def test_envelope_shape(self):
        ctx = ctx_for()
        prompt = {
            "role": "planner",
            "task": {
                "op": "parse_request",
                "args": {"text": "ride from X to Y", "request_id": "r1", "passenger": "S-SoS/c1"},
                "context": ctx.to_prompt_context(),
            },
            "schema_version": PROMPT_SCHEMA_VERSION,
        }
        envelope = MockBackend().call(prompt)
        assert envelope["schema_version"] == PROMPT_SCHEMA_VERSION
        assert isinstance(envelope["response"], dict)

    def test_error_envelope_for_unparseable_text(self):
        ctx = ctx_for()
        prompt = {
            "role": "planner",
            "task": {
                "op": "parse_request",
                "args": {"text": "gibberish", "request_id": "r1", "passenger": "S-SoS/c1"},
                "context": ctx.to_prompt_context(),
            },
            "schema_version": PROMPT_SCHEMA_VERSION,
        }
        response = MockBackend().call(prompt)["response"]
        assert response["error"]["kind"] == "needs_clarification"
