"""HTTP gateway: run lifecycle, command edge validation, event delivery."""

import json
import time

import pytest
from fastapi.testclient import TestClient

from holonsim.config import Config
from holonsim.gateway.app import create_app

from test_roles import has_pending_approval, run_until


@pytest.fixture()
def client():
    with TestClient(create_app(Config())) as c:
        yield c


def make_run(client, **body):
    body.setdefault("scenario", "fig5-demo")
    resp = client.post("/runs", json=body)
    assert resp.status_code == 201, resp.text
    return resp.json()


def sim_of(client, run_id):
    return client.app.state.manager.runs[run_id].sim


class TestRunCreation:
    def test_create_from_bundled_name(self, client):
        desc = make_run(client, seed=3, strategy="matchmaker")
        assert desc["run_id"] == "run1"
        assert desc["scenario"] == "fig5-demo"
        assert desc["seed"] == 3
        assert desc["strategy"] == "matchmaker"
        assert desc["status"] == "loaded"
        assert desc["tick"] == 0

    def test_create_from_inline_document(self, client):
        doc = {
            "name": "inline-mini",
            "graph": {
                "nodes": [{"id": "P", "kind": "street"}, {"id": "Q", "kind": "street"}],
                "edges": [
                    {"id": "e", "u": "P", "v": "Q", "mode": "ground", "base_travel_time": 1}
                ],
            },
            "passengers": [{"id": "c1", "location": "P"}],
        }
        desc = make_run(client, scenario=doc)
        assert desc["scenario"] == "inline-mini"

    def test_unknown_bundled_name_is_schema_error(self, client):
        resp = client.post("/runs", json={"scenario": "atlantis"})
        assert resp.status_code == 422
        body = resp.json()
        assert body["error"] == "SchemaError"
        assert body["detail"]["path"] == "scenario"

    def test_invalid_inline_document_reports_path(self, client):
        doc = {"graph": {"nodes": [{"id": "P", "kind": "volcano"}], "edges": []}}
        resp = client.post("/runs", json={"scenario": doc})
        assert resp.status_code == 422
        assert resp.json()["detail"]["path"] == "graph.nodes[0].kind"

    def test_unknown_strategy_rejected(self, client):
        resp = client.post("/runs", json={"scenario": "fig5-demo", "strategy": "consensus"})
        assert resp.status_code == 422


class TestTripSubmission:
    def test_trip_gets_request_id(self, client):
        desc = make_run(client)
        resp = client.post(
            f"/runs/{desc['run_id']}/trips", json={"passenger": "c1", "text": "ride from X to Y"}
        )
        assert resp.status_code == 202
        ack = resp.json()
        assert ack["request_id"].startswith("r")
        assert ack["at_tick"] >= 0

    def test_unknown_passenger_404(self, client):
        desc = make_run(client)
        resp = client.post(f"/runs/{desc['run_id']}/trips", json={"passenger": "ghost", "text": "hi"})
        assert resp.status_code == 404
        assert resp.json()["error"] == "UnknownPassenger"

    def test_full_path_passenger_accepted(self, client):
        # the id form shown by /state round-trips into /trips
        desc = make_run(client)
        resp = client.post(
            f"/runs/{desc['run_id']}/trips",
            json={"passenger": "S-SoS/c1", "text": "ride from X to Y"},
        )
        assert resp.status_code == 202

    def test_non_passenger_holon_404(self, client):
        desc = make_run(client)
        for bad in ("planner", "S-SoS/planner", "a//b"):
            resp = client.post(f"/runs/{desc['run_id']}/trips", json={"passenger": bad, "text": "hi"})
            assert resp.status_code == 404, bad
            assert resp.json()["error"] == "UnknownPassenger"

    def test_unknown_run_404(self, client):
        resp = client.post("/runs/run99/trips", json={"passenger": "c1", "text": "hi"})
        assert resp.status_code == 404
        assert resp.json()["error"] == "UnknownRun"

    def test_missing_body_field_422(self, client):
        desc = make_run(client)
        resp = client.post(f"/runs/{desc['run_id']}/trips", json={"passenger": "c1"})
        assert resp.status_code == 422


class TestCommands:
    def test_unknown_command_kind_422(self, client):
        desc = make_run(client)
        resp = client.post(
            f"/runs/{desc['run_id']}/commands", json={"kind": "teleport", "payload": {}}
        )
        assert resp.status_code == 422
        assert resp.json()["error"] == "UnknownCommand"

    def test_approve_unknown_approval_404(self, client):
        desc = make_run(client)
        resp = client.post(
            f"/runs/{desc['run_id']}/commands",
            json={"kind": "approve", "payload": {"approval_id": "appr99"}},
        )
        assert resp.status_code == 404
        assert resp.json()["error"] == "UnknownApproval"

    def test_override_requires_parseable_plan(self, client):
        desc = make_run(client)
        sim = sim_of(client, desc["run_id"])
        assert run_until(sim, has_pending_approval)
        approval_id = next(a for a, req in sim.approvals.items() if req.pending)
        resp = client.post(
            f"/runs/{desc['run_id']}/commands",
            json={"kind": "override", "payload": {"approval_id": approval_id, "plan": "nope"}},
        )
        assert resp.status_code == 422
        assert resp.json()["error"] == "InvalidOverridePlan"

    def test_pause_and_step_commands_accepted(self, client):
        desc = make_run(client)
        for kind in ("pause", "step", "resume"):
            resp = client.post(f"/runs/{desc['run_id']}/commands", json={"kind": kind})
            assert resp.status_code == 202, (kind, resp.text)
            assert resp.json()["kind"] == kind


class TestFrozenStepping:
    def step(self, client, run_id):
        assert client.post(f"/runs/{run_id}/commands", json={"kind": "step"}).status_code == 202

    def test_paused_create_starts_frozen(self, client):
        desc = make_run(client, paused=True)
        assert desc["status"] == "paused"
        assert desc["tick"] == 0
        events = client.get(f"/runs/{desc['run_id']}/events").json()["events"]
        assert events and events[0]["kind"] == "run_started"

    def test_pause_command_freezes_dormant_run(self, client):
        desc = make_run(client)
        client.post(f"/runs/{desc['run_id']}/commands", json={"kind": "pause"})
        assert client.get(f"/runs/{desc['run_id']}/state").json()["status"] == "paused"

    def test_operator_walks_trip_over_http_only(self, client):
        # create frozen, step to the gate, approve, step to completion;
        # no backdoor into the manager anywhere
        desc = make_run(client, paused=True)
        rid = desc["run_id"]
        pending = []
        for _ in range(120):
            self.step(client, rid)
            pending = client.get(f"/runs/{rid}/approvals").json()
            if pending:
                break
        assert pending, "no approval surfaced while stepping"
        state = client.get(f"/runs/{rid}/state").json()
        assert state["status"] == "paused" and state["tick"] > 0

        resp = client.post(
            f"/runs/{rid}/commands",
            json={"kind": "approve",
                  "payload": {"approval_id": pending[0]["approval_id"], "operator": "op-9"}},
        )
        assert resp.status_code == 202
        decided = client.get(f"/runs/{rid}/approvals", params={"pending": False}).json()
        assert decided[0]["decision"] == "approved"
        assert decided[0]["decided_by"] == "op-9"

        for _ in range(200):
            self.step(client, rid)
            trips = client.get(f"/runs/{rid}/state").json()["trips"]
            if trips and trips[0]["status"] == "completed":
                break
        else:
            pytest.fail("trip never completed under stepping")

    def test_trip_submission_applies_at_frozen_clock(self, client):
        desc = make_run(client, paused=True)
        rid = desc["run_id"]
        resp = client.post(f"/runs/{rid}/trips", json={"passenger": "c1", "text": "ride from X to Y"})
        assert resp.status_code == 202
        events = client.get(f"/runs/{rid}/events").json()["events"]
        texts = [e for e in events if e["kind"] == "passenger_utterance"]
        assert len(texts) == 2  # the scripted trip plus this one
        assert client.get(f"/runs/{rid}/state").json()["status"] == "paused"


class TestApprovals:
    def test_pending_listing_carries_fallback_and_deadline(self, client):
        desc = make_run(client)
        sim = sim_of(client, desc["run_id"])
        assert run_until(sim, has_pending_approval)
        resp = client.get(f"/runs/{desc['run_id']}/approvals")
        assert resp.status_code == 200
        (view,) = resp.json()
        assert view["risk_class"] == "high"
        assert view["timeout_at"] > view["submitted_at"]
        assert view["decision"] is None
        assert view["fallback"] is not None
        assert all(leg["mode"] != "air_taxi" for leg in view["fallback"]["legs"])

    def test_decided_approvals_hidden_unless_asked(self, client):
        desc = make_run(client)
        sim = sim_of(client, desc["run_id"])
        assert run_until(sim, has_pending_approval)
        approval_id = next(iter(sim.approvals))
        resp = client.post(
            f"/runs/{desc['run_id']}/commands",
            json={"kind": "approve", "payload": {"approval_id": approval_id}},
        )
        assert resp.status_code == 202
        sim.run()
        assert client.get(f"/runs/{desc['run_id']}/approvals").json() == []
        shown = client.get(f"/runs/{desc['run_id']}/approvals", params={"pending": "false"}).json()
        assert [a["decision"] for a in shown] == ["approved"]


class TestStateAndMetrics:
    def finished_run(self, client):
        desc = make_run(client)
        sim = sim_of(client, desc["run_id"])
        sim.submit_command("approve", {"approval_id": "*"}, at_tick=30)
        sim.run()
        return desc["run_id"]

    def test_state_view(self, client):
        run_id = self.finished_run(client)
        state = client.get(f"/runs/{run_id}/state").json()
        assert state["status"] == "finished"
        assert state["trips"][0]["status"] == "completed"
        assert {r["id"] for r in state["resources"]}
        assert state["pending_approvals"] == []

    def test_metrics_view(self, client):
        run_id = self.finished_run(client)
        metrics = client.get(f"/runs/{run_id}/metrics").json()
        assert metrics["trips"]["completed"] == 1
        assert metrics["coordination"]["total_messages"] > 0
        assert metrics["coordination"]["bottleneck_agent"]

    def test_unknown_run_404_on_reads(self, client):
        for path in ("state", "metrics", "approvals", "events"):
            resp = client.get(f"/runs/run404/{path}")
            assert resp.status_code == 404, path


class TestEvents:
    def test_json_page_and_cursor(self, client):
        desc = make_run(client)
        sim = sim_of(client, desc["run_id"])
        sim.submit_command("approve", {"approval_id": "*"}, at_tick=30)
        sim.run()
        page = client.get(f"/runs/{desc['run_id']}/events").json()
        assert page["events"], "finished run must have events"
        assert page["next"] == page["events"][-1]["seq"] + 1
        assert [e["seq"] for e in page["events"]] == list(range(len(page["events"])))
        empty = client.get(f"/runs/{desc['run_id']}/events", params={"from": page["next"]}).json()
        assert empty["events"] == [] and empty["next"] == page["next"]

    def test_sse_stream_replays_and_ends(self, client):
        desc = make_run(client)
        sim = sim_of(client, desc["run_id"])
        sim.submit_command("approve", {"approval_id": "*"}, at_tick=30)
        sim.run()
        total = len(sim.log.records)
        frames = []
        with client.stream(
            "GET", f"/runs/{desc['run_id']}/events", headers={"accept": "text/event-stream"}
        ) as resp:
            assert resp.headers["content-type"].startswith("text/event-stream")
            body = "".join(resp.iter_text())
        data_lines = [line for line in body.splitlines() if line.startswith("data: ")]
        assert body.count("event: end") == 1
        assert len(data_lines) == total + 1  # records plus the end frame
        first = json.loads(data_lines[0][len("data: ") :])
        assert first["kind"] == "run_started"


class TestPacing:
    def test_resume_paces_run_to_completion(self, client):
        desc = make_run(client, ticks_per_second=800)
        resp = client.post(f"/runs/{desc['run_id']}/commands", json={"kind": "resume"})
        assert resp.status_code == 202
        deadline = time.time() + 30
        status = None
        while time.time() < deadline:
            status = client.get(f"/runs/{desc['run_id']}/state").json()["status"]
            if status == "finished":
                break
            time.sleep(0.1)
        assert status == "finished"
        state = client.get(f"/runs/{desc['run_id']}/state").json()
        assert state["trips"][0]["status"] == "completed"
