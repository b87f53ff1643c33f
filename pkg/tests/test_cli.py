"""Command line surface: exit codes, artifacts, verifier output."""

import json
import re

import pytest
from click.testing import CliRunner

from holonsim.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def invoke(runner, *args):
    return runner.invoke(main, list(args), catch_exceptions=False)


class TestRun:
    def test_clean_run_exits_zero(self, runner, tmp_path):
        out = tmp_path / "artifacts"
        result = invoke(
            runner, "run", "--scenario", "fig5-demo", "--out", str(out)
        )
        assert result.exit_code == 0, result.output
        assert re.search(r"1/1 trips completed", result.output)
        assert re.search(r"log hash [0-9a-f]{12}", result.output)
        assert "PASS monotone_order" in result.output
        assert (out / "log.ndjson").exists()
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["trips"]["completed"] == 1
        snapshot = json.loads((out / "snapshot.json").read_text())
        assert snapshot["status"] == "finished"

    def test_script_drives_approval(self, runner, tmp_path):
        script = tmp_path / "script.json"
        script.write_text(
            json.dumps([{"at_tick": 30, "kind": "approve", "payload": {"approval_id": "*"}}])
        )
        out = tmp_path / "artifacts"
        result = invoke(
            runner,
            "run", "--scenario", "fig5-demo", "--script", str(script), "--out", str(out),
        )
        assert result.exit_code == 0, result.output
        records = [json.loads(line) for line in (out / "log.ndjson").read_text().splitlines()]
        decided = [r for r in records if r["kind"] == "approval_decided"]
        assert decided and decided[0]["payload"]["decision"] == "approved"

    def test_unknown_scenario_exits_one(self, runner):
        result = runner.invoke(main, ["run", "--scenario", "atlantis"])
        assert result.exit_code == 1
        assert "error:" in result.output

    def test_unknown_strategy_exits_one(self, runner):
        result = runner.invoke(main, ["run", "--scenario", "fig5-demo", "--strategy", "consensus"])
        assert result.exit_code == 1
        assert "unknown strategy" in result.output

    def test_malformed_scenario_file_exits_one(self, runner, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"graph": {"nodes": [{"id": "P", "kind": "volcano"}], "edges": []}}')
        result = runner.invoke(main, ["run", "--scenario", str(bad)])
        assert result.exit_code == 1
        assert "error:" in result.output

    def test_malformed_script_exits_one(self, runner, tmp_path):
        script = tmp_path / "script.json"
        script.write_text('{"kind": "approve"}')
        result = runner.invoke(main, ["run", "--scenario", "fig5-demo", "--script", str(script)])
        assert result.exit_code == 1

    def test_seed_changes_log_hash(self, runner, tmp_path):
        hashes = []
        for seed in (1, 2):
            out = tmp_path / f"s{seed}"
            result = invoke(
                runner,
                "run", "--scenario", "fig5-demo", "--seed", str(seed), "--out", str(out),
            )
            assert result.exit_code == 0
            hashes.append(re.search(r"log hash ([0-9a-f]{12})", result.output).group(1))
        # identical scripts and graph: seed feeds the rng stream, the trip
        # itself is deterministic, so hashes match unless the seed is logged
        rerun = invoke(runner, "run", "--scenario", "fig5-demo", "--seed", "1")
        assert re.search(r"log hash ([0-9a-f]{12})", rerun.output).group(1) == hashes[0]


class TestVerify:
    def make_log(self, runner, tmp_path):
        out = tmp_path / "artifacts"
        result = invoke(runner, "run", "--scenario", "fig5-demo", "--out", str(out))
        assert result.exit_code == 0
        return out / "log.ndjson"

    def test_clean_log_exits_zero(self, runner, tmp_path):
        log = self.make_log(runner, tmp_path)
        result = invoke(runner, "verify", str(log))
        assert result.exit_code == 0, result.output
        assert result.output.startswith("log digest ")
        for name in (
            "monotone_order",
            "gate_totality",
            "gate_step_order",
            "status_discipline",
            "fallback_timeliness",
            "conversation_closure",
        ):
            assert f"PASS {name}" in result.output

    def test_corrupted_log_exits_two_with_location(self, runner, tmp_path):
        log = self.make_log(runner, tmp_path)
        records = [json.loads(line) for line in log.read_text().splitlines()]
        for rec in records:
            if rec["kind"] == "gate_step" and rec["payload"]["step"] == 1:
                rec["payload"]["outcome"] = "fail"
                break
        log.write_text("\n".join(json.dumps(r) for r in records) + "\n")
        result = runner.invoke(main, ["verify", str(log)])
        assert result.exit_code == 2
        assert "FAIL gate_step_order" in result.output
        assert "after failed step" in result.output

    def test_missing_file_exits_one(self, runner, tmp_path):
        result = runner.invoke(main, ["verify", str(tmp_path / "none.ndjson")])
        assert result.exit_code == 1

    def test_unparseable_file_exits_one(self, runner, tmp_path):
        bad = tmp_path / "log.ndjson"
        bad.write_text("this is not ndjson\n")
        result = runner.invoke(main, ["verify", str(bad)])
        assert result.exit_code == 1


class TestCompare:
    def test_two_strategy_table_and_artifacts(self, runner, tmp_path):
        out = tmp_path / "cmp"
        result = invoke(
            runner,
            "compare", "--scenario", "fig5-demo",
            "--strategy", "matchmaker", "--strategy", "holonic",
            "--out", str(out),
        )
        assert result.exit_code == 0, result.output
        lines = result.output.strip().splitlines()
        assert lines[0].split()[:3] == ["strategy", "completed", "aborted"]
        assert {line.split()[0] for line in lines[1:]} == {"matchmaker", "holonic"}
        table = json.loads((out / "comparison.json").read_text())
        assert set(table["strategies"]) == {"matchmaker", "holonic"}
        csv_lines = (out / "comparison.csv").read_text().strip().splitlines()
        assert csv_lines[0].startswith("strategy,completed,aborted")
        assert len(csv_lines) == 3

    def test_unknown_strategy_exits_one(self, runner):
        result = runner.invoke(
            main, ["compare", "--scenario", "fig5-demo", "--strategy", "consensus"]
        )
        assert result.exit_code == 1
        assert "unknown strategy" in result.output

    def test_unknown_scenario_exits_one(self, runner):
        result = runner.invoke(main, ["compare", "--scenario", "atlantis"])
        assert result.exit_code == 1


class TestServe:
    def test_bad_config_exits_one(self, runner, tmp_path):
        cfg = tmp_path / "holonsim.toml"
        cfg.write_text("warp_speed = 9\n")
        result = runner.invoke(main, ["serve", "--config", str(cfg)])
        assert result.exit_code == 1
        assert "unknown key" in result.output
