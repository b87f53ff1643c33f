"""Headless front door: run scenarios, verify logs, compare strategies, serve.

Exit codes: 0 clean, 1 schema or configuration trouble, 2 invariant
violations found by the built-in checker.
"""

from __future__ import annotations

import csv
import json
import sys
import time
from pathlib import Path

import click

from .config import ConfigError, load_config
from .federation import STRATEGY_KINDS
from .logstore import load_log
from .runtime import Simulation, build_reasoner, run_comparison
from .scenario import SchemaError, resolve_scenario
from .verify import log_digest, verify_log

_REASONER_FLAGS = [
    click.option("--reasoner", type=click.Choice(["mock", "remote"]), default="mock"),
    click.option("--remote-url", default=None, help="remote reasoner endpoint"),
]


def _with(options):
    def wrap(f):
        for option in reversed(options):
            f = option(f)
        return f

    return wrap


def _load_script(path: str) -> list[dict]:
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, list):
        raise SchemaError("script", "expected a list of actions")
    for i, action in enumerate(doc):
        if not isinstance(action, dict) or "kind" not in action:
            raise SchemaError(f"script[{i}]", "action needs a kind")
    return sorted(enumerate(doc), key=lambda e: (e[1].get("at_tick", 0), e[0]))


def _fail(code: int, message: str) -> None:
    click.echo(message, err=True)
    sys.exit(code)


@click.group()
def main() -> None:
    """Urban mobility holarchy simulator."""


@main.command()
@click.option("--scenario", required=True, help="scenario file path or bundled name")
@click.option("--seed", type=int, default=None, help="override the scenario seed")
@click.option("--strategy", default="holonic")
@click.option("--script", "script_path", default=None, help="scripted operator actions (json)")
@click.option("--out", "out_dir", default=None, help="artifact directory")
@click.option("--ticks-per-second", type=float, default=None, help="wall-clock pacing (default: free run)")
@_with(_REASONER_FLAGS)
def run(scenario, seed, strategy, script_path, out_dir, ticks_per_second, reasoner, remote_url):
    """Execute one scenario to its time limit and write artifacts."""
    if strategy not in STRATEGY_KINDS:
        _fail(1, f"error: unknown strategy {strategy!r}")
    try:
        scn = resolve_scenario(scenario)
        if seed is not None:
            import dataclasses

            scn = dataclasses.replace(scn, seed=seed)
        out = Path(out_dir) if out_dir else None
        if out:
            out.mkdir(parents=True, exist_ok=True)
        sim = Simulation(
            scn,
            strategy=strategy,
            reasoner=build_reasoner(reasoner, remote_url=remote_url),
            log_path=(out / "log.ndjson") if out else None,
        )
        if script_path:
            for _, action in _load_script(script_path):
                sim.submit_command(
                    action["kind"], action.get("payload", {}), at_tick=action.get("at_tick")
                )
    except (SchemaError, ConfigError, ValueError, OSError, json.JSONDecodeError) as exc:
        _fail(1, f"error: {exc}")

    if ticks_per_second:
        while sim.paced_tick():
            time.sleep(1.0 / ticks_per_second)
        sim.finish()
    else:
        sim.run()

    metrics = sim.metrics()
    snapshot = sim.snapshot()
    if out_dir:
        out = Path(out_dir)
        (out / "metrics.json").write_text(json.dumps(metrics, indent=2, sort_keys=True) + "\n")
        (out / "snapshot.json").write_text(json.dumps(snapshot, indent=2, sort_keys=True) + "\n")

    results = verify_log(sim.log.records)
    failed = [r for r in results if not r.passed]
    trips = metrics["trips"]
    click.echo(
        f"run {sim.run_id}: {sim.world.clock} ticks, "
        f"{trips['completed']}/{trips['total']} trips completed, "
        f"{trips['aborted']} aborted, log hash {sim.log.hash()[:12]}"
    )
    for result in results:
        click.echo(f"  {result.line()}")
    if failed:
        sys.exit(2)


@main.command()
@click.argument("log_path")
def verify(log_path):
    """Re-check log-level invariants; print violations with (tick, seq)."""
    try:
        records = load_log(log_path)
    except (OSError, json.JSONDecodeError) as exc:
        _fail(1, f"error: {exc}")
    results = verify_log(records)
    click.echo(f"log digest {log_digest(records)[:12]}")
    failed = False
    for result in results:
        click.echo(result.line())
        for detail in result.details if not result.passed else []:
            click.echo(f"    {detail}")
        failed = failed or not result.passed
    if failed:
        sys.exit(2)


@main.command()
@click.option("--scenario", required=True)
@click.option(
    "--strategy",
    "strategies",
    multiple=True,
    help="repeatable; default: all five",
)
@click.option("--out", "out_dir", default=None)
def compare(scenario, strategies, out_dir):
    """Run the same scenario under each coordination strategy."""
    for kind in strategies:
        if kind not in STRATEGY_KINDS:
            _fail(1, f"error: unknown strategy {kind!r}")
    try:
        scn = resolve_scenario(scenario)
    except (SchemaError, OSError, json.JSONDecodeError, ValueError) as exc:
        _fail(1, f"error: {exc}")
    kinds = tuple(strategies) or tuple(STRATEGY_KINDS)
    table = run_comparison(scn, strategies=kinds)

    columns = (
        "strategy",
        "completed",
        "aborted",
        "mean_trip_duration",
        "total_messages",
        "conversations",
        "mean_discovery_latency",
        "bottleneck_agent",
        "bottleneck_load",
    )
    rows = []
    for kind in kinds:
        m = table["strategies"][kind]
        coord = m["coordination"]
        rows.append(
            {
                "strategy": kind,
                "completed": m["trips"]["completed"],
                "aborted": m["trips"]["aborted"],
                "mean_trip_duration": m["mean_trip_duration"],
                "total_messages": coord["total_messages"],
                "conversations": coord["conversations"],
                "mean_discovery_latency": coord["mean_discovery_latency"],
                "bottleneck_agent": coord["bottleneck_agent"],
                "bottleneck_load": coord["bottleneck_load"],
            }
        )
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "comparison.json").write_text(json.dumps(table, indent=2, sort_keys=True) + "\n")
        with (out / "comparison.csv").open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=columns)
            writer.writeheader()
            writer.writerows(rows)
    widths = {c: max(len(c), *(len(str(r[c])) for r in rows)) for c in columns}
    click.echo("  ".join(c.ljust(widths[c]) for c in columns))
    for row in rows:
        click.echo("  ".join(str(row[c]).ljust(widths[c]) for c in columns))


@main.command()
@click.option("--config", "config_path", default=None, help="holonsim.toml path")
def serve(config_path):
    """Start the HTTP gateway."""
    from .gateway import serve as serve_app

    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        _fail(1, f"error: {exc}")
    serve_app(cfg)


if __name__ == "__main__":
    main()
