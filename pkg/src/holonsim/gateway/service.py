"""Run lifecycle management behind the HTTP surface.

One RunManager owns every loaded Simulation. All mutating traffic funnels
through Simulation.submit_command, which applies commands at tick
boundaries, so concurrent API clients serialize naturally. A paced
background task advances running simulations in wall time.
"""

from __future__ import annotations

import asyncio
import dataclasses
import json
from typing import Optional

from ..config import Config
from ..reasoning import RuleSet
from ..reasoning.types import Plan
from ..runtime import Simulation, build_reasoner
from ..scenario import Scenario, SchemaError, load_scenario, resolve_scenario


class UnknownRun(KeyError):
    pass


class UnknownPassenger(KeyError):
    pass


class UnknownApproval(KeyError):
    pass


class InvalidOverridePlan(ValueError):
    pass


class ManagedRun:
    def __init__(self, sim: Simulation, ticks_per_second: float):
        self.sim = sim
        self.ticks_per_second = ticks_per_second
        self.task: Optional[asyncio.Task] = None

    @property
    def pacing(self) -> bool:
        return self.task is not None and not self.task.done()


class RunManager:
    def __init__(self, config: Optional[Config] = None):
        self.config = config or Config()
        self.runs: dict[str, ManagedRun] = {}
        self._counter = 0

    # -- lifecycle ---------------------------------------------------------

    def create_run(
        self,
        scenario_ref,
        seed: Optional[int] = None,
        strategy: str = "holonic",
        ticks_per_second: Optional[float] = None,
        paused: bool = False,
    ) -> ManagedRun:
        if isinstance(scenario_ref, str):
            try:
                scenario = resolve_scenario(scenario_ref)
            except FileNotFoundError as exc:
                raise SchemaError("scenario", str(exc)) from exc
            except json.JSONDecodeError as exc:
                raise SchemaError("scenario", f"unreadable scenario file: {exc}") from exc
        elif isinstance(scenario_ref, dict):
            doc = dict(scenario_ref)
            name = doc.pop("name", "inline")
            scenario = load_scenario(doc, name=str(name))
        elif isinstance(scenario_ref, Scenario):
            scenario = scenario_ref
        else:
            raise SchemaError("scenario", f"unsupported scenario reference {type(scenario_ref)}")
        if seed is not None:
            scenario = dataclasses.replace(scenario, seed=seed)
        self._counter += 1
        run_id = f"run{self._counter}"
        sim = Simulation(
            scenario,
            strategy=strategy,
            reasoner=build_reasoner(
                self.config.reasoner_backend,
                remote_url=self.config.remote_url,
                remote_budget=self.config.remote_budget,
            ),
            run_id=run_id,
            approval_timeout=self.config.approval_timeout,
        )
        run = ManagedRun(sim, ticks_per_second or self.config.ticks_per_second)
        if paused:
            sim.pause()
        self.runs[run_id] = run
        return run

    def get(self, run_id: str) -> ManagedRun:
        run = self.runs.get(run_id)
        if run is None:
            raise UnknownRun(run_id)
        return run

    def ensure_pacing(self, run: ManagedRun) -> None:
        if run.sim.status == "finished" or run.pacing:
            return
        run.sim.start()
        run.task = asyncio.get_running_loop().create_task(self._pace(run))

    async def _pace(self, run: ManagedRun) -> None:
        loop = asyncio.get_running_loop()
        interval = max(1.0 / run.ticks_per_second, 0.002)
        carry = 0.0
        last = loop.time()
        while run.sim.status != "finished":
            await asyncio.sleep(interval)
            now = loop.time()
            carry += run.ticks_per_second * (now - last)
            last = now
            ticks = int(carry)
            carry -= ticks
            for _ in range(ticks):
                if not run.sim.paced_tick():
                    return

    async def shutdown(self) -> None:
        for run in self.runs.values():
            if run.task is not None and not run.task.done():
                run.task.cancel()
                try:
                    await run.task
                except asyncio.CancelledError:
                    pass
            if run.sim.status != "finished":
                run.sim.finish()

    # -- traffic -----------------------------------------------------------

    def submit_trip(self, run_id: str, passenger: str, text: str) -> dict:
        run = self.get(run_id)
        if run.sim.resolve_passenger(passenger) is None:
            raise UnknownPassenger(passenger)
        doc = run.sim.submit_command("passenger_message", {"passenger": passenger, "text": text})
        self._drain_frozen(run)
        return doc

    def submit_command(self, run_id: str, kind: str, payload: dict) -> dict:
        run = self.get(run_id)
        payload = dict(payload or {})
        if kind in ("approve", "reject", "override"):
            approval_id = payload.get("approval_id")
            if approval_id != "*" and approval_id not in run.sim.approvals:
                raise UnknownApproval(str(approval_id))
            if kind == "override":
                self._precheck_override(run.sim, payload.get("plan"))
        doc = run.sim.submit_command(kind, payload)
        if kind == "resume":
            # resume is the loaded -> running transition and restarts pacing
            self.ensure_pacing(run)
        else:
            if kind == "pause" and not run.pacing and run.sim.status == "loaded":
                run.sim.pause()
            self._drain_frozen(run)
        return doc

    def _drain_frozen(self, run: ManagedRun) -> None:
        """Apply queued commands on a frozen run nobody paces.

        Without this, step/approve on a paused-created run would sit queued
        until the first resume. Runs with a live pacing task are left alone;
        its paused branch applies queued work in wall time.
        """
        sim = run.sim
        if run.pacing or sim.status != "paused":
            return
        limit = sim.scenario.limits.max_ticks
        while sim.status == "paused" and sim.tick_once(limit):
            pass

    def _precheck_override(self, sim: Simulation, plan_payload) -> None:
        """Advisory edge check; the gate revalidates when the command applies."""
        if not isinstance(plan_payload, dict):
            raise InvalidOverridePlan("override needs a plan document")
        try:
            plan = Plan.from_payload(plan_payload)
        except Exception as exc:
            raise InvalidOverridePlan(f"plan does not parse: {exc}") from exc
        verdict = sim.reasoner.validate(plan, sim.rules, sim.capture_context())
        if not verdict.ok:
            rules = ", ".join(sorted({v.get("rule", "?") for v in map(dict, verdict.violations)}))
            raise InvalidOverridePlan(f"plan violates rules: {rules}")

    def descriptor(self, run_id: str) -> dict:
        run = self.get(run_id)
        sim = run.sim
        return {
            "run_id": sim.run_id,
            "scenario": sim.scenario.name,
            "seed": sim.scenario.seed,
            "status": sim.status,
            "tick": sim.world.clock,
            "strategy": sim.strategy.kind,
        }
