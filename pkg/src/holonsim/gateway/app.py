"""HTTP surface: run lifecycle, trips, commands, approvals, event stream."""

from __future__ import annotations

import asyncio
import contextlib
from typing import Optional

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse, StreamingResponse

from ..config import Config
from ..logstore import encode_record
from ..scenario import SchemaError
from .models import (
    ApprovalView,
    CommandAck,
    CommandSubmission,
    CreateRunRequest,
    EventsPage,
    MetricsView,
    RunDescriptor,
    StateView,
    TripAck,
    TripSubmission,
)
from .service import (
    InvalidOverridePlan,
    RunManager,
    UnknownApproval,
    UnknownPassenger,
    UnknownRun,
)

STREAM_POLL_SECONDS = 0.05


def create_app(config: Optional[Config] = None, manager: Optional[RunManager] = None) -> FastAPI:
    manager = manager or RunManager(config)

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        await manager.shutdown()

    app = FastAPI(title="holonsim gateway", lifespan=lifespan)
    app.state.manager = manager

    def error(status: int, name: str, detail=None) -> JSONResponse:
        return JSONResponse({"error": name, "detail": detail}, status_code=status)

    @app.exception_handler(UnknownRun)
    async def _unknown_run(request: Request, exc: UnknownRun):
        return error(404, "UnknownRun", str(exc.args[0]) if exc.args else None)

    @app.exception_handler(UnknownPassenger)
    async def _unknown_passenger(request: Request, exc: UnknownPassenger):
        return error(404, "UnknownPassenger", str(exc.args[0]) if exc.args else None)

    @app.exception_handler(UnknownApproval)
    async def _unknown_approval(request: Request, exc: UnknownApproval):
        return error(404, "UnknownApproval", str(exc.args[0]) if exc.args else None)

    @app.exception_handler(InvalidOverridePlan)
    async def _invalid_override(request: Request, exc: InvalidOverridePlan):
        return error(422, "InvalidOverridePlan", str(exc))

    @app.exception_handler(SchemaError)
    async def _schema_error(request: Request, exc: SchemaError):
        return error(422, "SchemaError", {"path": exc.path, "message": exc.message})

    @app.post("/runs", response_model=RunDescriptor, status_code=201)
    async def create_run(body: CreateRunRequest):
        run = manager.create_run(
            body.scenario,
            seed=body.seed,
            strategy=body.strategy,
            ticks_per_second=body.ticks_per_second,
            paused=body.paused,
        )
        return RunDescriptor(**manager.descriptor(run.sim.run_id))

    @app.post("/runs/{run_id}/trips", response_model=TripAck, status_code=202)
    async def submit_trip(run_id: str, body: TripSubmission):
        doc = manager.submit_trip(run_id, body.passenger, body.text)
        return TripAck(
            request_id=doc["payload"]["request_id"],
            command_id=doc["command_id"],
            at_tick=doc["at_tick"],
        )

    @app.post("/runs/{run_id}/commands", response_model=CommandAck, status_code=202)
    async def submit_command(run_id: str, body: CommandSubmission):
        try:
            kind = body.validated_kind()
        except ValueError as exc:
            return error(422, "UnknownCommand", str(exc))
        doc = manager.submit_command(run_id, kind, body.payload)
        return CommandAck(command_id=doc["command_id"], kind=doc["kind"], at_tick=doc["at_tick"])

    @app.get("/runs/{run_id}/approvals", response_model=list[ApprovalView])
    async def approvals(run_id: str, pending: bool = Query(default=True)):
        run = manager.get(run_id)
        views = [
            a.to_payload()
            for a in run.sim.approvals.values()
            if a.pending or not pending
        ]
        views.sort(key=lambda a: (a["timeout_at"], a["approval_id"]))
        return [ApprovalView(**view) for view in views]

    @app.get("/runs/{run_id}/state", response_model=StateView)
    async def state(run_id: str):
        run = manager.get(run_id)
        return StateView(**run.sim.snapshot())

    @app.get("/runs/{run_id}/metrics", response_model=MetricsView)
    async def metrics(run_id: str):
        run = manager.get(run_id)
        return MetricsView(**run.sim.metrics())

    @app.get("/runs/{run_id}/events")
    async def events(request: Request, run_id: str, from_seq: int = Query(default=0, alias="from")):
        run = manager.get(run_id)
        accept = request.headers.get("accept", "")
        if "text/event-stream" not in accept:
            records = run.sim.log.since(from_seq)
            next_seq = records[-1]["seq"] + 1 if records else from_seq
            return EventsPage(events=records, next=next_seq)

        async def stream():
            cursor = from_seq
            while True:
                records = run.sim.log.since(cursor)
                for rec in records:
                    yield f"id: {rec['seq']}\ndata: {encode_record(rec)}\n\n"
                    cursor = rec["seq"] + 1
                if run.sim.status == "finished" and not run.sim.log.since(cursor):
                    yield "event: end\ndata: {}\n\n"
                    return
                if await request.is_disconnected():
                    return
                await asyncio.sleep(STREAM_POLL_SECONDS)

        return StreamingResponse(stream(), media_type="text/event-stream")

    return app


def serve(config: Optional[Config] = None) -> None:
    """Blocking server start for the CLI."""
    import uvicorn

    config = config or Config()
    uvicorn.run(create_app(config), host="0.0.0.0", port=config.port, log_level="info")
