"""Multimodal plan search over a captured world projection.

The search enumerates modal combinations - a ground-only ride, and
scooter/air/scooter via every admissible ordered vertiport pair - and
keeps the minimum estimated door-to-door time. Ties prefer the simpler
ground-only plan, then the lexicographically smallest vertiport pair,
so results replay identically.
"""

from __future__ import annotations

from typing import Optional

from ..kernel import CityGraph, NoRoute, Route, empty_route, shortest_route
from .types import (
    Leg,
    NoFeasiblePlan,
    Plan,
    ReasonerContext,
    TaskSpec,
    WALK_TIME_FACTOR,
)

GROUND_MODES = {"ground"}
AIR_MODES = {"air"}


def _excluded_air_edges(ctx: ReasonerContext, spec: TaskSpec) -> set[str]:
    if spec.has_constraint("avoid_turbulence"):
        return set(ctx.turbulent_edges)
    return set()


def _try_route(view: CityGraph, origin: str, dest: str, modes: set[str], excluded: set[str]) -> Optional[Route]:
    try:
        return shortest_route(view, origin, dest, modes, (), exclude_edges=excluded or None)
    except NoRoute:
        return None


def _open_vertiports(view: CityGraph, ctx: ReasonerContext) -> list[str]:
    closed = set(ctx.closed_vertiports)
    return sorted(n.id for n in view.vertiports() if n.id not in closed)


def enumerate_combos(
    view: CityGraph, ctx: ReasonerContext, spec: TaskSpec
) -> list[tuple[int, tuple, list[dict]]]:
    """All feasible modal combinations as (est_time, tie_key, leg skeletons)."""
    excluded_air = _excluded_air_edges(ctx, spec)
    combos: list[tuple[int, tuple, list[dict]]] = []

    ground = _try_route(view, spec.origin, spec.destination, GROUND_MODES, set())
    if ground is not None:
        combos.append(
            (
                ground.total_time,
                (0, "", ""),
                [{"mode": "scooter", "origin": spec.origin, "destination": spec.destination}],
            )
        )

    if not spec.has_constraint("ground_only"):
        vertiports = _open_vertiports(view, ctx)
        for v1 in vertiports:
            for v2 in vertiports:
                if v1 == v2:
                    continue
                air = _try_route(view, v1, v2, AIR_MODES, excluded_air)
                if air is None:
                    continue
                approach = (
                    empty_route(v1)
                    if spec.origin == v1
                    else _try_route(view, spec.origin, v1, GROUND_MODES, set())
                )
                if approach is None:
                    continue
                egress = (
                    empty_route(v2)
                    if spec.destination == v2
                    else _try_route(view, v2, spec.destination, GROUND_MODES, set())
                )
                if egress is None:
                    continue
                total = approach.total_time + air.total_time + egress.total_time
                legs = []
                if approach.edges:
                    legs.append({"mode": "scooter", "origin": spec.origin, "destination": v1})
                legs.append({"mode": "air_taxi", "origin": v1, "destination": v2})
                if egress.edges:
                    legs.append({"mode": "scooter", "origin": v2, "destination": spec.destination})
                combos.append((total, (1, v1, v2), legs))

    max_cost = spec.constraint_value("max_cost")
    if max_cost is not None:
        combos = [c for c in combos if c[0] <= max_cost]
    return combos


def best_combo(view: CityGraph, ctx: ReasonerContext, spec: TaskSpec) -> list[dict]:
    combos = enumerate_combos(view, ctx, spec)
    if not combos:
        raise NoFeasiblePlan(f"no admissible modal combination for {spec.request_id}")
    combos.sort(key=lambda c: (c[0], c[1]))
    return combos[0][2]


def route_for_leg(view: CityGraph, ctx: ReasonerContext, spec: TaskSpec, skeleton: dict) -> Route:
    mode = skeleton["mode"]
    excluded = _excluded_air_edges(ctx, spec) if mode == "air_taxi" else set()
    modes = AIR_MODES if mode == "air_taxi" else GROUND_MODES
    route = _try_route(view, skeleton["origin"], skeleton["destination"], modes, excluded)
    if route is None or not route.edges:
        raise NoFeasiblePlan(
            f"leg {skeleton['origin']}->{skeleton['destination']} ({mode}) has no admissible route"
        )
    if mode == "walk":
        route = Route(nodes=route.nodes, edges=route.edges, total_time=route.total_time * WALK_TIME_FACTOR)
    return route


def materialize(
    ctx: ReasonerContext,
    spec: TaskSpec,
    skeletons: list[dict],
    plan_id: str,
    revision: int = 0,
    start_tick: Optional[int] = None,
    completed_prefix: tuple[Leg, ...] = (),
) -> Plan:
    """Turn leg skeletons into a fully routed draft plan."""
    view = ctx.routing_view()
    legs = list(completed_prefix)
    clock = start_tick if start_tick is not None else max(spec.earliest_departure, ctx.tick)
    label = spec.trip_label
    for skeleton in skeletons:
        route = route_for_leg(view, ctx, spec, skeleton)
        leg = Leg(
            leg_id=f"T_{label}{len(legs) + 1}",
            mode=skeleton["mode"],
            origin=skeleton["origin"],
            destination=skeleton["destination"],
            route=route,
            planned_start=clock,
            planned_end=clock + route.total_time,
            assigned_resource=skeleton.get("assigned_resource"),
        )
        legs.append(leg)
        clock = leg.planned_end
    return Plan(plan_id=plan_id, request_id=spec.request_id, legs=tuple(legs), status="draft", revision=revision)


def revision_skeletons(
    ctx: ReasonerContext,
    spec: TaskSpec,
    remaining: tuple[Leg, ...],
    at_node: str,
) -> list[list[dict]]:
    """Revision candidates from `at_node`, in substitution preference order.

    Order: reroute preserving the remaining modal structure, then
    alternate vertiport pairs, then a ground-taxi ride, which is also
    the air substitution of last resort.
    """
    view = ctx.routing_view()
    candidates: list[list[dict]] = []

    same: list[dict] = []
    cursor = at_node
    feasible = True
    for leg in remaining:
        dest = leg.destination
        if cursor == dest:
            continue
        mode = leg.mode
        modes = AIR_MODES if mode == "air_taxi" else GROUND_MODES
        excluded = _excluded_air_edges(ctx, spec) if mode == "air_taxi" else set()
        if mode == "air_taxi" and (cursor in ctx.closed_vertiports or dest in ctx.closed_vertiports):
            feasible = False
            break
        route = _try_route(view, cursor, dest, modes, excluded)
        if route is None:
            feasible = False
            break
        same.append({"mode": mode, "origin": cursor, "destination": dest, "assigned_resource": leg.assigned_resource})
        cursor = dest
    if feasible and same:
        candidates.append(same)

    if any(leg.mode == "air_taxi" for leg in remaining) and not spec.has_constraint("ground_only"):
        probe = TaskSpec(
            request_id=spec.request_id,
            passenger=spec.passenger,
            origin=at_node,
            destination=spec.destination,
            earliest_departure=spec.earliest_departure,
            constraints=spec.constraints,
            free_text=spec.free_text,
            trip_label=spec.trip_label,
        ) if at_node != spec.destination else None
        if probe is not None:
            for _, key, legs in sorted(enumerate_combos(view, ctx, probe), key=lambda c: (c[0], c[1])):
                if key[0] == 1:  # air-inclusive combos only; same-mode reroute already covered
                    candidates.append(legs)

    if at_node != spec.destination:
        taxi = _try_route(view, at_node, spec.destination, GROUND_MODES, set())
        if taxi is not None:
            candidates.append([{"mode": "ground_taxi", "origin": at_node, "destination": spec.destination}])

    return candidates
