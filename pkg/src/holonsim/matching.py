"""Resource-to-leg matching.

Fitness is how fast a candidate can reach the leg's start: score is the
negated approach time. Battery is a hard filter on the leg itself, not
on the approach, so scaling every distance by a constant never changes
which resource wins. Ties go to the healthier battery, then the smaller
id, which keeps allocation reproducible run over run.
"""

from __future__ import annotations

from dataclasses import dataclass

from .kernel import NoRoute, ResourceState, WorldState, shortest_route
from .reasoning import Leg

# leg mode -> resource kind able to serve it (walk needs no resource)
MODE_RESOURCE_KIND = {"scooter": "scooter", "air_taxi": "air_taxi", "ground_taxi": "ground_taxi"}


class NoCandidate(Exception):
    """No battery-feasible, reachable resource can serve the leg."""


@dataclass(frozen=True)
class AllocationDecision:
    task_id: str
    resource_id: str
    score: float
    alternatives_considered: int


def rank_candidates(
    scored: list[tuple[ResourceState, float]], service_ticks: int
) -> list[tuple[ResourceState, float]]:
    """Order (resource, approach_time) pairs best-first. Pure.

    Hard filter: battery must cover the leg's own duration. Then argmax
    of -(approach_time), ties by higher battery, then smaller id.
    """
    feasible = [(res, approach) for res, approach in scored if res.battery_feasible(service_ticks)]
    feasible.sort(key=lambda pair: (pair[1], -pair[0].battery, pair[0].id))
    return feasible


def approach_time(world: WorldState, resource: ResourceState, target: str) -> float | None:
    """Ticks for the resource to reach `target`, or None if unreachable."""
    if not isinstance(resource.location, str):
        return None
    if resource.location == target:
        return 0.0
    edge_class = "air" if resource.kind == "air_taxi" else "ground"
    try:
        route = shortest_route(
            world.graph, resource.location, target, {edge_class}, world.active_disruptions()
        )
    except NoRoute:
        return None
    return float(route.total_time)


def match_resources(leg: Leg, candidates: list[ResourceState], world: WorldState) -> AllocationDecision:
    """Pick the best resource for a leg from `candidates`."""
    kind = MODE_RESOURCE_KIND.get(leg.mode)
    if kind is None:
        raise NoCandidate(f"leg mode {leg.mode!r} takes no resource")
    scored: list[tuple[ResourceState, float]] = []
    for res in candidates:
        if res.kind != kind or res.status != "idle":
            continue
        approach = approach_time(world, res, leg.origin)
        if approach is None:
            continue
        scored.append((res, approach))
    ranked = rank_candidates(scored, leg.duration)
    if not ranked:
        raise NoCandidate(f"no feasible {kind} for leg {leg.leg_id}")
    best, best_approach = ranked[0]
    return AllocationDecision(
        task_id=leg.leg_id,
        resource_id=best.id,
        score=-best_approach,
        alternatives_considered=len(candidates),
    )
