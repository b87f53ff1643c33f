"""Deterministic event queue ordered by (time, sequence number).

Sequence numbers are assigned monotonically at scheduling time, so ties
at the same tick replay in scheduling order. Handlers run when the event
is processed; they may schedule further events at the current tick or
later, never in the past.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Any, Callable, Optional


@dataclass(order=True)
class Event:
    time: int
    seq: int
    kind: str = field(compare=False)
    payload: dict = field(compare=False, default_factory=dict)
    handler: Optional[Callable[["Event"], None]] = field(compare=False, default=None)


class Scheduler:
    def __init__(self) -> None:
        self._heap: list[Event] = []
        self._next_seq = 0

    def schedule(
        self,
        time: int,
        kind: str,
        payload: dict | None = None,
        handler: Callable[[Event], None] | None = None,
    ) -> Event:
        event = Event(time=time, seq=self._next_seq, kind=kind, payload=payload or {}, handler=handler)
        self._next_seq += 1
        heapq.heappush(self._heap, event)
        return event

    def peek_time(self) -> int | None:
        return self._heap[0].time if self._heap else None

    def pop_due(self, until: int) -> Event | None:
        if self._heap and self._heap[0].time <= until:
            return heapq.heappop(self._heap)
        return None

    def __len__(self) -> int:
        return len(self._heap)
