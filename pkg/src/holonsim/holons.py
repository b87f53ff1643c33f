"""Holon identity, the recursive holarchy registry, and message passing.

A holon is simultaneously a whole and a part: it owns capabilities and
an inbox, and it sits at exactly one position in a strict tree rooted at
the system-of-systems supervisor. The registry is the single owner of
that tree and of the capability index used for discovery.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fnmatch import fnmatchcase
from typing import Callable, Iterable, Optional

HOLON_ROLES = ("supervisor", "planner", "task", "resource_human", "resource_machine")
MESSAGE_KINDS = ("request", "inform", "propose", "accept", "reject", "status", "command")

# minimal payload contract per performative: required top-level keys
_PAYLOAD_SCHEMAS = {
    "request": ("action",),
    "inform": ("event",),
    "propose": ("plan",),
    "accept": ("subject",),
    "reject": ("subject", "reason"),
    "status": ("event",),
    "command": ("action",),
}


class RegistryError(Exception):
    pass


class DuplicateId(RegistryError):
    pass


class MissingParent(RegistryError):
    pass


class SecondRoot(RegistryError):
    pass


class UnknownHolon(RegistryError):
    pass


class UnknownRecipient(RegistryError):
    pass


class RootDetach(RegistryError):
    pass


class MessageSchemaError(RegistryError):
    pass


@dataclass(frozen=True, order=True)
class HolonId:
    path: tuple[str, ...]

    def __post_init__(self):
        if not self.path:
            raise ValueError("holon id path must be non-empty")
        for segment in self.path:
            if not segment or "/" in segment:
                raise ValueError(f"bad id segment {segment!r}")

    @classmethod
    def parse(cls, text: str) -> "HolonId":
        return cls(tuple(text.split("/")))

    @classmethod
    def of(cls, *segments: str) -> "HolonId":
        return cls(tuple(segments))

    @property
    def leaf(self) -> str:
        return self.path[-1]

    @property
    def parent(self) -> Optional["HolonId"]:
        return HolonId(self.path[:-1]) if len(self.path) > 1 else None

    def child(self, segment: str) -> "HolonId":
        return HolonId(self.path + (segment,))

    def is_ancestor_of(self, other: "HolonId") -> bool:
        return len(self.path) < len(other.path) and other.path[: len(self.path)] == self.path

    def within(self, scope: "HolonId") -> bool:
        return self == scope or scope.is_ancestor_of(self)

    def __str__(self) -> str:
        return "/".join(self.path)


@dataclass(frozen=True)
class CapabilityDescriptor:
    name: str
    input_schema: dict = field(default_factory=dict)
    output_schema: dict = field(default_factory=dict)
    cost_hint: float = 1.0


@dataclass
class Message:
    id: str
    sender: HolonId
    recipient: HolonId
    kind: str
    payload: dict
    correlation: Optional[str] = None
    sent_at: int = 0


@dataclass(frozen=True)
class DeliveryReceipt:
    message_id: str
    seq: int


@dataclass
class DetachReport:
    detached: list[HolonId]
    orphaned_tasks: list[str]


def check_payload(kind: str, payload: dict) -> None:
    if kind not in MESSAGE_KINDS:
        raise MessageSchemaError(f"unknown message kind {kind!r}")
    missing = [key for key in _PAYLOAD_SCHEMAS[kind] if key not in payload]
    if missing:
        raise MessageSchemaError(f"{kind} payload missing keys {missing}")


class Holon:
    """A registered unit: identity, role, capabilities, inbox.

    Behavior lives in subclasses; the base class is inert and usable
    directly in tests.
    """

    def __init__(
        self,
        id: HolonId,
        role: str,
        capabilities: Iterable[CapabilityDescriptor] = (),
        reasoner_binding: str = "mock",
    ):
        if role not in HOLON_ROLES:
            raise ValueError(f"unknown holon role {role!r}")
        self.id = id
        self.role = role
        self.capabilities: dict[str, CapabilityDescriptor] = {}
        for cap in capabilities:
            if cap.name in self.capabilities:
                raise ValueError(f"holon {id}: duplicate capability {cap.name!r}")
            self.capabilities[cap.name] = cap
        self.parent: Optional[HolonId] = None
        self.children: list[HolonId] = []
        self.reasoner_binding = reasoner_binding
        self.inbox: deque[Message] = deque()

    def active_tasks(self) -> list[str]:
        """Task ids this holon is currently executing (detach reporting)."""
        return []

    def handle(self, msg: Message, ctx) -> None:  # pragma: no cover - overridden
        pass


# delivery hook: (message, seq) -> None; installed by the runtime to route
# deliveries through the scheduled event queue instead of delivering inline
Transport = Callable[[Message, int], None]


class HolonRegistry:
    def __init__(self, transport: Optional[Transport] = None):
        self._holons: dict[tuple[str, ...], Holon] = {}
        self.root: Optional[HolonId] = None
        self._capability_index: dict[str, list[HolonId]] = {}
        self._transport = transport
        self._send_seq = 0

    # -- structure ---------------------------------------------------------

    def register(self, holon: Holon, parent: Optional[HolonId] = None) -> HolonId:
        key = holon.id.path
        if key in self._holons:
            raise DuplicateId(f"holon id {holon.id} already registered")
        if parent is None:
            if self.root is not None:
                raise SecondRoot(f"root {self.root} already exists")
            if len(holon.id.path) != 1:
                raise MissingParent(f"root id {holon.id} must be a single segment")
            self.root = holon.id
        else:
            parent_holon = self._holons.get(parent.path)
            if parent_holon is None:
                raise MissingParent(f"parent {parent} not registered")
            if holon.id.parent != parent:
                raise MissingParent(f"id {holon.id} is not a direct child of {parent}")
            parent_holon.children.append(holon.id)
        holon.parent = parent
        self._holons[key] = holon
        for name in holon.capabilities:
            self._capability_index.setdefault(name, []).append(holon.id)
        return holon.id

    def get(self, id: HolonId) -> Holon:
        holon = self._holons.get(id.path)
        if holon is None:
            raise UnknownHolon(f"no holon {id}")
        return holon

    def contains(self, id: HolonId) -> bool:
        return id.path in self._holons

    def all_holons(self) -> list[Holon]:
        return [self._holons[key] for key in sorted(self._holons)]

    def subtree(self, scope: HolonId) -> list[Holon]:
        self.get(scope)
        return [h for h in self.all_holons() if h.id.within(scope)]

    def detach(self, id: HolonId) -> DetachReport:
        holon = self.get(id)
        if self.root == id:
            raise RootDetach("cannot detach the root supervisor")
        removed = [h.id for h in self.subtree(id)]
        removed_set = set(removed)
        orphaned: set[str] = set()
        for rid in removed:
            orphaned.update(self._holons[rid.path].active_tasks())
            del self._holons[rid.path]
        for name in list(self._capability_index):
            kept = [hid for hid in self._capability_index[name] if hid not in removed_set]
            if kept:
                self._capability_index[name] = kept
            else:
                del self._capability_index[name]
        if holon.parent is not None:
            self.get(holon.parent).children.remove(id)
        return DetachReport(detached=removed, orphaned_tasks=sorted(orphaned))

    # -- discovery ----------------------------------------------------------

    def query_capabilities(
        self, pattern: str, scope: Optional[HolonId] = None
    ) -> list[tuple[HolonId, CapabilityDescriptor]]:
        if scope is None:
            scope = self.root
        if scope is None:
            return []
        self.get(scope)
        hits: list[tuple[HolonId, CapabilityDescriptor]] = []
        for name in self._capability_index:
            if not fnmatchcase(name, pattern):
                continue
            for hid in self._capability_index[name]:
                if hid.within(scope):
                    hits.append((hid, self.get(hid).capabilities[name]))
        hits.sort(key=lambda item: (item[0], item[1].name))
        return hits

    # -- messaging ----------------------------------------------------------

    def send(self, msg: Message) -> DeliveryReceipt:
        if not self.contains(msg.sender):
            raise UnknownHolon(f"sender {msg.sender} not registered")
        if not self.contains(msg.recipient):
            raise UnknownRecipient(f"recipient {msg.recipient} not registered")
        check_payload(msg.kind, msg.payload)
        seq = self._send_seq
        self._send_seq += 1
        if self._transport is not None:
            self._transport(msg, seq)
        else:
            self.get(msg.recipient).inbox.append(msg)
        return DeliveryReceipt(message_id=msg.id, seq=seq)

    def deliver(self, msg: Message) -> bool:
        """Final delivery into the inbox; False when the recipient is gone."""
        holon = self._holons.get(msg.recipient.path)
        if holon is None:
            return False
        holon.inbox.append(msg)
        return True
