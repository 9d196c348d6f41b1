"""Per-node named-data forwarder: PIT, FIB and a bounded LRU content store.

The forwarder is a pure transition function: ``on_interest`` / ``on_data``
take the current sim time and return a list of actions for the caller (the
event loop or a test) to execute.  Pre-fetching Interests have multi-second
lifetimes, so PIT entries routinely outlive the content they wait for being
generated; entries are pruned lazily and by a periodic sweep.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field

from .media import DataObject
from .names import ContentName


@dataclass(frozen=True)
class Interest:
    name: ContentName
    lifetime_ms: float
    issue_time: float
    origin_node: str

    def __post_init__(self):
        if self.lifetime_ms <= 0:
            raise ValueError("interest lifetime must be positive")

    @property
    def wire_bytes(self) -> int:
        return len(self.name.uri.encode()) + INTEREST_OVERHEAD_BYTES


INTEREST_OVERHEAD_BYTES = 16
DATA_OVERHEAD_BYTES = 24


def data_wire_bytes(data: DataObject) -> int:
    return data.payload_size + len(data.name.uri.encode()) + DATA_OVERHEAD_BYTES


# action kinds returned by the forwarder
SEND_DATA = "send-data"
FORWARD_INTEREST = "forward-interest"
AGGREGATE = "aggregate"
RETRANSMIT = "retransmit-forward"
NO_ROUTE = "no-route"
DROP_UNSOLICITED = "drop-unsolicited"
CACHE_EVICT = "cache-evict"
DUPLICATE_DATA = "duplicate-data"


@dataclass(frozen=True)
class Action:
    kind: str
    face: object = None
    interest: Interest | None = None
    data: DataObject | None = None


@dataclass
class PitEntry:
    faces: dict = field(default_factory=dict)  # face -> expiry time (ms)
    forwarded: bool = False


class ContentStore:
    """LRU cache of data objects, bounded by object count."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._store: OrderedDict[str, DataObject] = OrderedDict()
        self.evictions = 0

    def get(self, uri: str) -> DataObject | None:
        obj = self._store.get(uri)
        if obj is not None:
            self._store.move_to_end(uri)
        return obj

    def put(self, data: DataObject) -> bool:
        """Insert, evicting the least recently used entry if full.

        Returns True when an eviction happened.
        """
        if self.capacity <= 0:
            return False
        uri = data.name.uri
        evicted = False
        if uri in self._store:
            self._store.move_to_end(uri)
        elif len(self._store) >= self.capacity:
            self._store.popitem(last=False)
            self.evictions += 1
            evicted = True
        self._store[uri] = data
        return evicted

    def __len__(self) -> int:
        return len(self._store)


class Fib:
    """Longest-prefix match over name components."""

    def __init__(self):
        self._routes: dict[tuple[str, ...], object] = {}

    def add(self, prefix: tuple[str, ...], face) -> None:
        self._routes[tuple(prefix)] = face

    def lookup(self, name: ContentName):
        comps = name.components()
        for length in range(len(comps), 0, -1):
            face = self._routes.get(comps[:length])
            if face is not None:
                return face
        return self._routes.get(())

    def __len__(self) -> int:
        return len(self._routes)


class Forwarder:
    def __init__(self, node_id: str, cs_capacity: int = 0):
        self.node_id = node_id
        self.pit: dict[str, PitEntry] = {}
        self.fib = Fib()
        self.cs = ContentStore(cs_capacity)
        self.counters = {NO_ROUTE: 0, DROP_UNSOLICITED: 0, AGGREGATE: 0,
                         DUPLICATE_DATA: 0, RETRANSMIT: 0}

    def on_interest(self, interest: Interest, ingress, now: float) -> list[Action]:
        uri = interest.name.uri
        cached = self.cs.get(uri)
        if cached is not None:
            return [Action(SEND_DATA, face=ingress, data=cached)]
        expiry = now + interest.lifetime_ms
        entry = self.pit.get(uri)
        if entry is not None:
            self._prune_entry(uri, entry, now)
            entry = self.pit.get(uri)
        if entry is not None:
            if ingress in entry.faces:
                # same-face repeat: a downstream retransmission, so forward
                # again (the earlier upstream copy may have been lost)
                entry.faces[ingress] = max(entry.faces[ingress], expiry)
                egress = self.fib.lookup(interest.name)
                if egress is None:
                    self.counters[NO_ROUTE] += 1
                    return [Action(NO_ROUTE, interest=interest)]
                self.counters[RETRANSMIT] += 1
                return [Action(FORWARD_INTEREST, face=egress, interest=interest)]
            entry.faces[ingress] = expiry
            self.counters[AGGREGATE] += 1
            return [Action(AGGREGATE, face=ingress, interest=interest)]
        egress = self.fib.lookup(interest.name)
        if egress is None:
            self.counters[NO_ROUTE] += 1
            return [Action(NO_ROUTE, interest=interest)]
        self.pit[uri] = PitEntry(faces={ingress: expiry}, forwarded=True)
        return [Action(FORWARD_INTEREST, face=egress, interest=interest)]

    def on_data(self, data: DataObject, ingress, now: float) -> list[Action]:
        uri = data.name.uri
        entry = self.pit.pop(uri, None)
        if entry is None:
            self.counters[DROP_UNSOLICITED] += 1
            return [Action(DROP_UNSOLICITED, data=data)]
        actions = []
        for face, expiry in entry.faces.items():
            if expiry >= now:
                actions.append(Action(SEND_DATA, face=face, data=data))
        if self.cs.put(data):
            actions.append(Action(CACHE_EVICT))
        if not actions:
            self.counters[DROP_UNSOLICITED] += 1
            return [Action(DROP_UNSOLICITED, data=data)]
        return actions

    def cancel_pending(self, uri: str, face) -> bool:
        """Locally expire one face's pending interest (over-fetch cancel)."""
        entry = self.pit.get(uri)
        if entry is None or face not in entry.faces:
            return False
        del entry.faces[face]
        if not entry.faces:
            del self.pit[uri]
        return True

    def sweep(self, now: float) -> int:
        """Drop expired PIT state; returns the number of removed entries."""
        dead = [uri for uri, e in self.pit.items()
                if all(exp < now for exp in e.faces.values())]
        for uri in dead:
            del self.pit[uri]
        return len(dead)

    def _prune_entry(self, uri: str, entry: PitEntry, now: float) -> None:
        expired = [f for f, exp in entry.faces.items() if exp < now]
        for f in expired:
            del entry.faces[f]
        if not entry.faces:
            del self.pit[uri]
