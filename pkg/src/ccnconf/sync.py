"""Name-sync notification framework: agent, proxy and manager tiers.

Fingerprints identify a producer stream's latest namespace anchor (the key
frame a pre-fetching consumer should sync against).  Agents push fresh
fingerprints to their edge proxy; the proxy appends to a bounded per-session
history, fans out to its other local members and forwards one copy to the
central manager, which relays hub-and-spoke to every other member proxy.
All tiers are pure state machines returning actions for the event loop.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .names import ContentName, MediaType, NotificationName, WrongNameClassError

DEFAULT_HISTORY_DEPTH = 8
DEFAULT_NOTIFICATION_BYTES = 120

# hop labels used in the notification trace
HOP_AGENT_PROXY = "agent->proxy"
HOP_PROXY_MANAGER = "proxy->manager"
HOP_MANAGER_PROXY = "manager->proxy"
HOP_PROXY_AGENT = "proxy->agent"


class SessionNotProvisionedError(ValueError):
    pass


class UnknownSourceError(ValueError):
    pass


class NotKeyFrameError(ValueError):
    pass


@dataclass(frozen=True)
class Fingerprint:
    conf_session_id: str
    ue_id: str
    media_type: MediaType
    anchor: int  # key-frame index announced by the notification

    @property
    def producer_key(self) -> tuple[str, str]:
        return (self.ue_id, self.media_type.value)

    def as_text(self) -> str:
        return f"{self.conf_session_id}.{self.ue_id}.{self.media_type.value}.{self.anchor}"


@dataclass(frozen=True)
class Notification:
    seq: int  # per (producer, media) monotone index
    fingerprint: Fingerprint
    issue_time: float


def derive_fingerprint(name: ContentName, gop_size: int) -> Fingerprint:
    """Anchor a data name to the key frame of its group."""
    if not isinstance(name, ContentName):
        raise WrongNameClassError("notification names carry no media suffix")
    if gop_size < 1:
        raise ValueError("gop_size must be >= 1")
    anchor = gop_size * (name.frame_index // gop_size)
    return Fingerprint(name.conf_session_id, name.ue_id, name.media_type, anchor)


def notification_name(csr: str, service_function: str, fp: Fingerprint) -> NotificationName:
    return NotificationName(csr, service_function, fp.as_text())


@dataclass(frozen=True)
class Registration:
    conf_session_id: str
    ue_id: str


class _History:
    """Bounded per-(session, producer) notification history."""

    def __init__(self, depth: int):
        self.depth = depth
        self._entries: dict[tuple[str, tuple[str, str]], deque[Notification]] = {}

    def append(self, n: Notification) -> None:
        key = (n.fingerprint.conf_session_id, n.fingerprint.producer_key)
        dq = self._entries.get(key)
        if dq is None:
            dq = self._entries[key] = deque(maxlen=self.depth)
        dq.append(n)

    def latest(self, session: str, producer_key: tuple[str, str]) -> Notification | None:
        dq = self._entries.get((session, producer_key))
        return dq[-1] if dq else None


class SyncAgent:
    """Per-UE endpoint of the name-sync framework."""

    def __init__(self, ue_id: str):
        self.ue_id = ue_id
        self.sessions: set[str] = set()
        self.last_anchor: dict[tuple[str, str], int] = {}
        self.stale_dropped = 0

    def register(self, session: str) -> Registration:
        self.sessions.add(session)
        return Registration(session, self.ue_id)

    def deregister(self, session: str) -> None:
        self.sessions.discard(session)

    def accept(self, n: Notification) -> bool:
        """Track delivered anchors; stale (regressing) anchors are dropped."""
        key = n.fingerprint.producer_key
        last = self.last_anchor.get(key)
        if last is not None and n.fingerprint.anchor < last:
            self.stale_dropped += 1
            return False
        self.last_anchor[key] = n.fingerprint.anchor
        return True


class SyncProxy:
    """Edge-hosted relay keeping per-session membership and history."""

    def __init__(self, proxy_id: str, provisioned_sessions: set[str],
                 history_depth: int = DEFAULT_HISTORY_DEPTH):
        self.proxy_id = proxy_id
        self.provisioned_sessions = set(provisioned_sessions)
        self.registered_agents: dict[str, set[str]] = {}
        self.history = _History(history_depth)
        self.last_seq: dict[tuple[str, tuple[str, str]], int] = {}
        self.stale_dropped = 0

    def register_agent(self, reg: Registration) -> list[tuple[str, object]]:
        """Returns actions: controller event plus a manager membership update.

        Repeat registrations are idempotent and produce no actions.
        """
        if reg.conf_session_id not in self.provisioned_sessions:
            raise SessionNotProvisionedError(reg.conf_session_id)
        members = self.registered_agents.setdefault(reg.conf_session_id, set())
        if reg.ue_id in members:
            return []
        members.add(reg.ue_id)
        return [("controller-event", reg), ("register-with-manager", reg)]

    def deregister_agent(self, reg: Registration) -> list[tuple[str, object]]:
        members = self.registered_agents.get(reg.conf_session_id)
        if not members or reg.ue_id not in members:
            return []
        members.discard(reg.ue_id)
        return [("controller-event", reg), ("deregister-with-manager", reg)]

    def on_agent_notify(self, n: Notification) -> list[tuple[str, object]]:
        """Accept a local producer's notification: history, local fan, manager.

        The manager never echoes back to the source proxy, so local member
        agents (other than the producer itself) are served here.
        """
        session = n.fingerprint.conf_session_id
        if session not in self.provisioned_sessions:
            raise SessionNotProvisionedError(session)
        if self._is_stale(n):
            return [("drop-stale", n)]
        self.history.append(n)
        actions: list[tuple[str, object]] = []
        for ue in sorted(self.registered_agents.get(session, ())):
            if ue != n.fingerprint.ue_id:
                actions.append(("notify-agent", (ue, n)))
        actions.append(("forward-to-manager", n))
        return actions

    def on_manager_notify(self, n: Notification) -> list[tuple[str, object]]:
        """Relay a remote producer's notification to local member agents."""
        if self._is_stale(n):
            return [("drop-stale", n)]
        self.history.append(n)
        session = n.fingerprint.conf_session_id
        return [("notify-agent", (ue, n))
                for ue in sorted(self.registered_agents.get(session, ()))
                if ue != n.fingerprint.ue_id]

    def _is_stale(self, n: Notification) -> bool:
        key = (n.fingerprint.conf_session_id, n.fingerprint.producer_key)
        last = self.last_seq.get(key)
        if last is not None and n.seq <= last:
            self.stale_dropped += 1
            return True
        self.last_seq[key] = n.seq
        return False


class SyncManager:
    """Hub of the name-sync framework."""

    def __init__(self, history_depth: int = DEFAULT_HISTORY_DEPTH):
        self.proxies: set[str] = set()
        self.session_membership: dict[str, set[str]] = {}
        self.history = _History(history_depth)

    def register_proxy(self, proxy_id: str) -> None:
        self.proxies.add(proxy_id)

    def on_membership(self, proxy_id: str, reg: Registration, joined: bool) -> None:
        if proxy_id not in self.proxies:
            raise UnknownSourceError(proxy_id)
        members = self.session_membership.setdefault(reg.conf_session_id, set())
        if joined:
            members.add(proxy_id)

    def relay(self, n: Notification, from_proxy: str) -> list[tuple[str, Notification]]:
        """One copy to every other member proxy of the notification's session."""
        if from_proxy not in self.proxies:
            raise UnknownSourceError(from_proxy)
        self.history.append(n)
        members = self.session_membership.get(n.fingerprint.conf_session_id, ())
        return [(proxy, n) for proxy in sorted(members) if proxy != from_proxy]

    def history_query(self, session: str, producer_key: tuple[str, str]) -> Notification | None:
        return self.history.latest(session, producer_key)
