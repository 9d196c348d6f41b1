"""Producer-side data plane.

Publishes chunked frames into a content buffer, matches them against held
pre-fetching Interests, issues key-frame notifications at the configured
cadence, speeds the notification rate up when consumers under-request and
drops Interests that pre-fetch unfairly far ahead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .forwarder import Interest
from .media import DataObject, EncodedFrame, FrameType, chunk_frame
from .names import ContentName, MediaType, build_data_name
from .params import StreamParams
from .sync import Fingerprint, Notification, NotKeyFrameError


class SequenceError(ValueError):
    pass


class InvalidFrameError(ValueError):
    pass


@dataclass(frozen=True)
class ProducerEvent:
    kind: str  # publish | notify | satisfy | drop-unfair | adapt-notify
    time: float
    frame: int
    chunk: int = -1
    size: int = 0


@dataclass
class _PendingFrame:
    chunks: set[int] = field(default_factory=set)
    expiry: dict[int, float] = field(default_factory=dict)  # chunk -> latest expiry


class Producer:
    """One media stream of one user entity.

    Pure state machine: ``publish_frame`` and ``process_interest`` return the
    data objects to inject into the local forwarder plus any notification to
    hand to the sync agent; the caller owns delivery.
    """

    def __init__(self, csr: str, session: str, ue: str, params: StreamParams,
                 retention_frames: int | None = None):
        self.csr = csr
        self.session = session
        self.ue = ue
        self.params = params
        self.k_notify = params.k_notify
        self.next_index = 0
        self.b_min, self.b_max = 0, -1
        self.p_min, self.p_max = 0, -1
        self.content: dict[int, list[DataObject]] = {}
        self.pending: dict[int, _PendingFrame] = {}
        self.notify_seq = 0
        self.retention_frames = retention_frames if retention_frames is not None \
            else 2 * params.n_i_buf
        self.events: list[ProducerEvent] = []
        self.dropped_unfair = 0

    # ------------------------------------------------------------------
    @property
    def tau_notify_ms(self) -> float:
        return self.k_notify * self.params.sigma * self.params.t_f

    def name_for(self, frame_index: int, chunk_index: int) -> ContentName:
        if self.params.media is MediaType.VIDEO:
            suffix = (frame_index, chunk_index)
        else:
            suffix = (frame_index,)
        return build_data_name(self.csr, self.session, self.ue,
                               self.params.media, suffix)

    def _expected_prefetch(self, frame: int) -> int:
        return self.params.estimate_chunks(frame)

    # -- content publish (Algorithm 1) ---------------------------------
    def publish_frame(self, frame: EncodedFrame, now: float):
        """Returns (data objects to send, notification or None)."""
        if frame.index != self.next_index:
            raise SequenceError(
                f"expected frame {self.next_index}, got {frame.index}")
        if frame.size < 1:
            raise InvalidFrameError("zero-size frame")
        i = frame.index
        self.b_max += 1
        chunks = chunk_frame(frame, self.params.l_chunk,
                             lambda j: self.name_for(i, j), now)
        self.content[i] = chunks
        self.events.append(ProducerEvent("publish", now, i, size=frame.size))

        notification = None
        if i % (self.k_notify * self.params.sigma) == 0:
            notification = self._make_notification(i, now)

        sends: list[DataObject] = []
        pend = self.pending.get(i)
        if pend is not None:
            eps = len(chunks)
            for c in sorted(pend.chunks):
                if c < eps:
                    sends.append(chunks[c])
                    self.events.append(ProducerEvent("satisfy", now, i, chunk=c))
            del self.pending[i]
            self._advance_mins()

        self.next_index += 1
        self._evict(i)
        return sends, notification

    # -- interest processing (Algorithm 2) ------------------------------
    def process_interest(self, interest: Interest, now: float) -> list[DataObject]:
        """Returns matching data objects (empty when the Interest is held)."""
        frame = interest.name.frame_index
        chunk = interest.name.chunk_index
        self._prune_frame(frame, now)
        sends: list[DataObject] = []
        stored = added = raised = False
        old_p_max = self.p_max
        held = self.content.get(frame)
        if held is not None and chunk < len(held):
            sends.append(held[chunk])
            self.events.append(ProducerEvent("satisfy", now, frame, chunk=chunk))
            self._advance_mins()
        else:
            stored = True
            pend = self.pending.setdefault(frame, _PendingFrame())
            if chunk not in pend.chunks:
                pend.chunks.add(chunk)
                added = True
            pend.expiry[chunk] = max(pend.expiry.get(chunk, 0.0),
                                     now + interest.lifetime_ms)
            if (len(pend.chunks) >= self._expected_prefetch(frame)
                    and frame > self.p_max):
                self.p_max = frame
                raised = True
        if self.p_max - self.b_max < self.params.omega * self.params.n_theta:
            if self.k_notify > 1:
                self.k_notify -= 1
                self.events.append(ProducerEvent("adapt-notify", now, frame))
        if (self.p_max - self.b_max > self.params.xi * self.params.n_theta
                and stored):
            pend = self.pending.get(frame)
            if added and pend is not None:
                pend.chunks.discard(chunk)
                pend.expiry.pop(chunk, None)
                if not pend.chunks:
                    del self.pending[frame]
            if raised:
                self.p_max = old_p_max
            self.dropped_unfair += 1
            self.events.append(ProducerEvent("drop-unfair", now, frame, chunk=chunk))
        return sends

    # ------------------------------------------------------------------
    def issue_notification(self, key_frame_index: int, now: float) -> Notification:
        if key_frame_index % (self.k_notify * self.params.sigma) != 0:
            raise NotKeyFrameError(
                f"frame {key_frame_index} is not on the notification cadence")
        return self._make_notification(key_frame_index, now)

    def _make_notification(self, anchor: int, now: float) -> Notification:
        self.notify_seq += 1
        fp = Fingerprint(self.session, self.ue, self.params.media, anchor)
        self.events.append(ProducerEvent("notify", now, anchor))
        return Notification(self.notify_seq, fp, now)

    # ------------------------------------------------------------------
    def _advance_mins(self) -> None:
        self.p_min = min(self.pending) if self.pending else self.p_max + 1
        if self.b_max >= 0:
            self.b_min = max(self.b_min, min(self.p_min, self.b_max))

    def _evict(self, latest: int) -> None:
        floor = latest - self.retention_frames
        if floor in self.content:
            del self.content[floor]

    def _prune_frame(self, frame: int, now: float) -> None:
        pend = self.pending.get(frame)
        if pend is None:
            return
        dead = [c for c, exp in pend.expiry.items() if exp < now]
        for c in dead:
            pend.chunks.discard(c)
            del pend.expiry[c]
        if not pend.chunks:
            del self.pending[frame]

    def prune_expired(self, now: float) -> None:
        """Drop every expired held Interest; cheap enough to run per anchor
        interval from a periodic sweep."""
        for f in list(self.pending):
            self._prune_frame(f, now)

    def snapshot(self) -> tuple:
        return (self.b_min, self.b_max, self.p_min, self.p_max, self.k_notify)


class TextPublisher:
    """Per-message naming and notification for the chat stream.

    Text has no cadence: every committed message yields a notification whose
    anchor is the message index.
    """

    def __init__(self, csr: str, session: str, ue: str):
        self.csr = csr
        self.session = session
        self.ue = ue
        self.next_message = 0
        self.notify_seq = 0

    def commit(self, text: str, now: float) -> tuple[ContentName, Notification]:
        index = self.next_message
        self.next_message += 1
        name = build_data_name(self.csr, self.session, self.ue,
                               MediaType.TEXT, (index,))
        self.notify_seq += 1
        fp = Fingerprint(self.session, self.ue, MediaType.TEXT, index)
        return name, Notification(self.notify_seq, fp, now)
