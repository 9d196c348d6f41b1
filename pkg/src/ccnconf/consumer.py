"""Consumer-side data plane.

One ``ConsumerStream`` tracks a single remote producer stream: notification
handling moves the pre-fetch window (with lag and failure jumps), a periodic
tick extends the window one frame at a time and assigns play-out times, and
content-object processing repairs under-fetched frames, cancels over-fetched
Interests and advances the window floor.  Release of completed frames is
gated by an audio/video skew window kept per remote producer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .media import DataObject
from .names import ContentName, MediaType, build_data_name
from .params import StreamParams
from .sync import Notification

AV_SKEW_MIN_MS = -125.0  # audio may lag video this much
AV_SKEW_MAX_MS = 45.0    # audio may lead video this much


class ContractViolationError(ValueError):
    pass


def compute_playout_time(kind: str, *, t_notify: float = 0.0,
                         theta_ms: float = 0.0, delta_e2e_ms: float = 0.0,
                         de_jitter_ms: float = 0.0, delta_dec_ms: float = 0.0,
                         delta_rtt_ms: float = 0.0, prev_tau: float = 0.0,
                         t_f: float = 0.0, frame_index: int | None = None,
                         anchor: int | None = None) -> float:
    """Play-out time of the first frame of a fetch window, or of a successor.

    The first-frame form anchors the schedule to the notification receive
    time plus the fetch-ahead duration, minus the budgeted delivery, decode
    and smoothing delays; successors advance by one frame duration.
    """
    if kind == "first":
        if frame_index is not None and anchor is not None:
            if t_f <= 0:
                raise ContractViolationError("t_f required to validate the first frame")
            if frame_index != anchor + round(theta_ms / t_f):
                raise ContractViolationError(
                    f"first frame {frame_index} is not theta ahead of anchor {anchor}")
        return t_notify + theta_ms + delta_e2e_ms - (
            de_jitter_ms + delta_dec_ms + delta_rtt_ms)
    if kind == "successor":
        if t_f <= 0:
            raise ContractViolationError("successor form needs t_f > 0")
        return prev_tau + t_f
    raise ValueError(f"unknown kind {kind!r}")


@dataclass
class FrameInfo:
    index: int
    requested: int = 0
    received: set[int] = field(default_factory=set)
    eps: int | None = None
    complete: bool = False
    repaired: bool = False
    cancelled: int = 0
    discarded: bool = False
    generation_time: float | None = None
    media_timestamp: float | None = None
    first_request_time: float | None = None
    first_chunk_time: float | None = None
    complete_time: float | None = None
    tau: float | None = None
    headroom_ms: float | None = None
    released_at: float | None = None
    late: bool = False


@dataclass(frozen=True)
class StreamEvent:
    kind: str  # interest | repair | cancel | frame-complete | frame-late |
               # frame-lost | playout | jump-lag | jump-fail
    time: float
    frame: int
    latency_ms: float = -1.0


@dataclass(frozen=True)
class InterestRequest:
    frame: int
    chunks: tuple[int, ...]
    repair: bool = False
    retransmit: bool = False  # re-expression after a window jump; the issuer
                              # must flush its own pending state first


@dataclass(frozen=True)
class CancelRequest:
    frame: int
    chunks: tuple[int, ...]


class ConsumerStream:
    def __init__(self, csr: str, session: str, producer_ue: str,
                 params: StreamParams):
        self.csr = csr
        self.session = session
        self.producer_ue = producer_ue
        self.params = params
        self.started = False
        self.r_min, self.r_max = 0, -1
        self.r_min_star, self.r_max_star = 0, -1
        self.k = -1
        self.t_notify = 0.0
        self.window_anchor_time = 0.0
        self.last_anchor: int | None = None
        self.frames: dict[int, FrameInfo] = {}
        self.tau_log: list[tuple[int, float]] = []
        self.events: list[StreamEvent] = []
        self.stale_notifications = 0
        self.duplicate_chunks = 0
        self.discarded_chunks = 0
        self.finalized = False
        self.jumps = 0
        self._release_cursor = 0  # index into tau_log; play-out is in order

    # ------------------------------------------------------------------
    def name_for(self, frame: int, chunk: int) -> ContentName:
        if self.params.media is MediaType.VIDEO:
            suffix = (frame, chunk)
        else:
            suffix = (frame,)
        return build_data_name(self.csr, self.session, self.producer_ue,
                               self.params.media, suffix)

    # -- notification handling (Algorithm 3) ----------------------------
    def on_notification(self, n: Notification, now: float) -> list[InterestRequest]:
        anchor = n.fingerprint.anchor
        if self.last_anchor is not None and anchor < self.last_anchor:
            self.stale_notifications += 1
            return []
        self.last_anchor = anchor
        self.t_notify = now
        p = self.params
        if not self.started:
            self.r_min = anchor + p.n_theta
            self.r_max = self.r_min + p.n_r_buf
            self.started = True
            return self._bootstrap(now)
        if anchor > self.r_min + p.n_r_buf:
            self.r_min = anchor + p.n_theta
            self.r_max = self.r_min + p.n_r_buf
            self.jumps += 1
            self.events.append(StreamEvent("jump-fail", now, anchor))
        elif anchor > self.r_min + p.gamma * p.n_r_buf:
            self.r_min = anchor + math.floor(p.beta * p.n_theta)
            self.r_max = self.r_min + p.n_r_buf
            self.jumps += 1
            self.events.append(StreamEvent("jump-lag", now, anchor))
        return []

    # -- pre-fetching (Algorithm 4) --------------------------------------
    def _assign_tau(self, frame: int, tau: float) -> None:
        info = self.frames[frame]
        info.tau = tau
        self.tau_log.append((frame, tau))

    def _request(self, frame: int, count: int, now: float,
                 repair: bool = False) -> InterestRequest | None:
        info = self.frames.get(frame)
        if info is None:
            info = self.frames[frame] = FrameInfo(frame)
        if info.first_request_time is None:
            info.first_request_time = now
        start = info.requested
        if count <= start:
            return None
        info.requested = count
        chunks = tuple(range(start, count))
        kind = "repair" if repair else "interest"
        self.events.append(StreamEvent(kind, now, frame))
        if repair:
            info.repaired = True
        return InterestRequest(frame, chunks, repair=repair)

    def _bootstrap(self, now: float) -> list[InterestRequest]:
        p = self.params
        self.window_anchor_time = self.t_notify
        requests = []
        for k in range(self.r_min, self.r_max + 1):
            self.frames.setdefault(k, FrameInfo(k))
            if k == self.r_min:
                tau = compute_playout_time(
                    "first", t_notify=self.t_notify, theta_ms=p.theta_ms,
                    delta_e2e_ms=p.delta_e2e_ms, de_jitter_ms=p.de_jitter_ms,
                    delta_dec_ms=p.delta_dec_ms, delta_rtt_ms=p.delta_rtt_ms)
            else:
                tau = self.frames[k - 1].tau + p.t_f
            self._assign_tau(k, tau)
            req = self._request(k, p.estimate_chunks(k), now)
            if req:
                requests.append(req)
            self.frames[k].headroom_ms = (
                tau + (self.r_max - k) * p.t_f - self.window_anchor_time)
        self.k = self.r_max
        self.r_min_star, self.r_max_star = self.r_min, self.r_max
        return requests

    def tick(self, now: float) -> list[InterestRequest]:
        if not self.started:
            return []
        p = self.params
        requests: list[InterestRequest] = []
        if self.r_min > self.r_max_star:
            self._discard_below(self.r_min, now)
            requests = self._bootstrap(now)
        else:
            if self.k == self.r_max:
                if self.r_max - self.r_min < p.n_r_buf:
                    self.k += 1
                    self.r_max = self.k
                    prev_tau = self.frames[self.k - 1].tau
                    self.frames.setdefault(self.k, FrameInfo(self.k))
                    self._assign_tau(self.k, prev_tau + p.t_f)
                    req = self._request(self.k, p.estimate_chunks(self.k), now)
                    if req:
                        requests.append(req)
                    self.frames[self.k].headroom_ms = (
                        self.frames[self.k].tau - self.window_anchor_time)
            elif self.k < self.r_max:
                if self.r_min_star < self.r_min <= self.r_max_star:
                    self._discard_below(self.r_min, now, start=self.r_min_star)
                    # disruption recovery: interests for still-wanted frames
                    # may have been lost with the link, so re-express what is
                    # outstanding (answered from cache or producer; pending
                    # duplicates aggregate upstream and cost nothing)
                    for f in range(self.r_min, min(self.r_max_star, self.r_max) + 1):
                        info = self.frames.get(f)
                        if info is None or info.complete or info.requested <= 0:
                            continue
                        missing = tuple(c for c in range(info.requested)
                                        if c not in info.received)
                        if missing:
                            requests.append(InterestRequest(f, missing,
                                                            retransmit=True))
                            self.events.append(StreamEvent("interest", now, f))
                    for f in range(self.r_max_star + 1, self.r_max + 1):
                        prev_tau = self.frames[f - 1].tau
                        self.frames.setdefault(f, FrameInfo(f))
                        self._assign_tau(f, prev_tau + p.t_f)
                        req = self._request(f, p.estimate_chunks(f), now)
                        if req:
                            requests.append(req)
                        self.frames[f].headroom_ms = (
                            self.frames[f].tau + (self.r_max - f) * p.t_f
                            - self.window_anchor_time)
                    self.k = self.r_max
            self.r_min_star, self.r_max_star = self.r_min, self.r_max
        return requests

    def _discard_below(self, floor: int, now: float, start: int | None = None) -> None:
        lo = self.r_min_star if start is None else start
        for f in range(lo, floor):
            info = self.frames.get(f)
            if info is not None and not info.complete and not info.discarded:
                info.discarded = True
                self.events.append(StreamEvent("frame-lost", now, f))

    def pending_chunk_names(self, frame: int) -> list[ContentName]:
        """Names of this frame's unanswered chunk Interests (for local cancel)."""
        info = self.frames.get(frame)
        if info is None:
            return []
        return [self.name_for(frame, c) for c in range(info.requested)
                if c not in info.received]

    # -- content-object processing (Algorithm 5) ------------------------
    def on_content_object(self, data: DataObject, now: float
                          ) -> tuple[list[InterestRequest], list[CancelRequest]]:
        frame = data.name.frame_index
        chunk = data.name.chunk_index
        requests: list[InterestRequest] = []
        cancels: list[CancelRequest] = []
        if self.r_min <= frame <= self.r_max:
            info = self.frames.get(frame)
            if info is None:
                self.discarded_chunks += 1
                return requests, cancels
            if chunk in info.received:
                self.duplicate_chunks += 1
                return requests, cancels
            info.received.add(chunk)
            if info.first_chunk_time is None:
                info.first_chunk_time = now
                info.generation_time = data.generation_time
                info.media_timestamp = data.metadata.media_timestamp
            eps = data.metadata.total_chunks
            info.eps = eps
            if eps > info.requested:
                req = self._request(frame, eps, now, repair=True)
                if req:
                    requests.append(req)
            elif eps < info.requested:
                extra = tuple(range(eps, info.requested))
                info.requested = eps
                info.cancelled += len(extra)
                cancels.append(CancelRequest(frame, extra))
                self.events.append(StreamEvent("cancel", now, frame))
            if not info.complete and len(info.received) == eps:
                info.complete = True
                info.complete_time = now
                latency = (now - info.generation_time
                           if info.generation_time is not None else -1.0)
                self.events.append(StreamEvent("frame-complete", now, frame, latency))
                if (info.tau is not None
                        and now > info.tau - self.params.delta_dec_ms):
                    info.late = True
                    self.events.append(StreamEvent("frame-late", now, frame, latency))
                if frame == self.r_min:
                    r = self.r_min
                    while r <= self.r_max:
                        nxt = self.frames.get(r)
                        if nxt is None or not nxt.complete:
                            break
                        r += 1
                    self.r_min = r
        elif self.r_min > frame:
            self.discarded_chunks += 1
        else:
            self.discarded_chunks += 1
        return requests, cancels

    # -- play-out --------------------------------------------------------
    def release_next(self, now: float) -> FrameInfo | None:
        """Next frame due for in-order play-out, or None.

        Frames whose deadline passed without on-time completion are skipped
        permanently (tau values are assigned in frame order, so the cursor
        only ever moves forward).
        """
        while self._release_cursor < len(self.tau_log):
            frame, tau = self.tau_log[self._release_cursor]
            if tau > now:
                return None
            info = self.frames.get(frame)
            if (info is None or info.discarded or info.late
                    or info.released_at is not None or not info.complete):
                self._release_cursor += 1
                continue
            return info
        return None

    def mark_released(self, info: FrameInfo, now: float) -> None:
        info.released_at = now
        self._release_cursor += 1
        self.events.append(StreamEvent("playout", now, info.index,
                                       now - (info.generation_time or now)))

    def finalize(self, now: float) -> None:
        """Flag frames that never completed as lost (end of run)."""
        if self.finalized:
            return
        self.finalized = True
        for f, info in sorted(self.frames.items()):
            if not info.complete and not info.discarded:
                info.discarded = True
                self.events.append(StreamEvent("frame-lost", now, f))

    def snapshot(self) -> tuple:
        return (self.r_min, self.r_max, self.k, self.started)


class AVSync:
    """Release gate keeping released audio/video skew within bounds."""

    def __init__(self, skew_min: float = AV_SKEW_MIN_MS,
                 skew_max: float = AV_SKEW_MAX_MS):
        self.skew_min = skew_min
        self.skew_max = skew_max
        self.last_audio_ts: float | None = None
        self.last_video_ts: float | None = None

    def may_release(self, media: MediaType, media_ts: float) -> bool:
        if media is MediaType.AUDIO:
            if self.last_video_ts is None:
                return True
            return media_ts - self.last_video_ts <= self.skew_max
        if media is MediaType.VIDEO:
            if self.last_audio_ts is None:
                return True
            return self.last_audio_ts - media_ts >= self.skew_min
        return True

    def released(self, media: MediaType, media_ts: float) -> None:
        if media is MediaType.AUDIO:
            self.last_audio_ts = media_ts
        elif media is MediaType.VIDEO:
            self.last_video_ts = media_ts

    def reset(self) -> None:
        """Forget the pairing across a play-back discontinuity (window jump);
        skew is only meaningful within continuous play-out."""
        self.last_audio_ts = None
        self.last_video_ts = None
