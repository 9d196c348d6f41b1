"""Straight-line interpreters of the producer/consumer pseudo code.

These transcribe the published algorithm steps as directly as possible and
serve as the oracle for the engineered producer/consumer modules: driven with
the same event sequence, both must report identical window variables
(b_min, b_max, p_min, p_max, r_min, r_max) and play-out times.

Shared conventions both sides commit to (the pseudo code leaves them open):

* frame indexes are 0-based; empty buffers start as min=0, max=-1;
* the pre-fetch window [r_min, r_max] is inclusive and never grows wider
  than the receive-buffer capacity n_r_buf;
* fairness removal of an Interest undoes the p_max raise it caused;
* "fills the frame" on the producer means all chunks below the published
  chunk count have been served (chunks requested beyond it are phantoms
  from over-estimation and are discarded at publish time);
* a lag jump whose new r_min lands exactly on the old r_max is handled by
  the in-window discard/extend path; beyond it, the pre-fetcher restarts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass
class RefParams:
    t_f: float = 40.0
    sigma: int = 25
    k_notify: int = 1
    n_theta: int = 25
    n_r_buf: int = 100
    beta: float = 0.5
    gamma: float = 0.5
    omega: float = 0.5
    xi: float = 6.0
    eps_key: int = 5
    eps_delta: int = 1
    l_chunk: int = 3000
    theta: float = 1000.0
    delta_e2e: float = 250.0
    d_j: float = 40.0
    delta_dec: float = 10.0
    delta_rtt: float = 80.0

    def estimate(self, frame: int) -> int:
        return self.eps_key if frame % self.sigma == 0 else self.eps_delta


class RefProducer:
    """Algorithms 1 and 2, verbatim step order."""

    def __init__(self, p: RefParams):
        self.p = p
        self.i = 0
        self.b_min, self.b_max = 0, -1
        self.p_min, self.p_max = 0, -1
        self.k_notify = p.k_notify
        self.content: dict[int, int] = {}        # frame -> published chunk count
        self.pending: dict[int, set[int]] = {}   # frame -> requested chunk set
        self.notified: list[int] = []
        self.served: list[tuple[int, int]] = []
        self.dropped_unfair = 0

    # -- Algorithm 1 -------------------------------------------------------
    def publish(self, size: int) -> None:
        i = self.i
        self.b_max += 1                               # step 3
        eps = max(1, math.ceil(size / self.p.l_chunk))  # step 5
        self.content[i] = eps                         # steps 6-7
        if i % (self.k_notify * self.p.sigma) == 0:   # step 8 (i*t_f mod tau)
            self.notified.append(i)                   # step 9
        if i in self.pending:                         # steps 11-13
            for c in sorted(self.pending[i]):
                if c < eps:
                    self.served.append((i, c))
            # phantoms (chunks >= eps) can never be answered; discard now
            del self.pending[i]
            self._advance_mins()                      # steps 14-15
        self.i += 1

    # -- Algorithm 2 -------------------------------------------------------
    def interest(self, frame: int, chunk: int) -> None:
        stored = False
        added = False
        raised = False
        old_p_max = self.p_max
        if frame in self.content and chunk < self.content[frame]:  # steps 2-4
            self.served.append((frame, chunk))
            self._advance_mins()
        else:                                                      # steps 5-9
            stored = True
            chunks = self.pending.setdefault(frame, set())
            if chunk not in chunks:
                chunks.add(chunk)
                added = True
            if len(chunks) >= self.p.estimate(frame) and frame > self.p_max:
                self.p_max = frame                                 # steps 6-8
                raised = True
        if self.p_max - self.b_max < self.p.omega * self.p.n_theta:  # steps 10-14
            if self.k_notify > 1:
                self.k_notify -= 1
        if self.p_max - self.b_max > self.p.xi * self.p.n_theta and stored:  # 15-17
            if added:
                self.pending[frame].discard(chunk)
                if not self.pending[frame]:
                    del self.pending[frame]
            if raised:
                self.p_max = old_p_max
            self.dropped_unfair += 1

    def _advance_mins(self) -> None:
        self.p_min = min(self.pending) if self.pending else self.p_max + 1
        if self.b_max >= 0:
            self.b_min = max(self.b_min, min(self.p_min, self.b_max))

    def snapshot(self) -> tuple:
        return (self.b_min, self.b_max, self.p_min, self.p_max, self.k_notify)


@dataclass
class _RefFrame:
    requested: int = 0
    received: set[int] = field(default_factory=set)
    eps: int | None = None
    complete: bool = False


class RefConsumer:
    """Algorithms 3, 4 and 5, verbatim step order."""

    def __init__(self, p: RefParams):
        self.p = p
        self.started = False
        self.r_min, self.r_max = 0, -1
        self.r_min_star, self.r_max_star = 0, -1
        self.k = -1
        self.t_notify = 0.0
        self.last_anchor: int | None = None
        self.frames: dict[int, _RefFrame] = {}
        self.tau: dict[int, float] = {}
        self.tau_log: list[tuple[int, float]] = []
        self.requested_log: list[tuple[int, int]] = []
        self.stale = 0
        self.discarded = 0

    # -- Algorithm 3 -------------------------------------------------------
    def notification(self, anchor: int, now: float) -> None:
        if self.last_anchor is not None and anchor < self.last_anchor:
            self.stale += 1
            return
        self.last_anchor = anchor
        self.t_notify = now
        if not self.started:                                    # steps 2-5
            self.r_min = anchor + self.p.n_theta
            self.r_max = self.r_min + self.p.n_r_buf
            self.started = True
            self._bootstrap()
        elif anchor > self.r_min + self.p.n_r_buf:              # steps 8-10
            self.r_min = anchor + self.p.n_theta
            self.r_max = self.r_min + self.p.n_r_buf
        elif anchor > self.r_min + self.p.gamma * self.p.n_r_buf:  # steps 11-13
            self.r_min = anchor + math.floor(self.p.beta * self.p.n_theta)
            self.r_max = self.r_min + self.p.n_r_buf

    # -- Algorithm 4 -------------------------------------------------------
    def _set_tau(self, k: int, value: float) -> None:
        self.tau[k] = value
        self.tau_log.append((k, value))

    def _request(self, frame: int, count: int) -> None:
        st = self.frames.setdefault(frame, _RefFrame())
        st.requested = max(st.requested, count)
        self.requested_log.append((frame, count))

    def _bootstrap(self) -> None:
        # steps 1-9
        for k in range(self.r_min, self.r_max + 1):
            if k == self.r_min:
                self._set_tau(k, self.t_notify + self.p.theta + self.p.delta_e2e
                              - (self.p.d_j + self.p.delta_dec + self.p.delta_rtt))
            else:
                self._set_tau(k, self.tau[k - 1] + self.p.t_f)
            self._request(k, self.p.estimate(k))
        self.k = self.r_max
        self.r_min_star, self.r_max_star = self.r_min, self.r_max

    def tick(self, now: float) -> None:
        # steps 10-25
        if not self.started:
            return
        if self.r_min > self.r_max_star:                        # steps 21-22
            self._bootstrap()
            return
        if self.k == self.r_max:                                # steps 11-14
            if self.r_max - self.r_min < self.p.n_r_buf:        # capacity bound
                self.k += 1
                self.r_max = self.k
                self._set_tau(self.k, self.tau[self.k - 1] + self.p.t_f)
                self._request(self.k, self.p.estimate(self.k))
        elif self.k < self.r_max:                               # steps 15-20
            if self.r_min_star < self.r_min <= self.r_max_star:
                for f in range(self.r_min_star, self.r_min):    # step 19
                    self.frames.pop(f, None)
                for f in range(self.r_max_star + 1, self.r_max + 1):  # step 20
                    self._set_tau(f, self.tau[f - 1] + self.p.t_f)
                    self._request(f, self.p.estimate(f))
                self.k = self.r_max
        self.r_min_star, self.r_max_star = self.r_min, self.r_max

    # -- Algorithm 5 -------------------------------------------------------
    def chunk(self, frame: int, chunk: int, eps: int, now: float) -> None:
        if self.r_min <= frame <= self.r_max:                   # steps 2-3
            st = self.frames.get(frame)
            if st is None or chunk in st.received:
                return
            st.received.add(chunk)
            st.eps = eps                                        # step 4
            if eps > st.requested:                              # steps 5-7
                self._request(frame, eps)
            elif eps < st.requested:                            # steps 8-9
                st.requested = eps
            if not st.complete and len(st.received) == eps:     # steps 11-13
                st.complete = True
                if frame == self.r_min:
                    r = self.r_min
                    while r <= self.r_max:
                        s = self.frames.get(r)
                        if s is None or not s.complete:
                            break
                        r += 1
                    self.r_min = r
        elif self.r_min > frame:                                # steps 15-18
            self.discarded += 1

    def snapshot(self) -> tuple:
        return (self.r_min, self.r_max, self.k, self.started)
