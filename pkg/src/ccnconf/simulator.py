"""Deterministic discrete-event engine and topology.

Star topology per the deployment this models: user entities home to one edge
service router (VSER) each, VSERs interconnect through a single core relay
that forwards point to point without any named-data state (no aggregation,
no caching), so every VSER-to-VSER stream crosses the core once per
destination.  Access uplinks carry the randomly drawn latency (the paper's
container-egress injection); downlinks and core legs are fast constants, so
a producer-to-consumer path pays one random draw each way.

Determinism: one master RNG seeds link draws and per-producer media models in
a fixed order at build time; the event queue breaks time ties by insertion
sequence; nothing else draws randomness at run time.
"""

from __future__ import annotations

import heapq
import itertools
import random
from dataclasses import dataclass, field

from . import scenario as scn
from .consumer import AVSync, ConsumerStream, InterestRequest
from .forwarder import (AGGREGATE, CACHE_EVICT, DROP_UNSOLICITED,
                        FORWARD_INTEREST, NO_ROUTE, SEND_DATA, Forwarder,
                        Interest, data_wire_bytes)
from .media import AudioModel, DataObject, VideoModel
from .names import MediaType
from .params import StreamParams
from .producer import Producer
from .sync import (HOP_AGENT_PROXY, HOP_MANAGER_PROXY, HOP_PROXY_AGENT,
                   HOP_PROXY_MANAGER, Notification, Registration, SyncAgent,
                   SyncManager, SyncProxy)
from .trace import CounterSample, FrameRow, RunResult


class EventQueue:
    """Time-ordered queue with deterministic (time, insertion) ordering."""

    def __init__(self):
        self._heap: list = []
        self._seq = itertools.count()
        self.now = 0.0

    def schedule(self, time: float, fn, *args) -> None:
        if time < self.now:
            raise ValueError(f"cannot schedule into the past ({time} < {self.now})")
        heapq.heappush(self._heap, (time, next(self._seq), fn, args))

    def run(self, until: float) -> None:
        while self._heap:
            time, _, fn, args = self._heap[0]
            if time > until:
                break
            heapq.heappop(self._heap)
            if time < self.now:
                raise AssertionError("event queue went backwards")
            self.now = time
            fn(time, *args)
        self.now = until


@dataclass
class Link:
    link_id: str
    a: str
    b: str
    delay: dict[tuple[str, str], float]
    bandwidth_bps: float
    up: bool = True
    epoch: int = 0
    busy: dict[tuple[str, str], float] = field(default_factory=dict)


KIND_INTEREST = "interest"
KIND_DATA = "data"
KIND_SYNC = "sync"


class Counters:
    """Cumulative byte counters classified for the bandwidth model.

    Per-VSER downlink counts interest ingress on every face plus data ingress
    from local clients; uplink counts data egress on every face plus interest
    egress toward local clients.  These are exactly the flow classes the
    closed-form per-VSER utilization model accounts for.
    """

    def __init__(self, vser_ids: list[str]):
        self.per_vser = {v: {"dl_interest": 0.0, "dl_data_local": 0.0,
                             "ul_data": 0.0, "ul_interest_local": 0.0}
                         for v in vser_ids}
        self.ue_interest_in = 0.0
        self.ue_data_out = 0.0
        self.total_bytes = 0.0
        self.notification_bytes = 0.0

    def count(self, src: str, dst: str, kind: str, size: int) -> None:
        self.total_bytes += size
        if kind == KIND_SYNC:
            self.notification_bytes += size
            return
        dst_vser = self.per_vser.get(dst)
        if dst_vser is not None:
            if kind == KIND_INTEREST:
                dst_vser["dl_interest"] += size
            elif kind == KIND_DATA and src.startswith("ue"):
                dst_vser["dl_data_local"] += size
        src_vser = self.per_vser.get(src)
        if src_vser is not None:
            if kind == KIND_DATA:
                src_vser["ul_data"] += size
            elif kind == KIND_INTEREST and dst.startswith("ue"):
                src_vser["ul_interest_local"] += size
        if kind == KIND_INTEREST and dst.startswith("ue"):
            self.ue_interest_in += size
        elif kind == KIND_DATA and src.startswith("ue"):
            self.ue_data_out += size

    def sample(self, now: float) -> CounterSample:
        return CounterSample(
            time_ms=now,
            per_vser={v: dict(c) for v, c in self.per_vser.items()},
            ue_interest_in=self.ue_interest_in,
            ue_data_out=self.ue_data_out,
            total_bytes=self.total_bytes,
            notification_bytes=self.notification_bytes)


@dataclass(frozen=True)
class _SyncMsg:
    kind: str            # notif | reg
    notification: Notification | None = None
    registration: Registration | None = None
    joined: bool = True
    src_proxy: str = ""
    hop: str = ""
    target_ue: str = ""


class World:
    """Builds the topology from a scenario config and runs it."""

    def __init__(self, cfg: scn.ScenarioConfig):
        violations = scn.validate(cfg)
        if violations:
            raise scn.ValidationError(violations)
        self.cfg = cfg
        self.q = EventQueue()
        self.master = random.Random(cfg.seed)
        self.duration_ms = cfg.duration_s * 1000.0
        self.vser_ids = [f"vser{i}" for i in range(1, cfg.n_vser + 1)]
        self.manager_vser = f"vser{cfg.manager_vser}"
        self.counters = Counters(self.vser_ids)
        self.drop_counts: dict[str, int] = {}
        self.link_trace: list[tuple] = []
        self.forwarder_trace: list[tuple] = []
        self.notif_trace: list[tuple] = []
        self.counter_samples: list[CounterSample] = []
        self.full_trace = cfg.trace_level == "full"

        self.ue_home: dict[str, str] = {}
        for idx, ue in enumerate(cfg.ue_ids(), start=1):
            self.ue_home[ue] = f"vser{cfg.vser_of(idx)}"

        # links: draw latencies in fixed order (ue order, then vser order)
        self.links: dict[str, Link] = {}
        self.link_latencies: dict[str, tuple[float, float]] = {}
        lp = cfg.links
        for ue in cfg.ue_ids():
            vser = self.ue_home[ue]
            up = self.master.uniform(lp.access_up_min_ms, lp.access_up_max_ms)
            down = self.master.uniform(lp.access_down_min_ms, lp.access_down_max_ms)
            link = Link(f"{ue}-access", ue, vser,
                        {(ue, vser): up, (vser, ue): down}, lp.bandwidth_bps)
            self.links[link.link_id] = link
            self.link_latencies[link.link_id] = (up, down)
        for vser in self.vser_ids:
            link = Link(f"{vser}-core", vser, "core",
                        {(vser, "core"): lp.core_ms, ("core", vser): lp.core_ms},
                        lp.bandwidth_bps)
            self.links[link.link_id] = link
            self.link_latencies[link.link_id] = (lp.core_ms, lp.core_ms)

        # media / stream parameters
        self.params = {MediaType.VIDEO: cfg.video, MediaType.AUDIO: cfg.audio}
        self.lifetimes = {m: p.interest_lifetime_ms(lp.rtt_max_ms)
                          for m, p in self.params.items()}

        # sync tier
        self.proxies = {v: SyncProxy(v, {cfg.session}) for v in self.vser_ids}
        self.manager = SyncManager()
        for v in self.vser_ids:
            self.manager.register_proxy(v)

        # forwarders
        cs_per_producer = 2 * (cfg.video.sigma * 2 + cfg.audio.sigma)
        self.vser_fw = {v: Forwarder(v, cs_capacity=cs_per_producer * cfg.participants)
                        for v in self.vser_ids}
        self.vser_fibs_built = False
        self.nodes: dict[str, UENode] = {}
        for idx, ue in enumerate(cfg.ue_ids(), start=1):
            seed_v = self.master.randrange(2 ** 31)
            seed_a = self.master.randrange(2 ** 31)
            self.nodes[ue] = UENode(self, ue, self.ue_home[ue], seed_v, seed_a,
                                    cs_capacity=cs_per_producer)
        self._build_fibs()

        self.joined: set[str] = set()
        self.last_published: dict[tuple[str, str], int] = {}

    # ------------------------------------------------------------------
    def _build_fibs(self) -> None:
        session = self.cfg.session
        for vser in self.vser_ids:
            fw = self.vser_fw[vser]
            for ue, home in self.ue_home.items():
                if home == vser:
                    fw.fib.add((vser, session, ue), ("ue", ue))
            for other in self.vser_ids:
                if other != vser:
                    fw.fib.add((other,), ("vser", other))

    # -- transport -------------------------------------------------------
    def transmit(self, link: Link, src: str, dst: str, kind: str, payload,
                 size: int, deliver) -> None:
        """deliver(time, payload) runs at the far end unless the link fails."""
        now = self.q.now
        if not link.up:
            self._drop(f"link-down:{link.link_id}")
            return
        direction = (src, dst)
        ser = size * 8.0 / link.bandwidth_bps * 1000.0
        start = max(now, link.busy.get(direction, 0.0))
        link.busy[direction] = start + ser
        arrival = start + ser + link.delay[direction]
        self.counters.count(src, dst, kind, size)
        if self.full_trace:
            self.link_trace.append((f"{now:.6f}", link.link_id, src, dst, kind, size))
        epoch = link.epoch
        self.q.schedule(arrival, self._arrive, link, epoch, deliver, payload)

    def _arrive(self, time: float, link: Link, epoch: int, deliver, payload) -> None:
        if link.epoch != epoch:
            self._drop(f"in-flight:{link.link_id}")
            return
        deliver(time, payload)

    def _drop(self, what: str) -> None:
        self.drop_counts[what] = self.drop_counts.get(what, 0) + 1

    def note_forwarder(self, now: float, node: str, action: str, name: str,
                       size: int) -> None:
        if self.full_trace:
            self.forwarder_trace.append((f"{now:.6f}", node, action, name, size))

    # -- core relay ------------------------------------------------------
    def send_vser_to_vser(self, src_vser: str, dst_vser: str, kind: str,
                          payload, size: int, deliver) -> None:
        leg1 = self.links[f"{src_vser}-core"]

        def at_core(time: float, payload):
            leg2 = self.links[f"{dst_vser}-core"]
            self.transmit(leg2, "core", dst_vser, kind, payload, size, deliver)

        self.transmit(leg1, src_vser, "core", kind, payload, size, at_core)

    # -- VSER data plane --------------------------------------------------
    def vser_on_interest(self, time: float, vser: str, interest: Interest,
                         ingress) -> None:
        fw = self.vser_fw[vser]
        for act in fw.on_interest(interest, ingress, time):
            self.note_forwarder(time, vser, act.kind, interest.name.uri,
                                interest.wire_bytes)
            if act.kind == FORWARD_INTEREST:
                self._vser_send(vser, act.face, KIND_INTEREST, interest,
                                interest.wire_bytes)
            elif act.kind == SEND_DATA:
                self._vser_send(vser, act.face, KIND_DATA, act.data,
                                data_wire_bytes(act.data))

    def vser_on_data(self, time: float, vser: str, data: DataObject,
                     ingress) -> None:
        fw = self.vser_fw[vser]
        for act in fw.on_data(data, ingress, time):
            if act.kind == SEND_DATA:
                self.note_forwarder(time, vser, act.kind, data.name.uri,
                                    data_wire_bytes(data))
                self._vser_send(vser, act.face, KIND_DATA, act.data,
                                data_wire_bytes(act.data))

    def _vser_send(self, vser: str, face, kind: str, payload, size: int) -> None:
        face_type, target = face
        if face_type == "ue":
            link = self.links[f"{target}-access"]
            node = self.nodes[target]
            if kind == KIND_INTEREST:
                deliver = lambda t, p: node.on_net_interest(t, p)
            else:
                deliver = lambda t, p: node.on_net_data(t, p)
            self.transmit(link, vser, target, kind, payload, size, deliver)
        else:
            dst = target
            if kind == KIND_INTEREST:
                deliver = lambda t, p: self.vser_on_interest(t, dst, p, ("vser", vser))
            else:
                deliver = lambda t, p: self.vser_on_data(t, dst, p, ("vser", vser))
            self.send_vser_to_vser(vser, dst, kind, payload, size, deliver)

    # -- sync plane --------------------------------------------------------
    def agent_to_proxy(self, ue: str, msg: _SyncMsg) -> None:
        vser = self.ue_home[ue]
        link = self.links[f"{ue}-access"]
        size = self.cfg.links.notification_bytes
        self.transmit(link, ue, vser, KIND_SYNC, msg, size,
                      lambda t, m: self.proxy_receive(t, vser, m))

    def proxy_receive(self, time: float, vser: str, msg: _SyncMsg) -> None:
        proxy = self.proxies[vser]
        if msg.kind == "reg":
            actions = (proxy.register_agent(msg.registration) if msg.joined
                       else proxy.deregister_agent(msg.registration))
            for kind, payload in actions:
                if kind in ("register-with-manager", "deregister-with-manager"):
                    self._to_manager(vser, _SyncMsg("reg", registration=payload,
                                                    joined=msg.joined,
                                                    src_proxy=vser))
            return
        n = msg.notification
        self._note_hop(time, HOP_AGENT_PROXY, n, self.cfg.links.notification_bytes)
        for kind, payload in proxy.on_agent_notify(n):
            if kind == "notify-agent":
                ue, notif = payload
                self._proxy_to_agent(vser, ue, notif)
            elif kind == "forward-to-manager":
                self._to_manager(vser, _SyncMsg("notif", notification=payload,
                                                src_proxy=vser, hop=HOP_PROXY_MANAGER))

    def _to_manager(self, src_vser: str, msg: _SyncMsg) -> None:
        if src_vser == self.manager_vser:
            self.manager_receive(self.q.now, msg, wire=False)
        else:
            size = self.cfg.links.notification_bytes
            self.send_vser_to_vser(src_vser, self.manager_vser, KIND_SYNC, msg,
                                   size, lambda t, m: self.manager_receive(t, m))

    def manager_receive(self, time: float, msg: _SyncMsg, wire: bool = True) -> None:
        if msg.kind == "reg":
            self.manager.on_membership(msg.src_proxy, msg.registration, msg.joined)
            return
        n = msg.notification
        self._note_hop(time, HOP_PROXY_MANAGER, n,
                       self.cfg.links.notification_bytes if wire else 0)
        for proxy_id, notif in self.manager.relay(n, msg.src_proxy):
            out = _SyncMsg("notif", notification=notif, src_proxy="manager",
                           hop=HOP_MANAGER_PROXY)
            if proxy_id == self.manager_vser:
                self.proxy_receive_from_manager(self.q.now, proxy_id, out, wire=False)
            else:
                size = self.cfg.links.notification_bytes
                dst = proxy_id
                self.send_vser_to_vser(
                    self.manager_vser, dst, KIND_SYNC, out, size,
                    lambda t, m, d=dst: self.proxy_receive_from_manager(t, d, m))

    def proxy_receive_from_manager(self, time: float, vser: str, msg: _SyncMsg,
                                   wire: bool = True) -> None:
        n = msg.notification
        self._note_hop(time, HOP_MANAGER_PROXY, n,
                       self.cfg.links.notification_bytes if wire else 0)
        for kind, payload in self.proxies[vser].on_manager_notify(n):
            if kind == "notify-agent":
                ue, notif = payload
                self._proxy_to_agent(vser, ue, notif)

    def _proxy_to_agent(self, vser: str, ue: str, n: Notification) -> None:
        link = self.links[f"{ue}-access"]
        size = self.cfg.links.notification_bytes
        node = self.nodes[ue]

        def deliver(t, notif):
            self._note_hop(t, HOP_PROXY_AGENT, notif, size)
            node.on_notification(t, notif)

        self.transmit(link, vser, ue, KIND_SYNC, n, size, deliver)

    def _note_hop(self, time: float, hop: str, n: Notification, size: int) -> None:
        fp = n.fingerprint
        self.notif_trace.append((f"{time:.6f}", hop, fp.conf_session_id,
                                 fp.ue_id, fp.media_type.value, n.seq,
                                 fp.anchor, size))

    # -- script ------------------------------------------------------------
    def apply_event(self, time: float, ev: scn.ScriptEvent) -> None:
        node = self.nodes.get(ev.target)
        if ev.kind == "join":
            if ev.target in self.joined:
                return
            self.joined.add(ev.target)
            node.join(time)
        elif ev.kind == "leave":
            if ev.target not in self.joined:
                self._drop("leave-noop")
                return
            self.joined.discard(ev.target)
            node.leave(time)
        elif ev.kind == "link_down":
            link = self.links[f"{ev.target}-access"]
            link.up = False
            link.epoch += 1
        elif ev.kind == "link_up":
            self.links[f"{ev.target}-access"].up = True

    # -- periodic upkeep ----------------------------------------------------
    def _sample(self, time: float) -> None:
        self.counter_samples.append(self.counters.sample(time))
        if time + 1000.0 <= self.duration_ms:
            self.q.schedule(time + 1000.0, self._sample)

    def _sweep(self, time: float) -> None:
        for vser in self.vser_ids:
            self.vser_fw[vser].sweep(time)
        for ue in sorted(self.nodes):
            node = self.nodes[ue]
            node.forwarder.sweep(time)
            for producer in node.producers.values():
                producer.prune_expired(time)
        if time + 1000.0 <= self.duration_ms:
            self.q.schedule(time + 1000.0, self._sweep)

    # -- run ---------------------------------------------------------------
    def run(self) -> RunResult:
        for ev in self.cfg.script:
            self.q.schedule(ev.time_s * 1000.0, self.apply_event, ev)
        self.q.schedule(1000.0, self._sample)
        self.q.schedule(1000.0, self._sweep)
        self.q.run(self.duration_ms)
        end = self.duration_ms
        for ue in sorted(self.nodes):
            self.nodes[ue].finalize(end)
        self.counter_samples.append(self.counters.sample(end))
        return self._collect(end)

    def _collect(self, end: float) -> RunResult:
        result = RunResult(
            scenario_name=self.cfg.name, seed=self.cfg.seed, duration_ms=end,
            config_ini=scn.dump_ini(self.cfg), ue_home=dict(self.ue_home),
            vser_ids=list(self.vser_ids),
            session_members=sorted(self.joined))
        result.counter_samples = self.counter_samples
        result.notifications = self.notif_trace
        result.forwarder_trace = self.forwarder_trace
        result.link_trace = self.link_trace
        result.drop_counts = dict(sorted(self.drop_counts.items()))
        result.link_latencies = dict(self.link_latencies)
        result.last_published = dict(self.last_published)
        for ue in sorted(self.nodes):
            self.nodes[ue].collect(result)
        return result


class UENode:
    """User entity: producer apps, consumer streams and a local forwarder."""

    FACE_NET = "net"
    FACE_CONSUMER = "consumer"

    def __init__(self, world: World, ue_id: str, home_vser: str,
                 video_seed: int, audio_seed: int, cs_capacity: int):
        self.world = world
        self.ue_id = ue_id
        self.home_vser = home_vser
        self.forwarder = Forwarder(ue_id, cs_capacity=cs_capacity)
        self.agent = SyncAgent(ue_id)
        self.left = False
        self.joined_at: float | None = None
        cfg = world.cfg
        self.producers: dict[MediaType, Producer] = {}
        self.models = {}
        if cfg.produces(ue_id):
            for media, seed in ((MediaType.VIDEO, video_seed),
                                (MediaType.AUDIO, audio_seed)):
                p = world.params[media]
                self.producers[media] = Producer(home_vser, cfg.session, ue_id, p)
                face = f"producer:{media.value}"
                self.forwarder.fib.add((home_vser, cfg.session, ue_id,
                                        media.value), face)
            m = cfg.media
            self.models[MediaType.VIDEO] = VideoModel(
                sigma=cfg.video.sigma, rho_f=cfg.video.rho_f,
                key_size_range=(m.video_key_min, m.video_key_max),
                delta_size_range=(m.video_delta_min, m.video_delta_max),
                oversize_prob=m.oversize_prob,
                oversize_range=(m.oversize_min, m.oversize_max),
                seed=video_seed)
            self.models[MediaType.AUDIO] = AudioModel(
                bitrate=m.audio_bitrate,
                frame_interval_ms=m.audio_frame_interval_ms)
        self.forwarder.fib.add((), self.FACE_NET)  # default route upstream
        self.streams: dict[tuple[str, str], ConsumerStream] = {}
        self.avsync: dict[str, AVSync] = {}
        self.producer_events: list[tuple] = []

    # -- lifecycle -------------------------------------------------------
    def join(self, now: float) -> None:
        self.joined_at = now
        self.left = False
        reg = self.agent.register(self.world.cfg.session)
        self.world.agent_to_proxy(self.ue_id, _SyncMsg("reg", registration=reg,
                                                       joined=True))
        for media in (MediaType.VIDEO, MediaType.AUDIO):
            if media in self.producers:
                self.world.q.schedule(now, self._produce_frame, media)

    def leave(self, now: float) -> None:
        self.left = True
        reg = Registration(self.world.cfg.session, self.ue_id)
        self.world.agent_to_proxy(self.ue_id, _SyncMsg("reg", registration=reg,
                                                       joined=False))

    # -- producer side -----------------------------------------------------
    def _produce_frame(self, now: float, media: MediaType) -> None:
        if self.left:
            return
        producer = self.producers[media]
        frame = self.models[media].next_frame()
        sends, notification = producer.publish_frame(frame, now)
        self.world.last_published[(self.ue_id, media.value)] = frame.index
        for data in sends:
            self._inject_data(now, data, f"producer:{media.value}")
        if notification is not None:
            self.world.agent_to_proxy(self.ue_id,
                                      _SyncMsg("notif", notification=notification,
                                               hop=HOP_AGENT_PROXY))
        self.world.q.schedule(now + producer.params.t_f, self._produce_frame, media)

    def _inject_data(self, now: float, data: DataObject, ingress: str) -> None:
        for act in self.forwarder.on_data(data, ingress, now):
            if act.kind == SEND_DATA:
                if act.face == self.FACE_NET:
                    self._send_up(KIND_DATA, act.data, data_wire_bytes(act.data))
                elif act.face == self.FACE_CONSUMER:
                    self._deliver_to_consumer(now, act.data)

    def on_net_interest(self, now: float, interest: Interest) -> None:
        for act in self.forwarder.on_interest(interest, self.FACE_NET, now):
            self.world.note_forwarder(now, self.ue_id, act.kind,
                                      interest.name.uri, interest.wire_bytes)
            if act.kind == FORWARD_INTEREST and act.face.startswith("producer:"):
                media = MediaType(act.face.split(":", 1)[1])
                producer = self.producers.get(media)
                if producer is None:
                    continue
                for data in producer.process_interest(interest, now):
                    self._inject_data(now, data, act.face)
            elif act.kind == SEND_DATA:
                # own cache answered (repair served from local content store)
                if act.face == self.FACE_NET:
                    self._send_up(KIND_DATA, act.data, data_wire_bytes(act.data))

    def on_net_data(self, now: float, data: DataObject) -> None:
        for act in self.forwarder.on_data(data, self.FACE_NET, now):
            if act.kind == SEND_DATA and act.face == self.FACE_CONSUMER:
                self._deliver_to_consumer(now, act.data)

    def _send_up(self, kind: str, payload, size: int) -> None:
        link = self.world.links[f"{self.ue_id}-access"]
        vser = self.home_vser
        if kind == KIND_DATA:
            deliver = lambda t, p: self.world.vser_on_data(t, vser, p,
                                                           ("ue", self.ue_id))
        else:
            deliver = lambda t, p: self.world.vser_on_interest(t, vser, p,
                                                               ("ue", self.ue_id))
        self.world.transmit(link, self.ue_id, vser, kind, payload, size, deliver)

    # -- consumer side -----------------------------------------------------
    def on_notification(self, now: float, n: Notification) -> None:
        if self.left or not self.world.cfg.consumes(self.ue_id):
            return
        if n.fingerprint.ue_id == self.ue_id:
            return
        if not self.agent.accept(n):
            return
        media = n.fingerprint.media_type
        key = (n.fingerprint.ue_id, media.value)
        stream = self.streams.get(key)
        if stream is None:
            params = self.world.params[media]
            producer_home = self.world.ue_home[n.fingerprint.ue_id]
            stream = ConsumerStream(producer_home, self.world.cfg.session,
                                    n.fingerprint.ue_id, params)
            self.streams[key] = stream
            self.avsync.setdefault(n.fingerprint.ue_id, AVSync())
        was_started = stream.started
        jumps_before = stream.jumps
        requests = stream.on_notification(n, now)
        if stream.jumps != jumps_before:
            self.avsync[n.fingerprint.ue_id].reset()
        self._express(now, stream, requests)
        if not was_started and stream.started:
            self.world.q.schedule(now + stream.params.t_f, self._stream_tick, key)

    def _stream_tick(self, now: float, key: tuple[str, str]) -> None:
        if self.left:
            return
        stream = self.streams[key]
        requests = stream.tick(now)
        self._express(now, stream, requests)
        self._release(now, stream)
        self.world.q.schedule(now + stream.params.t_f, self._stream_tick, key)

    def _express(self, now: float, stream: ConsumerStream,
                 requests: list[InterestRequest]) -> None:
        lifetime = self.world.lifetimes[stream.params.media]
        for req in requests:
            for chunk in req.chunks:
                name = stream.name_for(req.frame, chunk)
                if req.retransmit:
                    # flush our own pending entry so the Interest travels
                    # again instead of aggregating against itself
                    self.forwarder.cancel_pending(name.uri, self.FACE_CONSUMER)
                interest = Interest(name, lifetime, now, self.ue_id)
                self._express_one(now, stream, interest)

    def _express_one(self, now: float, stream: ConsumerStream,
                     interest: Interest) -> None:
        for act in self.forwarder.on_interest(interest, self.FACE_CONSUMER, now):
            self.world.note_forwarder(now, self.ue_id, act.kind,
                                      interest.name.uri, interest.wire_bytes)
            if act.kind == FORWARD_INTEREST and act.face == self.FACE_NET:
                self._send_up(KIND_INTEREST, interest, interest.wire_bytes)
            elif act.kind == SEND_DATA:
                self._deliver_to_consumer(now, act.data)

    def _deliver_to_consumer(self, now: float, data: DataObject) -> None:
        if self.left:
            return
        key = (data.name.ue_id, data.name.media_type.value)
        stream = self.streams.get(key)
        if stream is None:
            return
        requests, cancels = stream.on_content_object(data, now)
        for cancel in cancels:
            for chunk in cancel.chunks:
                name = stream.name_for(cancel.frame, chunk)
                self.forwarder.cancel_pending(name.uri, self.FACE_CONSUMER)
        self._express(now, stream, requests)

    def _release(self, now: float, stream: ConsumerStream) -> None:
        av = self.avsync[stream.producer_ue]
        while True:
            info = stream.release_next(now)
            if info is None:
                break
            ts = info.media_timestamp if info.media_timestamp is not None else 0.0
            if av.may_release(stream.params.media, ts):
                stream.mark_released(info, now)
                av.released(stream.params.media, ts)
            else:
                break

    # -- collection --------------------------------------------------------
    def finalize(self, now: float) -> None:
        for stream in self.streams.values():
            stream.finalize(now)

    def collect(self, result: RunResult) -> None:
        for media, producer in sorted(self.producers.items(),
                                      key=lambda kv: kv[0].value):
            for ev in producer.events:
                result.producer_events.append(
                    (f"{ev.time:.6f}", self.ue_id, media.value, ev.kind,
                     ev.frame, ev.chunk, ev.size))
        judge_horizon = result.duration_ms - 500.0
        for (producer_ue, media), stream in sorted(self.streams.items()):
            last_pub = result.last_published.get((producer_ue, media), -1)
            for ev in stream.events:
                result.consumer_events.append(
                    (f"{ev.time:.6f}", self.ue_id, producer_ue, media, ev.kind,
                     ev.frame, f"{ev.latency_ms:.6f}"))
            for idx in sorted(stream.frames):
                info = stream.frames[idx]
                if info.tau is None:
                    continue
                if info.tau > judge_horizon or idx > last_pub:
                    # outcome not decidable inside the run
                    status = "unjudged"
                elif info.complete and not info.late:
                    status = "usable"
                elif info.complete:
                    status = "late"
                else:
                    status = "lost"
                result.frames.append(FrameRow(
                    consumer=self.ue_id, producer=producer_ue, media=media,
                    frame=idx, gen_ms=info.generation_time,
                    first_chunk_ms=info.first_chunk_time,
                    complete_ms=info.complete_time, tau_ms=info.tau,
                    eps=info.eps, requested=info.requested,
                    repaired=info.repaired, headroom_ms=info.headroom_ms,
                    released_ms=info.released_at, status=status))


def run_scenario(cfg: scn.ScenarioConfig) -> RunResult:
    """Validate, build and run; attaches the metrics summary to the result."""
    from . import metrics
    world = World(cfg)
    result = world.run()
    result.summary = metrics.build_summary(cfg, result)
    return result
