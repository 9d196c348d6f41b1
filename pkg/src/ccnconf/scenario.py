"""Scenario configuration: dataclasses, INI file round-trip, presets.

A scenario file is a flat INI document with sections [scenario], [topology],
[links], [media], [producer], [consumer] and [script].  Producer/consumer
keys use the conventional parameter names (rho_f, sigma, k_notify, theta_ms,
omega, xi, beta, gamma, n_i_buf, n_r_buf, l_chunk, eps_ir_key, ...); keys
prefixed ``audio_`` override the audio stream class.  The [script] section
holds one event per line: ``<time_s> join <ue>``, ``<time_s> leave <ue>``,
``<time_s> link_down <ue>`` or ``<time_s> link_up <ue>``.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields, replace

from .names import MediaType
from .params import StreamParams, default_audio_params, default_video_params


class ValidationError(ValueError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


@dataclass(frozen=True)
class LinkParams:
    access_up_min_ms: float = 30.0
    access_up_max_ms: float = 50.0
    access_down_min_ms: float = 1.0
    access_down_max_ms: float = 1.0
    core_ms: float = 1.0
    bandwidth_bps: float = 1e9
    notification_bytes: int = 120

    @property
    def rtt_max_ms(self) -> float:
        return 2 * (self.access_up_max_ms + self.access_down_max_ms
                    + 2 * self.core_ms)


@dataclass(frozen=True)
class MediaModelParams:
    video_key_min: int = 9000
    video_key_max: int = 15000
    video_delta_min: int = 600
    video_delta_max: int = 3000
    oversize_prob: float = 0.1
    oversize_min: int = 3001
    oversize_max: int = 6000
    audio_bitrate: int = 30000
    audio_frame_interval_ms: float = 20.0


@dataclass(frozen=True)
class ScriptEvent:
    time_s: float
    kind: str          # join | leave | link_down | link_up
    target: str        # ue id

    def as_line(self) -> str:
        return f"{self.time_s:g} {self.kind} {self.target}"


@dataclass
class ScenarioConfig:
    name: str = "custom"
    seed: int = 1
    duration_s: float = 12.0
    participants: int = 3
    n_vser: int = 3
    manager_vser: int = 1
    roles: str = "all"          # all | fanin (ue1 consumes only, others produce only)
    session: str = "conf1"
    warmup_s: float = 5.0       # steady-state window start for rate metrics
    drain_s: float = 1.0        # excluded tail
    trace_level: str = "events"  # events | full
    links: LinkParams = field(default_factory=LinkParams)
    media: MediaModelParams = field(default_factory=MediaModelParams)
    video: StreamParams = field(default_factory=default_video_params)
    audio: StreamParams = field(default_factory=default_audio_params)
    script: list[ScriptEvent] = field(default_factory=list)

    def ue_ids(self) -> list[str]:
        return [f"ue{i}" for i in range(1, self.participants + 1)]

    def vser_of(self, ue_index: int) -> int:
        """Round-robin homing; ue_index is 1-based."""
        return (ue_index - 1) % self.n_vser + 1

    def produces(self, ue: str) -> bool:
        return not (self.roles == "fanin" and ue == "ue1")

    def consumes(self, ue: str) -> bool:
        return not (self.roles == "fanin" and ue != "ue1")


# ----------------------------------------------------------------------
# presets

def baseline(participants: int, seed: int = 1) -> ScenarioConfig:
    cfg = ScenarioConfig(name=f"baseline-{participants}p", seed=seed,
                         participants=participants)
    cfg.script = [ScriptEvent(0.0, "join", ue) for ue in cfg.ue_ids()]
    return cfg


def fanin(participants: int, seed: int = 1) -> ScenarioConfig:
    cfg = ScenarioConfig(name=f"fanin-{participants}p", seed=seed,
                         participants=participants, roles="fanin",
                         duration_s=10.0)
    cfg.script = [ScriptEvent(0.0, "join", ue) for ue in cfg.ue_ids()]
    return cfg


def failure_recovery(seed: int = 1) -> ScenarioConfig:
    cfg = ScenarioConfig(name="failure-recovery", seed=seed, participants=2,
                         duration_s=10.0, trace_level="events")
    cfg.script = [
        ScriptEvent(0.0, "join", "ue1"),
        ScriptEvent(0.0, "join", "ue2"),
        ScriptEvent(3.0, "link_down", "ue2"),
        ScriptEvent(6.0, "link_up", "ue2"),
    ]
    return cfg


def join_stagger(participants: int, seed: int = 1,
                 interval_s: float = 2.0) -> ScenarioConfig:
    cfg = ScenarioConfig(name=f"join-stagger-{participants}p", seed=seed,
                         participants=participants,
                         duration_s=interval_s * participants + 10.0)
    cfg.script = [ScriptEvent(interval_s * i, "join", ue)
                  for i, ue in enumerate(cfg.ue_ids())]
    return cfg


PRESET_BUILDERS = {
    "baseline": baseline,
    "fanin": fanin,
    "join-stagger": join_stagger,
}


def preset(name: str, seed: int = 1) -> ScenarioConfig:
    """Resolve names like ``baseline-15p`` or ``failure-recovery``."""
    if name == "failure-recovery":
        return failure_recovery(seed)
    for prefix, builder in PRESET_BUILDERS.items():
        if name.startswith(prefix + "-") and name.endswith("p"):
            count = name[len(prefix) + 1:-1]
            if count.isdigit():
                return builder(int(count), seed)
    raise KeyError(name)


def preset_names() -> list[str]:
    names = [f"baseline-{n}p" for n in (3, 6, 9, 12, 15)]
    names += [f"fanin-{n}p" for n in (19, 28, 37, 46)]
    names += ["failure-recovery", "join-stagger-6p"]
    return names


# ----------------------------------------------------------------------
# INI round-trip

_SCALAR_SECTIONS = {
    "scenario": ("name", "seed", "duration_s", "participants", "n_vser",
                 "manager_vser", "roles", "session", "warmup_s", "drain_s",
                 "trace_level"),
}

_STREAM_KEYS = ("rho_f", "sigma", "k_notify", "l_chunk", "n_i_buf", "n_r_buf",
                "theta_ms", "omega", "xi", "beta", "gamma", "eps_ir_key",
                "eps_ir_delta", "de_jitter_ms", "delta_enc_ms",
                "delta_dec_ms", "delta_e2e_ms", "delta_rtt_ms")
_PRODUCER_KEYS = ("rho_f", "sigma", "k_notify", "l_chunk", "n_i_buf",
                  "theta_ms", "omega", "xi")
_CONSUMER_KEYS = tuple(k for k in _STREAM_KEYS if k not in _PRODUCER_KEYS)


def _coerce(current, text: str):
    if isinstance(current, bool):
        return text.lower() in ("1", "true", "yes")
    if isinstance(current, int):
        return int(text)
    if isinstance(current, float):
        return float(text)
    return text


def dump_ini(cfg: ScenarioConfig) -> str:
    cp = configparser.ConfigParser()
    cp["scenario"] = {k: str(getattr(cfg, k)) for k in _SCALAR_SECTIONS["scenario"]}
    cp["topology"] = {"participants": str(cfg.participants),
                      "n_vser": str(cfg.n_vser),
                      "manager_vser": str(cfg.manager_vser),
                      "roles": cfg.roles}
    cp["links"] = {f.name: str(getattr(cfg.links, f.name))
                   for f in fields(cfg.links)}
    cp["media"] = {f.name: str(getattr(cfg.media, f.name))
                   for f in fields(cfg.media)}
    producer = {}
    consumer = {}
    for key in _STREAM_KEYS:
        target = producer if key in _PRODUCER_KEYS else consumer
        target[key] = str(getattr(cfg.video, key))
        target[f"audio_{key}"] = str(getattr(cfg.audio, key))
    cp["producer"] = producer
    cp["consumer"] = consumer
    cp["script"] = {"events": "\n" + "\n".join(e.as_line() for e in cfg.script)}
    out = io.StringIO()
    cp.write(out)
    return out.getvalue()


def parse_ini(text: str) -> ScenarioConfig:
    cp = configparser.ConfigParser()
    cp.read_string(text)
    cfg = ScenarioConfig()
    violations: list[str] = []

    def apply_scalars(section: str, names: tuple[str, ...]):
        if section not in cp:
            return
        for key, value in cp[section].items():
            if key not in names:
                violations.append(f"[{section}] unknown key {key!r}")
                continue
            try:
                setattr(cfg, key, _coerce(getattr(cfg, key), value))
            except ValueError as exc:
                violations.append(f"[{section}] {key}: {exc}")

    apply_scalars("scenario", _SCALAR_SECTIONS["scenario"])
    apply_scalars("topology", ("participants", "n_vser", "manager_vser", "roles"))

    for section, obj_name in (("links", "links"), ("media", "media")):
        if section in cp:
            obj = getattr(cfg, obj_name)
            updates = {}
            valid = {f.name for f in fields(obj)}
            for key, value in cp[section].items():
                if key not in valid:
                    violations.append(f"[{section}] unknown key {key!r}")
                    continue
                try:
                    updates[key] = _coerce(getattr(obj, key), value)
                except ValueError as exc:
                    violations.append(f"[{section}] {key}: {exc}")
            setattr(cfg, obj_name, replace(obj, **updates))

    video_updates: dict = {}
    audio_updates: dict = {}
    for section, allowed in (("producer", _PRODUCER_KEYS), ("consumer", _CONSUMER_KEYS)):
        if section not in cp:
            continue
        for key, value in cp[section].items():
            base = key[6:] if key.startswith("audio_") else key
            target = audio_updates if key.startswith("audio_") else video_updates
            if base not in allowed:
                violations.append(f"[{section}] unknown key {key!r}")
                continue
            try:
                target[base] = _coerce(getattr(cfg.video, base), value)
            except ValueError as exc:
                violations.append(f"[{section}] {key}: {exc}")
    # apply field by field so one bad value does not mask the others
    for key, value in video_updates.items():
        try:
            cfg.video = replace(cfg.video, **{key: value})
        except ValueError as exc:
            violations.append(f"[producer/consumer] {key}: {exc}")
    for key, value in audio_updates.items():
        try:
            cfg.audio = replace(cfg.audio, **{key: value})
        except ValueError as exc:
            violations.append(f"[producer/consumer] audio_{key}: {exc}")

    if "script" in cp and cp["script"].get("events"):
        for line in cp["script"]["events"].strip().splitlines():
            parts = line.split()
            if len(parts) != 3:
                violations.append(f"[script] malformed event line {line!r}")
                continue
            try:
                cfg.script.append(ScriptEvent(float(parts[0]), parts[1], parts[2]))
            except ValueError as exc:
                violations.append(f"[script] {line!r}: {exc}")
    if violations:
        raise ValidationError(violations)
    return cfg


def load(path: str) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_ini(fh.read())


def apply_overrides(cfg: ScenarioConfig, overrides: list[str]) -> ScenarioConfig:
    """Apply ``section.key=value`` pairs on top of a parsed config."""
    text = dump_ini(cfg)
    cp = configparser.ConfigParser()
    cp.read_string(text)
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ValidationError([f"override must be section.key=value: {item!r}"])
        key_path, value = item.split("=", 1)
        section, key = key_path.split(".", 1)
        if section not in cp or key not in cp[section]:
            raise ValidationError([f"unknown override key {key_path!r}"])
        cp[section][key] = value
    out = io.StringIO()
    cp.write(out)
    return parse_ini(out.getvalue())


def validate(cfg: ScenarioConfig) -> list[str]:
    """Collect every constraint violation (empty list means valid)."""
    v: list[str] = []
    for label, p in (("video", cfg.video), ("audio", cfg.audio)):
        if not 0 < p.omega < 1:
            v.append(f"{label}: omega must be in (0,1)")
        if p.xi <= 1:
            v.append(f"{label}: xi must be > 1")
        if not 0 < p.beta < 1:
            v.append(f"{label}: beta must be in (0,1)")
        if not 0 < p.gamma < 1:
            v.append(f"{label}: gamma must be in (0,1)")
        if p.xi * p.n_theta <= p.n_theta + p.n_r_buf:
            v.append(f"{label}: fairness window xi*n_theta = {p.xi * p.n_theta:g} "
                     f"does not cover the bootstrap window n_theta + n_r_buf = "
                     f"{p.n_theta + p.n_r_buf}; consumers would self-throttle")
        # chunked media can need a batch-repair round trip; single-object
        # media only pay the one-way transfer
        repair_factor = 1.5 if p.media is MediaType.VIDEO else 0.5
        feasibility = (p.delta_rtt_ms * repair_factor + p.de_jitter_ms
                       + p.delta_enc_ms + p.delta_dec_ms)
        if feasibility > p.delta_e2e_ms:
            v.append(f"{label}: transfer latency bound {feasibility:g} ms "
                     f"exceeds the end-to-end budget {p.delta_e2e_ms:g} ms")
    if cfg.participants < 1:
        v.append("participants must be >= 1")
    if cfg.n_vser < 1:
        v.append("n_vser must be >= 1")
    if not 1 <= cfg.manager_vser <= cfg.n_vser:
        v.append(f"manager_vser {cfg.manager_vser} is not a known VSER")
    if cfg.roles not in ("all", "fanin"):
        v.append(f"unknown roles {cfg.roles!r}")
    if cfg.links.access_up_min_ms > cfg.links.access_up_max_ms:
        v.append("links: access_up_min_ms > access_up_max_ms")
    if cfg.links.bandwidth_bps <= 0:
        v.append("links: bandwidth must be positive")
    if cfg.duration_s <= 0:
        v.append("duration_s must be positive")
    known = set(cfg.ue_ids())
    last_t = 0.0
    for ev in cfg.script:
        if ev.kind not in ("join", "leave", "link_down", "link_up"):
            v.append(f"script: unknown event kind {ev.kind!r}")
        if ev.target not in known:
            v.append(f"script: unknown ue {ev.target!r}")
        if ev.time_s < last_t:
            v.append("script: event times must be non-decreasing")
        last_t = max(last_t, ev.time_s)
        if ev.time_s > cfg.duration_s:
            v.append(f"script: event at {ev.time_s:g}s is beyond duration")
    if cfg.trace_level not in ("events", "full"):
        v.append(f"unknown trace_level {cfg.trace_level!r}")
    return v
