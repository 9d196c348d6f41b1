"""Run artifacts: trace tables, CSV export and the determinism digest.

Every table is an in-memory list of plain tuples with a fixed column layout;
export writes one CSV per table plus ``summary.json``.  The digest hashes the
canonical CSV bytes of every emitted table so that identical (config, seed)
pairs can be compared byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from dataclasses import dataclass, field


def fmt_ms(value: float | None) -> str:
    return "" if value is None else f"{value:.6f}"


TABLE_COLUMNS = {
    "frames": ("consumer", "producer", "media", "frame", "gen_ms",
               "first_chunk_ms", "complete_ms", "tau_ms", "eps", "requested",
               "repaired", "headroom_ms", "released_ms", "status"),
    "consumer_events": ("time_ms", "consumer", "producer", "media", "event",
                        "frame", "latency_ms"),
    "producer_events": ("time_ms", "producer", "media", "event", "frame",
                        "chunk", "bytes"),
    "notifications": ("time_ms", "hop", "session", "producer", "media", "seq",
                      "anchor", "bytes"),
    "forwarder": ("time_ms", "node", "action", "name", "bytes"),
    "links": ("time_ms", "link", "src", "dst", "kind", "bytes"),
}


@dataclass
class FrameRow:
    consumer: str
    producer: str
    media: str
    frame: int
    gen_ms: float | None
    first_chunk_ms: float | None
    complete_ms: float | None
    tau_ms: float | None
    eps: int | None
    requested: int
    repaired: bool
    headroom_ms: float | None
    released_ms: float | None
    status: str  # usable | late | lost | unjudged

    def as_tuple(self) -> tuple:
        return (self.consumer, self.producer, self.media, self.frame,
                fmt_ms(self.gen_ms), fmt_ms(self.first_chunk_ms),
                fmt_ms(self.complete_ms), fmt_ms(self.tau_ms),
                "" if self.eps is None else self.eps, self.requested,
                int(self.repaired), fmt_ms(self.headroom_ms),
                fmt_ms(self.released_ms), self.status)


@dataclass
class CounterSample:
    """Cumulative byte counters snapshotted at a sim time."""

    time_ms: float
    per_vser: dict[str, dict[str, float]]
    ue_interest_in: float       # interest bytes delivered to UEs (all)
    ue_data_out: float          # data bytes sent by UEs (all)
    total_bytes: float
    notification_bytes: float


@dataclass
class RunResult:
    scenario_name: str
    seed: int
    duration_ms: float
    config_ini: str
    ue_home: dict[str, str]                      # ue -> vser id
    vser_ids: list[str]
    session_members: list[str]
    frames: list[FrameRow] = field(default_factory=list)
    consumer_events: list[tuple] = field(default_factory=list)
    producer_events: list[tuple] = field(default_factory=list)
    notifications: list[tuple] = field(default_factory=list)
    forwarder_trace: list[tuple] = field(default_factory=list)
    link_trace: list[tuple] = field(default_factory=list)
    counter_samples: list[CounterSample] = field(default_factory=list)
    last_published: dict[tuple[str, str], int] = field(default_factory=dict)
    drop_counts: dict[str, int] = field(default_factory=dict)
    link_latencies: dict[str, tuple[float, float]] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def tables(self) -> dict[str, list[tuple]]:
        out = {
            "frames": [r.as_tuple() for r in self.frames],
            "consumer_events": self.consumer_events,
            "producer_events": self.producer_events,
            "notifications": self.notifications,
        }
        if self.forwarder_trace:
            out["forwarder"] = self.forwarder_trace
        if self.link_trace:
            out["links"] = self.link_trace
        return out

    def digest(self) -> str:
        h = hashlib.sha256()
        for name, rows in sorted(self.tables().items()):
            h.update(name.encode())
            h.update(_csv_bytes(TABLE_COLUMNS[name], rows))
        h.update(canonical_json(self.summary).encode())
        return h.hexdigest()


def _csv_bytes(columns: tuple[str, ...], rows: list[tuple]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue().encode()


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def export(result: RunResult, out_dir: str, formats: set[str]) -> list[str]:
    """Write artifacts; returns the list of file paths created."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if "csv" in formats:
        for name, rows in result.tables().items():
            path = os.path.join(out_dir, f"{name}.csv")
            with open(path, "wb") as fh:
                fh.write(_csv_bytes(TABLE_COLUMNS[name], rows))
            written.append(path)
    if "json" in formats:
        path = os.path.join(out_dir, "summary.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(result.summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(path)
        cfg_path = os.path.join(out_dir, "scenario.cfg")
        with open(cfg_path, "w", encoding="utf-8") as fh:
            fh.write(result.config_ini)
        written.append(cfg_path)
    return written
