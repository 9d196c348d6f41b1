"""Post-run analysis: latency decomposition, deadline checks, per-VSER
bandwidth prediction against measured counters, quality ratios and
notification overhead.

The bandwidth model predicts, for VSER i serving kappa_i of the session's
kappa_u clients across n_vser routers:

    downlink = w_I * kappa_i * (kappa_u + n_vser - 2) + w_D * kappa_i
    uplink   = w_D * kappa_i * (kappa_u + n_vser - 2) + w_I * kappa_i

where w_I / w_D are the average per-client interest and data stream rates,
measured from the trace over a steady-state window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .names import MediaType
from .params import LatencyBudget, StreamParams
from .scenario import ScenarioConfig
from .trace import CounterSample, FrameRow, RunResult


class InvalidInputError(ValueError):
    pass


class NotApplicableError(ValueError):
    pass


# ----------------------------------------------------------------------
# bandwidth model

@dataclass(frozen=True)
class BandwidthModelInputs:
    n_vser: int
    kappa_vser: tuple[int, ...]   # clients per VSER, index 0 = VSER 1
    kappa_u: int                  # total clients in the session
    w_ue_interest_bps: float      # average interest stream rate toward a client
    w_ue_data_bps: float          # average per-client data stream rate

    def __post_init__(self):
        if self.n_vser < 1 or len(self.kappa_vser) != self.n_vser:
            raise InvalidInputError("kappa_vser must list one count per VSER")
        if any(k < 0 for k in self.kappa_vser):
            raise InvalidInputError("client counts must be non-negative")
        if any(k > self.kappa_u for k in self.kappa_vser):
            raise InvalidInputError("kappa_vser_i cannot exceed kappa_u")
        if self.w_ue_interest_bps < 0 or self.w_ue_data_bps < 0:
            raise InvalidInputError("rates must be non-negative")


def predict_bandwidth_dl(inputs: BandwidthModelInputs, i: int) -> float:
    """Downlink utilization at VSER i (1-based), bits/s."""
    k_i = inputs.kappa_vser[i - 1]
    factor = inputs.kappa_u + inputs.n_vser - 2
    return (inputs.w_ue_interest_bps * k_i * factor
            + inputs.w_ue_data_bps * k_i)


def predict_bandwidth_ul(inputs: BandwidthModelInputs, i: int) -> float:
    """Uplink utilization at VSER i (1-based), bits/s."""
    k_i = inputs.kappa_vser[i - 1]
    factor = inputs.kappa_u + inputs.n_vser - 2
    return (inputs.w_ue_data_bps * k_i * factor
            + inputs.w_ue_interest_bps * k_i)


def _sample_at(samples: list[CounterSample], time_ms: float) -> CounterSample:
    best = samples[0]
    for s in samples:
        if s.time_ms <= time_ms + 1e-6:
            best = s
        else:
            break
    return best


@dataclass(frozen=True)
class VserRates:
    vser: str
    dl_bps: float
    ul_bps: float


def measure_vser_rates(result: RunResult, window_ms: tuple[float, float]
                       ) -> list[VserRates]:
    s0 = _sample_at(result.counter_samples, window_ms[0])
    s1 = _sample_at(result.counter_samples, window_ms[1])
    dt_s = (s1.time_ms - s0.time_ms) / 1000.0
    if dt_s <= 0:
        raise NotApplicableError("empty measurement window")
    rates = []
    for vser in result.vser_ids:
        c0, c1 = s0.per_vser[vser], s1.per_vser[vser]
        dl = (c1["dl_interest"] - c0["dl_interest"]
              + c1["dl_data_local"] - c0["dl_data_local"])
        ul = (c1["ul_data"] - c0["ul_data"]
              + c1["ul_interest_local"] - c0["ul_interest_local"])
        rates.append(VserRates(vser, dl * 8.0 / dt_s, ul * 8.0 / dt_s))
    return rates


def measure_client_rates(result: RunResult, window_ms: tuple[float, float],
                         kappa_u: int) -> tuple[float, float]:
    """(w_I, w_D) in bits/s per client, from the UE access-link counters."""
    s0 = _sample_at(result.counter_samples, window_ms[0])
    s1 = _sample_at(result.counter_samples, window_ms[1])
    dt_s = (s1.time_ms - s0.time_ms) / 1000.0
    if dt_s <= 0 or kappa_u <= 0:
        raise NotApplicableError("empty measurement window")
    w_i = (s1.ue_interest_in - s0.ue_interest_in) * 8.0 / dt_s / kappa_u
    w_d = (s1.ue_data_out - s0.ue_data_out) * 8.0 / dt_s / kappa_u
    return w_i, w_d


# ----------------------------------------------------------------------
# latency checks

def prefetch_duration_ms(theta_ms: float, n_i_buf: int, rho_f: float) -> float:
    """Pre-fetch horizon: fetch-ahead time plus the interest-buffer span."""
    return theta_ms + n_i_buf * 1000.0 / rho_f


def transfer_bound_ms(delta_rtt_ms: float, repaired: bool) -> float:
    """Budgeted transfer time: half an rtt, plus a full rtt when a batch
    repair round trip was needed."""
    sgn_term = 1.0 if repaired else 0.0
    return delta_rtt_ms * (0.5 + sgn_term)


@dataclass(frozen=True)
class LatencyDecomposition:
    delta_fwd_ms: float        # measured producer-to-consumer transfer
    de_jitter_ms: float
    codec_ms: float
    total_ms: float            # measured one-way latency incl. smoothing/codec
    bound_ms: float            # budgeted bound for this frame's path class
    budget_ms: float
    passes: bool


def one_way_latency_check(row: FrameRow, budget: LatencyBudget,
                          de_jitter_ms: float | None = None,
                          codec_ms: float | None = None) -> LatencyDecomposition:
    if row.complete_ms is None or row.gen_ms is None:
        raise NotApplicableError(f"frame {row.frame} did not complete")
    media = MediaType(row.media)
    de_jitter = budget.de_jitter_ms if de_jitter_ms is None else de_jitter_ms
    codec = budget.delta_codec_ms if codec_ms is None else codec_ms
    delta_fwd = row.complete_ms - row.gen_ms
    total = delta_fwd + de_jitter + codec
    bound = (transfer_bound_ms(budget.delta_rtt_ms, row.repaired)
             + de_jitter + codec)
    e2e = budget.e2e_for(media)
    return LatencyDecomposition(delta_fwd, de_jitter, codec, total, bound,
                                e2e, bound <= e2e)


def playout_deadline_check(row: FrameRow, params: StreamParams) -> bool:
    """Window-feasibility form of the play-out deadline requirement.

    ``headroom_ms`` freezes, at Interest-expression time, the distance from
    the window's anchoring notification to the play-out deadline at the far
    edge of the fetch window; the frame meets the requirement when that
    headroom covers the pre-fetch horizon plus the budgeted transfer time
    for its path class.
    """
    if row.headroom_ms is None:
        return False
    need = (prefetch_duration_ms(params.theta_ms, params.n_i_buf, params.rho_f)
            + transfer_bound_ms(params.delta_rtt_ms, row.repaired))
    return row.headroom_ms >= need - 1e-6


# ----------------------------------------------------------------------
# quality

@dataclass
class QualityReport:
    consumer: str
    producer: str
    media: str
    total: int
    usable: int
    late: int
    lost: int
    quality_pct: float
    p50_latency_ms: float | None
    p95_latency_ms: float | None
    p99_latency_ms: float | None


def _percentile(sorted_values: list[float], q: float) -> float | None:
    if not sorted_values:
        return None
    idx = min(len(sorted_values) - 1, math.floor(q * len(sorted_values)))
    return sorted_values[idx]


def compute_quality(rows: list[FrameRow]) -> QualityReport:
    """Quality of one stream: usable / late / lost over the judged span.

    Frame indexes missing inside the judged span were skipped by window
    jumps and count as lost.
    """
    judged = [r for r in rows if r.status != "unjudged"]
    if not judged:
        r0 = rows[0]
        return QualityReport(r0.consumer, r0.producer, r0.media,
                             0, 0, 0, 0, 100.0, None, None, None)
    judged.sort(key=lambda r: r.frame)
    first, last = judged[0].frame, judged[-1].frame
    span = last - first + 1
    usable = sum(1 for r in judged if r.status == "usable")
    late = sum(1 for r in judged if r.status == "late")
    lost = span - usable - late
    latencies = sorted(r.complete_ms - r.gen_ms for r in judged
                       if r.complete_ms is not None and r.gen_ms is not None)
    r0 = judged[0]
    return QualityReport(
        r0.consumer, r0.producer, r0.media, span, usable, late, lost,
        100.0 * usable / span if span else 100.0,
        _percentile(latencies, 0.50), _percentile(latencies, 0.95),
        _percentile(latencies, 0.99))


def latency_within_budget(rows: list[FrameRow], budget_ms: float) -> float:
    """Fraction of judged frames fully received within the one-way budget."""
    judged = [r for r in rows if r.status != "unjudged"]
    if not judged:
        return 1.0
    ok = sum(1 for r in judged
             if r.complete_ms is not None and r.gen_ms is not None
             and r.complete_ms - r.gen_ms <= budget_ms)
    return ok / len(judged)


def notification_overhead(result: RunResult) -> float:
    final = result.counter_samples[-1]
    if final.total_bytes <= 0:
        return 0.0
    return final.notification_bytes / final.total_bytes


# ----------------------------------------------------------------------
# summary

def group_stream_rows(result: RunResult) -> dict[tuple[str, str, str], list[FrameRow]]:
    groups: dict[tuple[str, str, str], list[FrameRow]] = {}
    for row in result.frames:
        groups.setdefault((row.consumer, row.producer, row.media), []).append(row)
    return groups


def measurement_window(cfg: ScenarioConfig) -> tuple[float, float]:
    last_join_ms = max((e.time_s for e in cfg.script if e.kind == "join"),
                       default=0.0) * 1000.0
    w0 = last_join_ms + cfg.warmup_s * 1000.0
    w1 = cfg.duration_s * 1000.0 - cfg.drain_s * 1000.0
    return w0, w1


def build_summary(cfg: ScenarioConfig, result: RunResult) -> dict:
    assertions: list[str] = []
    per_stream = []
    groups = group_stream_rows(result)
    for key in sorted(groups):
        q = compute_quality(groups[key])
        if q.usable + q.late + q.lost != q.total:
            assertions.append(f"quality decomposition mismatch for {key}")
        per_stream.append({
            "consumer": q.consumer, "producer": q.producer, "media": q.media,
            "frames": q.total, "usable": q.usable, "late": q.late,
            "lost": q.lost, "quality_pct": round(q.quality_pct, 4),
            "p50_latency_ms": _round(q.p50_latency_ms),
            "p95_latency_ms": _round(q.p95_latency_ms),
            "p99_latency_ms": _round(q.p99_latency_ms),
        })

    window = measurement_window(cfg)
    per_vser = []
    kappa = {v: 0 for v in result.vser_ids}
    for ue in result.session_members:
        kappa[result.ue_home[ue]] += 1
    kappa_u = len(result.session_members)
    window_ok = (window[1] - window[0] >= 2000.0 and kappa_u >= 2
                 and cfg.roles == "all")
    if window_ok:
        w_i, w_d = measure_client_rates(result, window, kappa_u)
        inputs = BandwidthModelInputs(
            n_vser=cfg.n_vser,
            kappa_vser=tuple(kappa[v] for v in result.vser_ids),
            kappa_u=kappa_u, w_ue_interest_bps=w_i, w_ue_data_bps=w_d)
        for i, rates in enumerate(measure_vser_rates(result, window), start=1):
            dl_pred = predict_bandwidth_dl(inputs, i)
            ul_pred = predict_bandwidth_ul(inputs, i)
            dl_err = _rel_err(dl_pred, rates.dl_bps)
            ul_err = _rel_err(ul_pred, rates.ul_bps)
            per_vser.append({
                "vser": rates.vser,
                "dl_measured_mbps": round(rates.dl_bps / 1e6, 6),
                "dl_predicted_mbps": round(dl_pred / 1e6, 6),
                "ul_measured_mbps": round(rates.ul_bps / 1e6, 6),
                "ul_predicted_mbps": round(ul_pred / 1e6, 6),
                "dl_error_pct": round(dl_err * 100.0, 4),
                "ul_error_pct": round(ul_err * 100.0, 4),
            })
            if abs(dl_err) > 0.02:
                assertions.append(f"vser{i} downlink prediction off by "
                                  f"{dl_err * 100.0:.2f}%")
            if abs(ul_err) > 0.02:
                assertions.append(f"vser{i} uplink prediction off by "
                                  f"{ul_err * 100.0:.2f}%")
        w_rates = {"w_ue_interest_mbps": round(w_i / 1e6, 6),
                   "w_ue_data_mbps": round(w_d / 1e6, 6)}
    else:
        w_rates = {}

    overhead = notification_overhead(result)
    summary = {
        "scenario": result.scenario_name,
        "seed": result.seed,
        "duration_s": result.duration_ms / 1000.0,
        "participants": cfg.participants,
        "session_members": result.session_members,
        "per_stream": per_stream,
        "per_vser": per_vser,
        "notification_overhead": round(overhead, 6),
        "rates": w_rates,
        "measurement_window_ms": [window[0], window[1]] if window_ok else None,
        "drops": result.drop_counts,
        "assertions": assertions,
        "effective_config": result.config_ini,
    }
    return summary


def _round(value: float | None, digits: int = 4) -> float | None:
    return None if value is None else round(value, digits)


def _rel_err(predicted: float, measured: float) -> float:
    if measured == 0:
        return 0.0 if predicted == 0 else math.inf
    return (predicted - measured) / measured
