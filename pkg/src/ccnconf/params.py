"""Stream and budget parameters.

One ``StreamParams`` instance describes a single media stream class (video or
audio) end to end: frame cadence, notification cadence, chunking, the
producer's flow-control knobs and the consumer's pre-fetch window and latency
budget.  Field names follow the conventional parameter vocabulary used in
scenario files (theta, sigma, omega, xi, ...).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .names import MediaType


@dataclass(frozen=True)
class StreamParams:
    media: MediaType
    rho_f: float = 25.0          # frames/s
    sigma: int = 25              # frames per notification anchor group (GOP for video)
    k_notify: int = 1            # anchor groups between notifications
    l_chunk: int = 3000          # bytes per chunk
    n_i_buf: int = 100           # producer interest-buffer sizing, frames
    n_r_buf: int = 100           # consumer receive-buffer window, frames
    theta_ms: float = 1000.0     # fetch-ahead time
    omega: float = 0.5           # producer under-request threshold factor
    xi: float = 6.0              # producer fairness factor
    beta: float = 0.5            # consumer lag-jump advance factor
    gamma: float = 0.5           # consumer lag threshold factor
    eps_ir_key: int = 5          # chunks pre-fetched for a key frame
    eps_ir_delta: int = 1        # chunks pre-fetched for a delta frame
    de_jitter_ms: float = 40.0   # static play-out smoothing delay
    delta_enc_ms: float = 20.0
    delta_dec_ms: float = 10.0
    delta_e2e_ms: float = 250.0  # one-way service budget
    delta_rtt_ms: float = 80.0   # nominal round-trip budget used in scheduling

    def __post_init__(self):
        if self.rho_f <= 0:
            raise ValueError("rho_f must be positive")
        if self.sigma < 1:
            raise ValueError("sigma must be >= 1")
        if self.k_notify < 1:
            raise ValueError("k_notify must be >= 1")
        if not 0 < self.omega < 1:
            raise ValueError("omega must be in (0, 1)")
        if self.xi <= 1:
            raise ValueError("xi must be > 1")
        if not 0 < self.beta < 1:
            raise ValueError("beta must be in (0, 1)")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must be in (0, 1)")
        if self.l_chunk < 1:
            raise ValueError("l_chunk must be >= 1")
        n_theta = self.theta_ms * self.rho_f / 1000.0
        if abs(n_theta - round(n_theta)) > 1e-9:
            raise ValueError("theta must be a whole number of frames")

    @property
    def t_f(self) -> float:
        """Frame duration, ms."""
        return 1000.0 / self.rho_f

    @property
    def n_theta(self) -> int:
        """Fetch-ahead gap in frames."""
        return round(self.theta_ms * self.rho_f / 1000.0)

    @property
    def tau_notify_ms(self) -> float:
        return self.k_notify * self.sigma * self.t_f

    @property
    def prefetch_horizon_ms(self) -> float:
        """theta + n_i_buf/rho_f: how far ahead pre-fetching reaches."""
        return self.theta_ms + self.n_i_buf * 1000.0 / self.rho_f

    def interest_lifetime_ms(self, rtt_max_ms: float | None = None) -> float:
        """Pre-fetching Interests must outlive the fetch-ahead horizon."""
        slack = 2.0 * (rtt_max_ms if rtt_max_ms is not None else self.delta_rtt_ms)
        return self.prefetch_horizon_ms + slack

    def estimate_chunks(self, frame_index: int) -> int:
        """Chunks a consumer pre-fetches for a frame it has not seen yet."""
        if self.media is not MediaType.VIDEO:
            return 1
        if frame_index % self.sigma == 0:
            return self.eps_ir_key
        return self.eps_ir_delta

    def with_overrides(self, **kw) -> "StreamParams":
        return replace(self, **kw)


def default_video_params() -> StreamParams:
    return StreamParams(media=MediaType.VIDEO)


def default_audio_params() -> StreamParams:
    # 50 fps (20 ms framing), anchors once per notification interval,
    # single-object frames, 4 s of pre-fetch window like the video defaults.
    return StreamParams(
        media=MediaType.AUDIO, rho_f=50.0, sigma=50, l_chunk=3000,
        n_i_buf=200, n_r_buf=200, eps_ir_key=1, eps_ir_delta=1,
        de_jitter_ms=20.0, delta_enc_ms=10.0, delta_dec_ms=10.0,
        delta_e2e_ms=150.0)


@dataclass(frozen=True)
class LatencyBudget:
    """Per-media service targets used by the analysis layer."""

    delta_rtt_ms: float = 80.0
    de_jitter_ms: float = 40.0
    delta_enc_ms: float = 20.0
    delta_dec_ms: float = 10.0
    delta_e2e_audio_ms: float = 150.0
    delta_e2e_video_ms: float = 250.0

    @property
    def delta_codec_ms(self) -> float:
        return self.delta_enc_ms + self.delta_dec_ms

    def e2e_for(self, media: MediaType) -> float:
        return (self.delta_e2e_audio_ms if media is MediaType.AUDIO
                else self.delta_e2e_video_ms)

    @classmethod
    def from_params(cls, p: StreamParams, e2e_audio: float = 150.0) -> "LatencyBudget":
        return cls(delta_rtt_ms=p.delta_rtt_ms, de_jitter_ms=p.de_jitter_ms,
                   delta_enc_ms=p.delta_enc_ms, delta_dec_ms=p.delta_dec_ms,
                   delta_e2e_audio_ms=e2e_audio, delta_e2e_video_ms=p.delta_e2e_ms)
