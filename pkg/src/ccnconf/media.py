"""Synthetic traffic sources and frame chunking.

Video is GOP structured: a key frame every ``sigma`` frames, delta frames in
between.  Sizes are drawn from bounded uniform distributions; a configurable
fraction of delta frames is drawn one chunk oversized so the consumer's
under-fetch repair path actually gets traffic.  Audio is CBR, one object per
frame, no chunking.
"""

from __future__ import annotations

import csv
import enum
import math
import random
from dataclasses import dataclass, field

from .names import ContentName, MediaType


class InvalidFrameError(ValueError):
    pass


class FrameType(enum.Enum):
    KEY = "key"
    DELTA = "delta"
    AUDIO = "audio"
    TEXT = "text"


@dataclass(frozen=True)
class EncodedFrame:
    index: int
    frame_type: FrameType
    size: int
    media_timestamp: float  # ms

    def __post_init__(self):
        if self.size < 1:
            raise InvalidFrameError(f"frame {self.index} has size {self.size}")


@dataclass(frozen=True)
class FrameDescriptor:
    """Metadata replicated into every chunk of a frame."""

    frame_index: int
    frame_type: FrameType
    total_chunks: int
    media_timestamp: float


@dataclass(frozen=True)
class DataObject:
    name: ContentName
    payload_size: int
    metadata: FrameDescriptor
    generation_time: float

    def __post_init__(self):
        if self.metadata.total_chunks < 1:
            raise InvalidFrameError("total_chunks must be >= 1")
        if self.name.chunk_index >= self.metadata.total_chunks:
            raise InvalidFrameError(
                f"chunk {self.name.chunk_index} out of range for "
                f"{self.metadata.total_chunks}-chunk frame")


@dataclass
class VideoModel:
    """Seeded generator of key/delta frame sizes.

    Sizes are produced sequentially by frame index from a private RNG, so the
    same (seed, index) always yields the same frame.
    """

    sigma: int = 25
    rho_f: float = 25.0
    key_size_range: tuple[int, int] = (9000, 15000)
    delta_size_range: tuple[int, int] = (600, 3000)
    oversize_prob: float = 0.1
    oversize_range: tuple[int, int] = (3001, 6000)
    max_size: int = 60000
    seed: int = 0
    _rng: random.Random = field(init=False, repr=False)
    _next_index: int = field(init=False, default=0, repr=False)

    def __post_init__(self):
        if self.sigma < 1:
            raise ValueError("sigma must be >= 1")
        self._rng = random.Random(self.seed)
        self._next_index = 0

    @property
    def t_f(self) -> float:
        return 1000.0 / self.rho_f

    def next_frame(self) -> EncodedFrame:
        index = self._next_index
        self._next_index += 1
        if index % self.sigma == 0:
            kind = FrameType.KEY
            size = self._rng.randint(*self.key_size_range)
        else:
            kind = FrameType.DELTA
            if self._rng.random() < self.oversize_prob:
                size = self._rng.randint(*self.oversize_range)
            else:
                size = self._rng.randint(*self.delta_size_range)
        size = min(size, self.max_size)
        return EncodedFrame(index, kind, size, index * self.t_f)

    def reset(self):
        self._rng = random.Random(self.seed)
        self._next_index = 0


@dataclass
class AudioModel:
    """Constant bit rate source, one object per frame."""

    bitrate: int = 30000  # bits/s
    frame_interval_ms: float = 20.0
    _next_index: int = field(init=False, default=0, repr=False)

    def __post_init__(self):
        payload = self.bitrate * self.frame_interval_ms / 8000.0
        if payload != int(payload):
            raise ValueError(
                f"bitrate {self.bitrate} and interval {self.frame_interval_ms} "
                "do not give a whole-byte payload")
        self.payload_bytes = int(payload)

    @property
    def rho_f(self) -> float:
        return 1000.0 / self.frame_interval_ms

    def next_frame(self) -> EncodedFrame:
        index = self._next_index
        self._next_index += 1
        return EncodedFrame(index, FrameType.AUDIO, self.payload_bytes,
                            index * self.frame_interval_ms)

    def reset(self):
        self._next_index = 0


def chunk_count(size: int, l_chunk: int) -> int:
    return max(1, math.ceil(size / l_chunk))


def chunk_frame(frame: EncodedFrame, l_chunk: int, name_for,
                generation_time: float) -> list[DataObject]:
    """Split a frame into chunks carrying identical frame metadata.

    ``name_for`` maps a chunk index to the chunk's ContentName; audio and text
    names have no chunk component, which is fine because they always produce
    exactly one chunk.
    """
    if l_chunk < 1:
        raise ValueError("l_chunk must be >= 1")
    if frame.size < 1:
        raise InvalidFrameError("zero-size frame")
    total = chunk_count(frame.size, l_chunk)
    meta = FrameDescriptor(frame.index, frame.frame_type, total, frame.media_timestamp)
    chunks = []
    remaining = frame.size
    for j in range(total):
        payload = min(l_chunk, remaining)
        remaining -= payload
        chunks.append(DataObject(name_for(j), payload, meta, generation_time))
    return chunks


def export_frame_sizes(frames: list[EncodedFrame], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "type", "bytes"])
        for f in frames:
            writer.writerow([f.index, f.frame_type.value, f.size])


def load_frame_sizes(path: str, t_f: float) -> list[EncodedFrame]:
    frames = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            frames.append(EncodedFrame(int(row["index"]), FrameType(row["type"]),
                                       int(row["bytes"]), int(row["index"]) * t_f))
    return frames
