"""Hierarchical content and notification names.

Data names follow the gateway-prefixed format
``/<gateway>/<session>/<ue>/<media>/<suffix...>`` where the suffix depends on
the media type: video carries ``frame/chunk``, audio carries ``frame`` and
text carries ``message``.  Serialization is '/'-separated UTF-8 with integers
rendered in decimal, so names round-trip losslessly and stay readable in
traces.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class InvalidNameError(ValueError):
    pass


class InvalidSuffixError(InvalidNameError):
    pass


class WrongNameClassError(ValueError):
    """A notification name was supplied where a data name was required."""


class MediaType(enum.Enum):
    AUDIO = "audio"
    VIDEO = "video"
    TEXT = "text"


# number of integer suffix components per media type
_SUFFIX_ARITY = {MediaType.VIDEO: 2, MediaType.AUDIO: 1, MediaType.TEXT: 1}


def _check_component(value: str, what: str) -> None:
    if not value:
        raise InvalidNameError(f"empty {what} component")
    if "/" in value:
        raise InvalidNameError(f"{what} component may not contain '/': {value!r}")


@dataclass(frozen=True)
class ContentName:
    """Name of one data object (a chunk, an audio frame or a text message)."""

    csr_gateway_id: str
    conf_session_id: str
    ue_id: str
    media_type: MediaType
    media_suffix: tuple[int, ...]
    uri: str = field(init=False, compare=False, repr=False)
    _components: tuple[str, ...] = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        _check_component(self.csr_gateway_id, "gateway")
        _check_component(self.conf_session_id, "session")
        _check_component(self.ue_id, "ue")
        arity = _SUFFIX_ARITY[self.media_type]
        if len(self.media_suffix) != arity:
            raise InvalidSuffixError(
                f"{self.media_type.value} suffix needs {arity} component(s), "
                f"got {self.media_suffix!r}")
        for part in self.media_suffix:
            if not isinstance(part, int) or part < 0:
                raise InvalidSuffixError(f"suffix component {part!r} must be a non-negative integer")
        comps = (self.csr_gateway_id, self.conf_session_id, self.ue_id,
                 self.media_type.value) + tuple(str(p) for p in self.media_suffix)
        object.__setattr__(self, "_components", comps)
        object.__setattr__(self, "uri", "/" + "/".join(comps))

    def components(self) -> tuple[str, ...]:
        return self._components

    @property
    def frame_index(self) -> int:
        return self.media_suffix[0]

    @property
    def chunk_index(self) -> int:
        """Chunk within the frame; single-object media count as chunk 0."""
        return self.media_suffix[1] if self.media_type is MediaType.VIDEO else 0

    @property
    def stream_key(self) -> tuple[str, str, str]:
        """(session, ue, media) identifying the producer stream."""
        return (self.conf_session_id, self.ue_id, self.media_type.value)

    def __str__(self) -> str:
        return self.uri


def build_data_name(csr: str, conf: str, ue: str, media: MediaType,
                    suffix: tuple[int, ...]) -> ContentName:
    return ContentName(csr, conf, ue, media, tuple(suffix))


def parse_name(uri: str) -> ContentName:
    if not uri.startswith("/"):
        raise InvalidNameError(f"name must start with '/': {uri!r}")
    parts = uri[1:].split("/")
    if len(parts) < 5:
        raise InvalidNameError(f"too few components in {uri!r}")
    csr, conf, ue, media_txt = parts[:4]
    try:
        media = MediaType(media_txt)
    except ValueError:
        raise InvalidNameError(f"unknown media type {media_txt!r} in {uri!r}") from None
    try:
        suffix = tuple(int(p) for p in parts[4:])
    except ValueError:
        raise InvalidSuffixError(f"non-integer suffix in {uri!r}") from None
    return ContentName(csr, conf, ue, media, suffix)


@dataclass(frozen=True)
class NotificationName:
    """Three-component name carried by name-sync messages."""

    csr_gateway_id: str
    service_function_id: str
    fingerprint_text: str

    def __post_init__(self):
        _check_component(self.csr_gateway_id, "gateway")
        _check_component(self.service_function_id, "service function")
        if not self.fingerprint_text:
            raise InvalidNameError("empty fingerprint")

    @property
    def uri(self) -> str:
        return f"/{self.csr_gateway_id}/{self.service_function_id}/{self.fingerprint_text}"

    def __str__(self) -> str:
        return self.uri
