"""Codec descriptors, payload-type lookup and payload transcoding."""

import enum
from dataclasses import dataclass

from . import g711, g726

PACKETS_PER_SECOND = 50
DEFAULT_G726_PT = 96


class CodecId(enum.Enum):
    G711_MU = "g711u"
    G711_A = "g711a"
    G726_32 = "g726-32"


@dataclass(frozen=True)
class CodecSpec:
    id: CodecId
    payload_type: int
    bytes_per_frame: int
    bit_rate: int

    def __post_init__(self):
        if not 0 <= self.payload_type <= 127:
            raise ValueError(f"payload type {self.payload_type} outside [0, 127]")
        if self.bytes_per_frame * PACKETS_PER_SECOND * 8 != self.bit_rate:
            raise ValueError(f"{self.id.value}: bytes_per_frame inconsistent with bit rate")

    @property
    def name(self):
        return self.id.value

    @property
    def law(self):
        return {CodecId.G711_MU: "mu", CodecId.G711_A: "a"}.get(self.id)

    @property
    def is_g711(self):
        return self.law is not None


class UnknownPayloadType(LookupError):
    pass


class UnsupportedPair(ValueError):
    pass


G711_MU = CodecSpec(CodecId.G711_MU, 0, 160, 64000)
G711_A = CodecSpec(CodecId.G711_A, 8, 160, 64000)
G726_32 = CodecSpec(CodecId.G726_32, DEFAULT_G726_PT, 80, 32000)

REGISTRY = {c.name: c for c in (G711_MU, G711_A, G726_32)}
STATIC_PAYLOAD_TYPES = {0: G711_MU, 8: G711_A}

_ALIASES = {"g711mu": "g711u", "pcmu": "g711u", "g711a": "g711a", "pcma": "g711a",
            "g726": "g726-32", "g72632": "g726-32", "g726_32": "g726-32"}


def codec_by_name(name):
    key = name.lower()
    key = _ALIASES.get(key.replace("-", "").replace(".", ""), key)
    if key not in REGISTRY:
        raise KeyError(f"unknown codec {name!r}; known: {', '.join(REGISTRY)}")
    return REGISTRY[key]


def g726_with_pt(payload_type):
    return CodecSpec(CodecId.G726_32, payload_type, 80, 32000)


def codec_lookup(payload_type, dynamic_map=None):
    if payload_type in STATIC_PAYLOAD_TYPES:
        return STATIC_PAYLOAD_TYPES[payload_type]
    if dynamic_map and payload_type in dynamic_map:
        return dynamic_map[payload_type]
    raise UnknownPayloadType(f"unknown PT {payload_type}")


def transcode(payload, src, dst, state):
    """Decode ``payload`` to linear PCM and re-encode it with ``dst``.

    ``state`` carries the ADPCM encoder/decoder pair (``adpcm_enc`` and
    ``adpcm_dec``); the relevant one is advanced in place.
    """
    if src.is_g711 and dst.id is CodecId.G726_32:
        pcm = g711.g711_decode(payload, src.law)
        out, state.adpcm_enc = g726.g726_encode(pcm, state.adpcm_enc)
        return out
    if src.id is CodecId.G726_32 and dst.is_g711:
        pcm, state.adpcm_dec = g726.g726_decode(payload, state.adpcm_dec)
        return g711.g711_encode(pcm, dst.law)
    raise UnsupportedPair(f"unsupported pair {src.name} -> {dst.name}")
