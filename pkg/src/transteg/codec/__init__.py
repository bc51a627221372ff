from .g711 import compress, expand, g711_decode, g711_encode
from .g726 import AdpcmState, g726_decode, g726_encode
from .registry import (
    DEFAULT_G726_PT,
    G711_A,
    G711_MU,
    G726_32,
    PACKETS_PER_SECOND,
    REGISTRY,
    CodecId,
    CodecSpec,
    UnknownPayloadType,
    UnsupportedPair,
    codec_by_name,
    codec_lookup,
    g726_with_pt,
    transcode,
)
