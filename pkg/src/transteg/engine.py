"""TranSteg proper: covert codec pairing, per-stream state and the node roles.

Payload layout of a TranSteg packet (overt G.711 claims 160 bytes)::

    [0, 80)    G.726-32 voice for the same 20 ms frame
    [80, 160)  next steganogram chunk, or keyed filler once the steganogram is done

PT, length, sequence number, timestamp and SSRC are never touched.

Masked sessions model an SRTP-protected call: the whole payload travels
XOR-ed with a keystream from (key, SSRC, packet index).  While key material is
being smuggled to an intermediate SR, the stego region of those packets is
left in the clear so the SR can read the key before it can unmask anything.
"""

import math
from dataclasses import dataclass, field

from .channel import HEADER_LEN, Compression, StegoChannel, filler_bytes, frame_steganogram
from .codec import g711, g726
from .codec.registry import (
    G711_A, G711_MU, G726_32, PACKETS_PER_SECOND, CodecSpec, UnsupportedPair, codec_lookup, transcode,
)
from .masking import KEY_LEN, ExtendedIndex, mask

COVERT_MAP = {G711_MU.name: G726_32, G711_A.name: G726_32}


class TranStegError(ValueError):
    """A packet or configuration that violates a TranSteg precondition."""


class NoMapping(TranStegError, LookupError):
    pass


def covert_map(overt):
    try:
        return COVERT_MAP[overt.name]
    except KeyError:
        raise NoMapping(f"no mapping: {overt.name} has no registered covert codec") from None


@dataclass(frozen=True)
class CodecPair:
    overt: CodecSpec
    covert: CodecSpec

    def __post_init__(self):
        if self.capacity_bytes <= 0:
            raise NoMapping(f"no capacity: {self.overt.name} -> {self.covert.name} frees "
                            f"{self.capacity_bytes} bytes")

    @classmethod
    def for_overt(cls, overt):
        return cls(overt, covert_map(overt))

    @property
    def capacity_bytes(self):
        return self.overt.bytes_per_frame - self.covert.bytes_per_frame

    @property
    def dynamic_map(self):
        return {self.covert.payload_type: self.covert}


def steg_bandwidth(pair_or_sizes, packets_per_second=PACKETS_PER_SECOND):
    """Hidden-channel rate in bit/s: freed payload bits per packet times packet rate.

    Accepts a CodecPair or a plain ``(overt_bytes, covert_bytes)`` tuple.
    """
    if packets_per_second <= 0:
        raise ValueError("packets_per_second must be positive")
    if isinstance(pair_or_sizes, CodecPair):
        freed = pair_or_sizes.capacity_bytes
    else:
        overt, covert = pair_or_sizes
        freed = overt - covert
    return max(freed, 0) * 8 * packets_per_second


def bootstrap_packet_count(key_len, capacity):
    if capacity <= 0:
        raise TranStegError("capacity zero: cannot carry key material")
    return math.ceil((key_len + HEADER_LEN) / capacity)


@dataclass
class StreamState:
    """Everything one node keeps for one direction of one stream."""

    codec_pair: CodecPair
    stego: StegoChannel | None = None
    mask_key: bytes | None = None
    filler_seed: int = 0
    adpcm_enc: g726.AdpcmState = field(default_factory=g726.AdpcmState)
    adpcm_dec: g726.AdpcmState = field(default_factory=g726.AdpcmState)
    packet_index: int = 0
    bootstrap_remaining: int = 0
    transcodes: int = 0
    # key smuggling: framed key blob on the sending side, a collector on the receiving side
    _key_frame: bytes = b""
    _key_cursor: int = 0
    _key_collector: StegoChannel | None = None
    _index: ExtendedIndex = field(default_factory=ExtendedIndex)
    _last_index: int = -1

    def __post_init__(self):
        if self.mask_key is not None and len(self.mask_key) != KEY_LEN:
            raise TranStegError(f"mask key must be {KEY_LEN} bytes")

    @property
    def capacity(self):
        return self.codec_pair.capacity_bytes

    @property
    def voice_len(self):
        return self.codec_pair.covert.bytes_per_frame

    @property
    def masked(self):
        return self.mask_key is not None

    @property
    def key_known(self):
        return self.mask_key is not None and self._key_collector is None

    def _advance(self, packet):
        idx = self._index(packet.sequence_number)
        self.packet_index += 1
        self._last_index = idx
        return idx


def bootstrap_keys(state, session_key):
    """Arrange for ``session_key`` to ride unmasked in the next stego regions.

    Returns the per-packet plan: the byte slices of the framed key blob each
    bootstrap packet will carry (the last one is topped up with filler).
    """
    cap = state.capacity
    n = bootstrap_packet_count(len(session_key), cap)
    framed = frame_steganogram(session_key)
    state._key_frame = framed
    state._key_cursor = 0
    state.bootstrap_remaining = n
    state.mask_key = bytes(session_key)
    return [framed[i * cap:(i + 1) * cap] for i in range(n)]


def expect_bootstrap(state):
    """Receiving side of bootstrap_keys: collect the key before unmasking anything."""
    state._key_collector = StegoChannel.extractor()
    state.mask_key = None


def _check_overt(packet, state):
    pair = state.codec_pair
    if len(packet.payload) != pair.overt.bytes_per_frame:
        raise TranStegError(f"payload length mismatch: got {len(packet.payload)}, "
                            f"expected {pair.overt.bytes_per_frame}")
    try:
        codec = codec_lookup(packet.payload_type, pair.dynamic_map)
    except LookupError as exc:
        raise TranStegError(str(exc)) from None
    if codec != pair.overt:
        raise TranStegError(f"PT/codec mismatch: PT {packet.payload_type} is {codec.name}, "
                            f"stream overt codec is {pair.overt.name}")


def _next_region(state, idx, ssrc):
    """Stego-region bytes for the next packet, plus whether they must stay unmasked."""
    cap = state.capacity
    if state.bootstrap_remaining > 0:
        chunk = state._key_frame[state._key_cursor:state._key_cursor + cap]
        state._key_cursor += len(chunk)
        state.bootstrap_remaining -= 1
        return chunk + filler_bytes(state.filler_seed, ssrc, idx, cap - len(chunk)), True
    chunk = state.stego.take(cap) if state.stego is not None else b""
    return chunk + filler_bytes(state.filler_seed, ssrc, idx, cap - len(chunk)), False


def embed(packet, state, pcm=None):
    """SS step: put covert voice in the head of the payload and stego in the tail.

    With ``pcm`` (a 160-sample frame) the voice is encoded straight into the
    covert codec, as an endpoint SS can do; otherwise the overt payload is
    transcoded (and unmasked first in a masked session).
    """
    _check_overt(packet, state)
    idx = state._advance(packet)
    ssrc = packet.ssrc
    if pcm is not None:
        voice, state.adpcm_enc = g726.g726_encode(pcm, state.adpcm_enc)
    else:
        overt = packet.payload
        if state.masked:
            overt = mask(overt, state.mask_key, ssrc, idx)
        voice = transcode(overt, state.codec_pair.overt, state.codec_pair.covert, state)
        state.transcodes += 1
    region, clear = _next_region(state, idx, ssrc)
    if state.masked:
        voice = mask(voice, state.mask_key, ssrc, idx)
        if not clear:
            region = mask(region, state.mask_key, ssrc, idx, offset=state.voice_len)
    return packet.with_payload(voice + region)


def _open_region(packet, state, idx):
    """Unmask (where possible) and split a TranSteg payload into voice and stego region."""
    payload = packet.payload
    vlen = state.voice_len
    voice, region = payload[:vlen], payload[vlen:]
    if state._key_collector is not None:
        # still learning the key: this region is cleartext key material
        state._key_collector.feed(region)
        if state._key_collector.invalid:
            raise TranStegError(f"bootstrap failed: {state._key_collector.invalid}")
        if state._key_collector.complete:
            state.mask_key = state._key_collector.payload()
            state._key_collector = None
            if len(state.mask_key) != KEY_LEN:
                raise TranStegError("bootstrap delivered a key of the wrong size")
        if state.mask_key is None:
            raise TranStegError("masked voice arrived before the key was complete")
        return mask(voice, state.mask_key, packet.ssrc, idx), None
    if state.masked:
        voice = mask(voice, state.mask_key, packet.ssrc, idx)
        if state.bootstrap_remaining > 0:
            state.bootstrap_remaining -= 1
            return voice, None
        region = mask(region, state.mask_key, packet.ssrc, idx, offset=vlen)
    return voice, region


def extract(packet, state):
    """SR step: return (covert voice bytes, steganogram bytes carried by this packet).

    The chunk is clipped to what the declared length still allows, so filler
    after the end of the steganogram comes back empty.
    """
    _check_overt(packet, state)
    idx = state._advance(packet)
    voice, region = _open_region(packet, state, idx)
    if region is None or state.stego is None:
        return voice, b""
    return voice, state.stego.feed(region)


def restore(packet, state):
    """Intermediate SR: recover the stego chunk, then refill the whole payload with overt voice.

    Returns ``(packet, chunk)``.  In a masked session the restored payload is
    re-masked for the callee.
    """
    voice, chunk = extract(packet, state)
    overt = transcode(voice, state.codec_pair.covert, state.codec_pair.overt, state)
    state.transcodes += 1
    if state.masked:
        overt = mask(overt, state.mask_key, packet.ssrc, state._last_index)
    return packet.with_payload(overt), chunk


def decode_covert_voice(voice, state):
    pcm, state.adpcm_dec = g726.g726_decode(voice, state.adpcm_dec)
    return pcm


ROLES = ("sender", "sender-embedder", "intermediate-embedder", "intermediate-restorer",
         "receiver", "receiver-extractor")
_ROLE_ALIASES = {"s1-sender": "sender-embedder", "s1-receiver": "receiver-extractor"}


@dataclass
class StepResult:
    packet: object = None
    chunk: bytes = b""
    pcm: object = None


def role_step(role, packet, state, pcm=None):
    """Run one packet through a node playing ``role``.

    * sender: emits plain overt voice (``pcm`` required), masked if keyed
    * sender-embedder: encodes ``pcm`` directly in the covert codec and embeds
    * intermediate-embedder: transcodes overt to covert, then embeds
    * intermediate-restorer: extracts, then restores overt voice
    * receiver-extractor: extracts and decodes the covert voice
    * receiver: decodes the overt voice
    """
    role = _ROLE_ALIASES.get(role, role)
    if role == "sender":
        if pcm is None:
            raise TranStegError("role/packet mismatch: sender needs a PCM frame")
        payload = g711.g711_encode(pcm, state.codec_pair.overt.law)
        idx = state._advance(packet)
        if state.masked:
            payload = mask(payload, state.mask_key, packet.ssrc, idx)
        return StepResult(packet.with_payload(payload))
    if role == "sender-embedder":
        if pcm is None:
            raise TranStegError("role/packet mismatch: sender-embedder needs a PCM frame")
        return StepResult(embed(packet, state, pcm=pcm))
    if role == "intermediate-embedder":
        return StepResult(embed(packet, state))
    if role == "intermediate-restorer":
        out, chunk = restore(packet, state)
        return StepResult(out, chunk)
    if role == "receiver-extractor":
        voice, chunk = extract(packet, state)
        return StepResult(packet, chunk, decode_covert_voice(voice, state))
    if role == "receiver":
        _check_overt(packet, state)
        idx = state._advance(packet)
        payload = packet.payload
        if state.masked:
            payload = mask(payload, state.mask_key, packet.ssrc, idx)
        return StepResult(packet, b"", g711.g711_decode(payload, state.codec_pair.overt.law))
    raise TranStegError(f"unknown role {role!r}; expected one of {', '.join(ROLES)}")


__all__ = [
    "COVERT_MAP", "CodecPair", "Compression", "NoMapping", "ROLES", "StepResult", "StreamState",
    "TranStegError", "UnsupportedPair", "bootstrap_keys", "bootstrap_packet_count", "covert_map",
    "decode_covert_voice", "embed", "expect_bootstrap", "extract", "restore", "role_step",
    "steg_bandwidth",
]
