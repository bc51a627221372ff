"""Steganogram framing and the byte cursor that feeds it into packets.

Wire layout of a framed steganogram (little-endian)::

    u32 length | u8 compression (0 none, 1 deflate) | u8 version (1) | u16 reserved (0) | payload

``length`` counts payload bytes as transmitted, i.e. after compression.
"""

import enum
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

HEADER = struct.Struct("<IBBH")
HEADER_LEN = HEADER.size
VERSION = 1


class Compression(enum.IntEnum):
    NONE = 0
    DEFLATE = 1


class FramingError(ValueError):
    pass


def _deflate(data):
    co = zlib.compressobj(9, zlib.DEFLATED, -15)
    return co.compress(data) + co.flush()


def _inflate(data):
    return zlib.decompress(data, -15)


def frame_steganogram(data, compression=Compression.NONE):
    """Header plus (optionally deflated) steganogram bytes, ready to chunk."""
    compression = Compression(compression)
    body = _deflate(bytes(data)) if compression is Compression.DEFLATE else bytes(data)
    return HEADER.pack(len(body), int(compression), VERSION, 0) + body


def parse_header(raw):
    length, comp, version, reserved = HEADER.unpack(raw[:HEADER_LEN])
    if version != VERSION or reserved != 0 or comp not in (0, 1):
        raise FramingError(f"not a steganogram header (version={version}, compression={comp}, reserved={reserved})")
    return length, Compression(comp)


def filler_bytes(seed, ssrc, index, n):
    """Keyed pseudorandom padding for stego space with nothing left to send."""
    if n <= 0:
        return b""
    return np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, ssrc, index]).bytes(n)


@dataclass
class StegoChannel:
    """One direction of the hidden channel: either feeding or collecting bytes.

    An embedding channel walks a cursor over the framed steganogram.  An
    extracting channel buffers bytes until the header is complete, then keeps
    exactly ``total_length`` payload bytes and discards everything after.
    """

    direction: str = "embed"
    compression: Compression = Compression.NONE
    filler_seed: int = 0
    cursor: int = 0
    total_length: int | None = None
    _framed: bytes = b""
    _buffer: bytearray = field(default_factory=bytearray)
    invalid: str | None = None

    @classmethod
    def embedder(cls, data, compression=Compression.NONE, filler_seed=0):
        framed = frame_steganogram(data, compression)
        ch = cls("embed", Compression(compression), filler_seed)
        ch._framed = framed
        ch.total_length = len(framed) - HEADER_LEN
        return ch

    @classmethod
    def extractor(cls, compression=Compression.NONE, filler_seed=0):
        return cls("extract", Compression(compression), filler_seed)

    # embedding side
    @property
    def framed_length(self):
        return len(self._framed)

    @property
    def exhausted(self):
        return self.cursor >= len(self._framed)

    def take(self, n):
        chunk = self._framed[self.cursor:self.cursor + n]
        self.cursor += len(chunk)
        return chunk

    # extracting side
    @property
    def header_seen(self):
        return self.total_length is not None

    @property
    def complete(self):
        return self.header_seen and len(self._buffer) >= HEADER_LEN + self.total_length

    @property
    def received(self):
        """Steganogram payload bytes recovered so far (header excluded)."""
        return max(0, len(self._buffer) - HEADER_LEN)

    def feed(self, chunk):
        """Accept raw stego-region bytes; returns the part that belongs to the steganogram."""
        if self.invalid or self.complete:
            return b""
        if not self.header_seen:
            need = HEADER_LEN - len(self._buffer)
            self._buffer += chunk[:need]
            rest = chunk[need:]
            if len(self._buffer) < HEADER_LEN:
                return bytes(chunk)
            try:
                self.total_length, comp = parse_header(bytes(self._buffer))
            except FramingError as exc:
                self.invalid = str(exc)
                return b""
            if comp is not self.compression:
                self.invalid = f"compression flag mismatch: stream {comp.name}, expected {self.compression.name}"
                return b""
            kept = rest[:self.total_length]
            self._buffer += kept
            self.cursor = len(self._buffer) - HEADER_LEN
            return bytes(chunk[:need]) + bytes(kept)
        kept = chunk[:HEADER_LEN + self.total_length - len(self._buffer)]
        self._buffer += kept
        self.cursor = len(self._buffer) - HEADER_LEN
        return bytes(kept)

    def framed_bytes(self):
        return bytes(self._buffer)

    def payload(self):
        """The recovered steganogram, decompressed if needed."""
        if self.invalid:
            raise FramingError(self.invalid)
        if not self.complete:
            raise FramingError(f"steganogram incomplete: {self.received} of "
                               f"{self.total_length if self.header_seen else '?'} bytes")
        body = bytes(self._buffer[HEADER_LEN:HEADER_LEN + self.total_length])
        return _inflate(body) if self.compression is Compression.DEFLATE else body
