"""G.711 mu-law and A-law companding.

Both laws are memoryless, so encoding and decoding are plain table lookups.
The tables are built once from the segment-search formulation of the
recommendation (the same structure as the classic CCITT reference code).
"""

import numpy as np

FRAME_BYTES = 160

_SEG_UEND = (0x3F, 0x7F, 0xFF, 0x1FF, 0x3FF, 0x7FF, 0xFFF, 0x1FFF)
_SEG_AEND = (0x1F, 0x3F, 0x7F, 0xFF, 0x1FF, 0x3FF, 0x7FF, 0xFFF)
_ULAW_BIAS = 0x84
_ULAW_CLIP = 8159


def _segment(val, table):
    for i, end in enumerate(table):
        if val <= end:
            return i
    return len(table)


def _linear_to_ulaw(pcm):
    pcm >>= 2
    if pcm < 0:
        pcm = -pcm
        mask = 0x7F
    else:
        mask = 0xFF
    if pcm > _ULAW_CLIP:
        pcm = _ULAW_CLIP
    pcm += _ULAW_BIAS >> 2
    seg = _segment(pcm, _SEG_UEND)
    if seg >= 8:
        return 0x7F ^ mask
    uval = (seg << 4) | ((pcm >> (seg + 1)) & 0xF)
    return uval ^ mask


def _ulaw_to_linear(code):
    code = ~code & 0xFF
    t = ((code & 0x0F) << 3) + _ULAW_BIAS
    t <<= (code & 0x70) >> 4
    return _ULAW_BIAS - t if code & 0x80 else t - _ULAW_BIAS


def _linear_to_alaw(pcm):
    pcm >>= 3
    if pcm >= 0:
        mask = 0xD5
    else:
        mask = 0x55
        pcm = -pcm - 1
    seg = _segment(pcm, _SEG_AEND)
    if seg >= 8:
        return 0x7F ^ mask
    aval = seg << 4
    if seg < 2:
        aval |= (pcm >> 1) & 0xF
    else:
        aval |= (pcm >> seg) & 0xF
    return aval ^ mask


def _alaw_to_linear(code):
    code ^= 0x55
    t = (code & 0x0F) << 4
    seg = (code & 0x70) >> 4
    if seg == 0:
        t += 8
    elif seg == 1:
        t += 0x108
    else:
        t += 0x108
        t <<= seg - 1
    return t if code & 0x80 else -t


def _build_tables():
    linear = np.arange(-32768, 32768)
    enc_u = np.array([_linear_to_ulaw(int(v)) for v in linear], dtype=np.uint8)
    enc_a = np.array([_linear_to_alaw(int(v)) for v in linear], dtype=np.uint8)
    dec_u = np.array([_ulaw_to_linear(c) for c in range(256)], dtype=np.int16)
    dec_a = np.array([_alaw_to_linear(c) for c in range(256)], dtype=np.int16)
    return {"mu": (enc_u, dec_u), "a": (enc_a, dec_a)}


_TABLES = _build_tables()


_LAW_NAMES = {"mu": "mu", "u": "mu", "ulaw": "mu", "μ": "mu", "a": "a", "alaw": "a"}


def _law(law):
    key = _LAW_NAMES.get(str(law).lower().replace("-", "").replace("_", ""))
    if key is None:
        raise ValueError(f"unknown G.711 law {law!r}")
    return key


def compress(samples, law="mu"):
    """Compand any number of int16 samples to G.711 code bytes."""
    enc, _ = _TABLES[_law(law)]
    samples = np.asarray(samples, dtype=np.int16)
    return enc[samples.astype(np.int32) + 32768].tobytes()


def expand(codes, law="mu"):
    """Expand G.711 code bytes to int16 samples."""
    _, dec = _TABLES[_law(law)]
    return dec[np.frombuffer(bytes(codes), dtype=np.uint8)]


def g711_encode(frame, law="mu"):
    frame = np.asarray(frame)
    if frame.shape != (FRAME_BYTES,):
        raise ValueError(f"G.711 frame must hold {FRAME_BYTES} samples, got {frame.size}")
    return compress(frame, law)


def g711_decode(payload, law="mu"):
    if len(payload) != FRAME_BYTES:
        raise ValueError(f"wrong payload length: G.711 expects {FRAME_BYTES} bytes, got {len(payload)}")
    return expand(payload, law)
