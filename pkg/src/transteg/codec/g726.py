"""G.726 ADPCM at 32 kbit/s (4-bit codes).

Integer arithmetic follows the CCITT reference structure: 14-bit linear
input, 6-pole/zero adaptive predictor in the custom floating format, and the
1988 tone/transition detector.  The per-sample loop is compiled with numba;
the state lives in a flat int64 vector so a frame can be processed without
leaving compiled code.

Packing: two codes per byte, first sample in the low nibble.
"""

import numpy as np
from numba import njit

FRAME_SAMPLES = 160
FRAME_BYTES = 80

# state vector layout
_YL, _YU, _DMS, _DML, _AP = 0, 1, 2, 3, 4
_A = 5      # a[0], a[1]
_B = 7      # b[0..5]
_PK = 13    # pk[0], pk[1]
_DQ = 15    # dq[0..5]
_SR = 21    # sr[0], sr[1]
_TD = 23
_STATE_LEN = 24

_QTAB = np.array([-124, 80, 178, 246, 300, 349, 400], dtype=np.int64)
_DQLNTAB = np.array([-2048, 4, 135, 213, 273, 323, 373, 425,
                     425, 373, 323, 273, 213, 135, 4, -2048], dtype=np.int64)
_WITAB = np.array([-12, 18, 41, 64, 112, 198, 355, 1122,
                   1122, 355, 198, 112, 64, 41, 18, -12], dtype=np.int64)
_FITAB = np.array([0, 0, 0, 0x200, 0x200, 0x200, 0x600, 0xE00,
                   0xE00, 0x600, 0x200, 0x200, 0x200, 0, 0, 0], dtype=np.int64)


def _reset_vector():
    s = np.zeros(_STATE_LEN, dtype=np.int64)
    s[_YL] = 34816
    s[_YU] = 544
    s[_SR:_SR + 2] = 32
    s[_DQ:_DQ + 6] = 32
    return s


class AdpcmState:
    """Opaque G.726 codec state; a fresh instance is the reset state."""

    __slots__ = ("_v",)

    def __init__(self, vector=None):
        self._v = _reset_vector() if vector is None else np.array(vector, dtype=np.int64)

    def copy(self):
        return AdpcmState(self._v)

    def __eq__(self, other):
        return isinstance(other, AdpcmState) and bool(np.array_equal(self._v, other._v))

    def __repr__(self):
        return f"AdpcmState(yl={self._v[_YL]}, yu={self._v[_YU]}, ap={self._v[_AP]})"


@njit(cache=True)
def _quan(val, size):
    # index of the first power of two strictly greater than val
    i = 0
    p = 1
    while i < size:
        if val < p:
            return i
        p <<= 1
        i += 1
    return size


@njit(cache=True)
def _fmult(an, srn):
    anmag = an if an > 0 else ((-an) & 0x1FFF)
    anexp = _quan(anmag, 15) - 6
    if anmag == 0:
        anmant = 32
    elif anexp >= 0:
        anmant = anmag >> anexp
    else:
        anmant = anmag << -anexp
    wanexp = anexp + ((srn >> 6) & 0xF) - 13
    wanmant = (anmant * (srn & 0o77) + 0x30) >> 4
    if wanexp >= 0:
        retval = (wanmant << wanexp) & 0x7FFF
    else:
        retval = wanmant >> -wanexp
    return -retval if (an ^ srn) < 0 else retval


@njit(cache=True)
def _predictor_zero(s):
    sezi = _fmult(s[_B] >> 2, s[_DQ])
    for i in range(1, 6):
        sezi += _fmult(s[_B + i] >> 2, s[_DQ + i])
    return sezi


@njit(cache=True)
def _predictor_pole(s):
    return _fmult(s[_A + 1] >> 2, s[_SR + 1]) + _fmult(s[_A] >> 2, s[_SR])


@njit(cache=True)
def _step_size(s):
    if s[_AP] >= 256:
        return s[_YU]
    y = s[_YL] >> 6
    dif = s[_YU] - y
    al = s[_AP] >> 2
    if dif > 0:
        y += (dif * al) >> 6
    elif dif < 0:
        y += (dif * al + 0x3F) >> 6
    return y


@njit(cache=True)
def _quantize(d, y, qtab):
    dqm = abs(d)
    exp = _quan(dqm >> 1, 15)
    mant = ((dqm << 7) >> exp) & 0x7F
    dl = (exp << 7) + mant
    dln = dl - (y >> 2)
    size = qtab.shape[0]
    i = size
    for k in range(size):
        if dln < qtab[k]:
            i = k
            break
    if d < 0:
        return (size << 1) + 1 - i
    if i == 0:
        return (size << 1) + 1
    return i


@njit(cache=True)
def _reconstruct(sign, dqln, y):
    dql = dqln + (y >> 2)
    if dql < 0:
        return -0x8000 if sign else 0
    dex = (dql >> 7) & 15
    dqt = 128 + (dql & 127)
    dq = (dqt << 7) >> (14 - dex)
    return dq - 0x8000 if sign else dq


@njit(cache=True)
def _to_float(mag):
    exp = _quan(mag, 15)
    return (exp << 6) + ((mag << 6) >> exp)


@njit(cache=True)
def _update(y, wi, fi, dq, sr, dqsez, s):
    pk0 = 1 if dqsez < 0 else 0
    mag = dq & 0x7FFF

    ylint = s[_YL] >> 15
    ylfrac = (s[_YL] >> 10) & 0x1F
    thr1 = (32 + ylfrac) << ylint
    thr2 = (31 << 10) if ylint > 9 else thr1
    dqthr = (thr2 + (thr2 >> 1)) >> 1
    if s[_TD] == 0 or mag <= dqthr:
        tr = 0
    else:
        tr = 1

    yu = y + ((wi - y) >> 5)
    if yu < 544:
        yu = 544
    elif yu > 5120:
        yu = 5120
    s[_YU] = yu
    s[_YL] += yu + ((-s[_YL]) >> 6)

    a2p = 0
    if tr == 1:
        for k in range(2):
            s[_A + k] = 0
        for k in range(6):
            s[_B + k] = 0
    else:
        pks1 = pk0 ^ s[_PK]
        a2p = s[_A + 1] - (s[_A + 1] >> 7)
        if dqsez != 0:
            fa1 = s[_A] if pks1 else -s[_A]
            if fa1 < -8191:
                a2p -= 0x100
            elif fa1 > 8191:
                a2p += 0xFF
            else:
                a2p += fa1 >> 5
            if pk0 ^ s[_PK + 1]:
                if a2p <= -12160:
                    a2p = -12288
                elif a2p >= 12416:
                    a2p = 12288
                else:
                    a2p -= 0x80
            elif a2p <= -12416:
                a2p = -12288
            elif a2p >= 12160:
                a2p = 12288
            else:
                a2p += 0x80
        s[_A + 1] = a2p

        s[_A] -= s[_A] >> 8
        if dqsez != 0:
            if pks1 == 0:
                s[_A] += 192
            else:
                s[_A] -= 192
        a1ul = 15360 - a2p
        if s[_A] < -a1ul:
            s[_A] = -a1ul
        elif s[_A] > a1ul:
            s[_A] = a1ul

        for k in range(6):
            s[_B + k] -= s[_B + k] >> 8
            if mag != 0:
                if (dq ^ s[_DQ + k]) >= 0:
                    s[_B + k] += 128
                else:
                    s[_B + k] -= 128

    for k in range(5, 0, -1):
        s[_DQ + k] = s[_DQ + k - 1]
    if mag == 0:
        s[_DQ] = 0x20 if dq >= 0 else -992
    elif dq >= 0:
        s[_DQ] = _to_float(mag)
    else:
        s[_DQ] = _to_float(mag) - 0x400

    s[_SR + 1] = s[_SR]
    if sr == 0:
        s[_SR] = 0x20
    elif sr > 0:
        s[_SR] = _to_float(sr)
    elif sr > -32768:
        s[_SR] = _to_float(-sr) - 0x400
    else:
        s[_SR] = -992

    s[_PK + 1] = s[_PK]
    s[_PK] = pk0

    if tr == 1:
        s[_TD] = 0
    elif a2p < -11776:
        s[_TD] = 1
    else:
        s[_TD] = 0

    s[_DMS] += (fi - s[_DMS]) >> 5
    s[_DML] += ((fi << 2) - s[_DML]) >> 7

    if tr == 1:
        s[_AP] = 256
    elif y < 1536 or s[_TD] == 1 or abs((s[_DMS] << 2) - s[_DML]) >= (s[_DML] >> 3):
        s[_AP] += (0x200 - s[_AP]) >> 4
    else:
        s[_AP] += (-s[_AP]) >> 4


@njit(cache=True)
def _encode_samples(pcm, s, qtab, dqlntab, witab, fitab):
    n = pcm.shape[0]
    codes = np.empty(n, dtype=np.uint8)
    for k in range(n):
        sl = np.int64(pcm[k]) >> 2
        sezi = _predictor_zero(s)
        sez = sezi >> 1
        se = (sezi + _predictor_pole(s)) >> 1
        d = sl - se
        y = _step_size(s)
        i = _quantize(d, y, qtab)
        dq = _reconstruct(i & 8, dqlntab[i], y)
        sr = se - (dq & 0x3FFF) if dq < 0 else se + dq
        dqsez = sr + sez - se
        _update(y, witab[i] << 5, fitab[i], dq, sr, dqsez, s)
        codes[k] = i
    return codes


@njit(cache=True)
def _decode_codes(codes, s, dqlntab, witab, fitab):
    n = codes.shape[0]
    out = np.empty(n, dtype=np.int16)
    for k in range(n):
        i = np.int64(codes[k]) & 0x0F
        sezi = _predictor_zero(s)
        sez = sezi >> 1
        se = (sezi + _predictor_pole(s)) >> 1
        y = _step_size(s)
        dq = _reconstruct(i & 0x08, dqlntab[i], y)
        sr = se - (dq & 0x3FFF) if dq < 0 else se + dq
        dqsez = sr - se + sez
        _update(y, witab[i] << 5, fitab[i], dq, sr, dqsez, s)
        v = sr << 2
        if v > 32767:
            v = 32767
        elif v < -32768:
            v = -32768
        out[k] = v
    return out


def pack_codes(codes):
    codes = np.asarray(codes, dtype=np.uint8)
    if codes.size % 2:
        raise ValueError("G.726-32 packing needs an even number of codes")
    return ((codes[0::2] & 0x0F) | ((codes[1::2] & 0x0F) << 4)).astype(np.uint8).tobytes()


def unpack_codes(payload):
    raw = np.frombuffer(bytes(payload), dtype=np.uint8)
    codes = np.empty(raw.size * 2, dtype=np.uint8)
    codes[0::2] = raw & 0x0F
    codes[1::2] = raw >> 4
    return codes


def encode_samples(samples, state):
    """Encode an arbitrary-length int16 sequence, advancing ``state`` in place."""
    pcm = np.ascontiguousarray(samples, dtype=np.int16)
    return _encode_samples(pcm, state._v, _QTAB, _DQLNTAB, _WITAB, _FITAB)


def decode_codes(codes, state):
    codes = np.ascontiguousarray(codes, dtype=np.uint8)
    return _decode_codes(codes, state._v, _DQLNTAB, _WITAB, _FITAB)


def g726_encode(frame, state):
    """Encode one 160-sample frame; returns ``(payload, successor_state)``.

    The input state is left untouched.
    """
    frame = np.asarray(frame)
    if frame.shape != (FRAME_SAMPLES,):
        raise ValueError(f"G.726 frame must hold {FRAME_SAMPLES} samples, got {frame.size}")
    nxt = state.copy()
    return pack_codes(encode_samples(frame, nxt)), nxt


def g726_decode(payload, state):
    if len(payload) != FRAME_BYTES:
        raise ValueError(f"wrong payload length: G.726-32 expects {FRAME_BYTES} bytes, got {len(payload)}")
    nxt = state.copy()
    return decode_codes(unpack_codes(payload), nxt), nxt
