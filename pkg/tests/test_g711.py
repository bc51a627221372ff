import warnings

import numpy as np
import pytest

from transteg.codec import g711

with warnings.catch_warnings():
    warnings.simplefilter("ignore", DeprecationWarning)
    audioop = pytest.importorskip("audioop")  # stdlib companding, an independent implementation (gone in 3.13)

ALL_SAMPLES = np.arange(-32768, 32768, dtype=np.int16)
LAWS = [("mu", audioop.lin2ulaw, audioop.ulaw2lin), ("a", audioop.lin2alaw, audioop.alaw2lin)]


@pytest.mark.parametrize("law, enc, dec", LAWS)
def test_encode_matches_audioop_exhaustively(law, enc, dec):
    expected = np.frombuffer(enc(ALL_SAMPLES.tobytes(), 2), dtype=np.uint8)
    assert np.array_equal(np.frombuffer(g711.compress(ALL_SAMPLES, law), np.uint8), expected)


@pytest.mark.parametrize("law, enc, dec", LAWS)
def test_decode_matches_audioop_for_all_codes(law, enc, dec):
    codes = np.arange(256, dtype=np.uint8)
    expected = np.frombuffer(dec(codes.tobytes(), 2), dtype=np.int16)
    assert np.array_equal(g711.expand(codes, law), expected)


def test_alaw_code_level_idempotence():
    codes = np.arange(256, dtype=np.uint8)
    back = np.frombuffer(g711.compress(g711.expand(codes, "a"), "a"), np.uint8)
    assert np.array_equal(back, codes)


def test_mulaw_idempotence_except_negative_zero():
    codes = np.arange(256, dtype=np.uint8)
    back = np.frombuffer(g711.compress(g711.expand(codes, "mu"), "mu"), np.uint8)
    fixed = back == codes
    assert fixed.sum() == 255
    # 0x7F is mu-law "negative zero": it decodes to 0 like 0xFF, and 0 encodes as 0xFF
    assert not fixed[0x7F] and back[0x7F] == 0xFF
    assert g711.expand(np.array([0x7F, 0xFF], np.uint8), "mu").tolist() == [0, 0]


@pytest.mark.parametrize("law", ["mu", "a"])
def test_quantization_error_bounded(law):
    y = g711.expand(g711.compress(ALL_SAMPLES, law), law).astype(int)
    err = np.abs(y - ALL_SAMPLES.astype(int))
    # largest segment step is 1024 (mu) / 1024 (A) in 16-bit units, error at most half a step + rounding
    assert err.max() <= 1024
    small = np.abs(ALL_SAMPLES.astype(int)) < 64
    assert err[small].max() <= 8


def test_known_pairs():
    # a few textbook values: silence and full scale
    assert g711.compress(np.array([0], np.int16), "mu")[0] == 0xFF
    assert g711.compress(np.array([0], np.int16), "a")[0] == 0xD5
    assert g711.compress(np.array([32767], np.int16), "mu")[0] == 0x80
    assert g711.compress(np.array([-32768], np.int16), "mu")[0] == 0x00
    assert g711.expand(np.array([0x80], np.uint8), "mu")[0] == 32124


def test_frame_helpers():
    out = g711.g711_encode(np.zeros(160, np.int16), "mu")
    assert len(out) == 160 and len(set(out)) == 1
    pcm = g711.g711_decode(bytes([0x55]) * 160, "a")
    assert pcm.size == 160 and len(set(pcm.tolist())) == 1


def test_wrong_lengths():
    with pytest.raises(ValueError, match="wrong payload length"):
        g711.g711_decode(b"", "mu")
    with pytest.raises(ValueError):
        g711.g711_encode(np.zeros(159, np.int16), "mu")
