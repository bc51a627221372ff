import struct
import wave

import numpy as np
import pytest

from transteg.audio_io import (
    FRAME_SAMPLES, PcmStream, UnsupportedWavError, WavFormatError, frame_stream, join_frames, read_wav, write_wav,
)


def _raw_wav(path, samples, rate=8000, channels=1, width=2):
    # hand-built RIFF so the reader is not checked against its own writer
    data = np.asarray(samples, dtype="<i2").tobytes() if width == 2 else bytes(len(samples))
    fmt = struct.pack("<HHIIHH", 1, channels, rate, rate * channels * width, channels * width, 8 * width)
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt + b"data" + struct.pack("<I", len(data)) + data
    path.write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)


def test_read_ramp_of_1603_samples(tmp_path):
    ramp = (np.arange(1603) * 41 - 32768).astype(np.int16)
    _raw_wav(tmp_path / "r.wav", ramp)
    s = read_wav(tmp_path / "r.wav")
    assert len(s) == 1603
    assert np.array_equal(s.samples, ramp)


def test_thirty_seconds(tmp_path):
    write_wav(PcmStream(np.zeros(240000, np.int16)), tmp_path / "a.wav")
    assert len(read_wav(tmp_path / "a.wav")) == 240000


def test_file_size_follows_riff_layout(tmp_path):
    p = tmp_path / "a.wav"
    write_wav(PcmStream(np.ones(240000, np.int16)), p)
    # RIFF(12) + fmt chunk(8 + 16) + data header(8) = 44
    assert p.stat().st_size == 12 + 24 + 8 + 480000


def test_ramp_round_trip_is_byte_identical(tmp_path):
    ramp = np.arange(-32768, 32768, 257).astype(np.int16)
    write_wav(PcmStream(ramp), tmp_path / "a.wav")
    first = (tmp_path / "a.wav").read_bytes()
    write_wav(read_wav(tmp_path / "a.wav"), tmp_path / "b.wav")
    assert (tmp_path / "b.wav").read_bytes() == first
    assert np.array_equal(read_wav(tmp_path / "b.wav").samples, ramp)


def test_empty_stream(tmp_path):
    write_wav(PcmStream(np.zeros(0, np.int16)), tmp_path / "e.wav")
    assert len(read_wav(tmp_path / "e.wav")) == 0
    with wave.open(str(tmp_path / "e.wav")) as wf:
        assert wf.getnframes() == 0


def test_stereo_rejected(tmp_path):
    _raw_wav(tmp_path / "s.wav", np.zeros(20, np.int16), channels=2)
    with pytest.raises(UnsupportedWavError, match="unsupported channel count"):
        read_wav(tmp_path / "s.wav")


def test_rate_and_width_reported_distinctly(tmp_path):
    _raw_wav(tmp_path / "r.wav", np.zeros(20, np.int16), rate=16000)
    with pytest.raises(UnsupportedWavError, match="sample rate"):
        read_wav(tmp_path / "r.wav")
    _raw_wav(tmp_path / "w.wav", np.zeros(20, np.int16), width=1)
    with pytest.raises(UnsupportedWavError, match="sample width"):
        read_wav(tmp_path / "w.wav")


def test_garbage_is_malformed(tmp_path):
    (tmp_path / "g.wav").write_bytes(b"not a wav file at all")
    with pytest.raises(WavFormatError):
        read_wav(tmp_path / "g.wav")


def test_stream_rejects_other_formats():
    with pytest.raises(UnsupportedWavError):
        PcmStream(np.zeros(3, np.int16), sample_rate=44100)


@pytest.mark.parametrize("n, frames", [(240000, 1500), (100, 1), (0, 0), (160, 1), (161, 2)])
def test_frame_counts(n, frames):
    out = frame_stream(PcmStream(np.ones(n, np.int16)))
    assert len(out) == frames
    assert all(f.size == FRAME_SAMPLES for f in out)


def test_partial_frame_zero_padded():
    (f,) = frame_stream(PcmStream(np.full(100, 7, np.int16)))
    assert (f[:100] == 7).all() and (f[100:] == 0).all()


def test_join_undoes_framing():
    x = np.random.default_rng(1).integers(-32768, 32767, 1234).astype(np.int16)
    frames = frame_stream(PcmStream(x))
    assert np.array_equal(join_frames(frames, x.size).samples, x)
