"""WAV input/output and 20 ms framing for 8 kHz mono 16-bit speech."""

import wave
from dataclasses import dataclass, field

import numpy as np

SAMPLE_RATE = 8000
FRAME_SAMPLES = 160  # 20 ms at 8 kHz


class WavFormatError(ValueError):
    """The file is not a RIFF/WAVE container we can parse."""


class UnsupportedWavError(ValueError):
    """Valid WAV, but not 8 kHz / 16-bit / mono linear PCM."""


@dataclass(eq=False)
class PcmStream:
    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE
    channels: int = 1

    def __post_init__(self):
        if self.sample_rate != SAMPLE_RATE:
            raise UnsupportedWavError(f"unsupported sample rate {self.sample_rate} Hz (need {SAMPLE_RATE})")
        if self.channels != 1:
            raise UnsupportedWavError(f"unsupported channel count {self.channels}")
        self.samples = np.ascontiguousarray(self.samples, dtype=np.int16).reshape(-1)

    def __len__(self):
        return self.samples.size

    def __eq__(self, other):
        return (isinstance(other, PcmStream) and self.sample_rate == other.sample_rate
                and np.array_equal(self.samples, other.samples))

    @property
    def duration(self):
        return self.samples.size / self.sample_rate


def read_wav(path):
    try:
        with wave.open(str(path), "rb") as wf:
            channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            raw = wf.readframes(wf.getnframes())
    except (wave.Error, EOFError) as exc:
        raise WavFormatError(f"malformed WAV container {path}: {exc}") from exc
    if channels != 1:
        raise UnsupportedWavError(f"unsupported channel count {channels} in {path}")
    if width != 2:
        raise UnsupportedWavError(f"unsupported sample width {8 * width} bit in {path}")
    if rate != SAMPLE_RATE:
        raise UnsupportedWavError(f"unsupported sample rate {rate} Hz in {path}")
    return PcmStream(np.frombuffer(raw, dtype="<i2").astype(np.int16))


def write_wav(stream, path):
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(SAMPLE_RATE)
        wf.writeframes(stream.samples.astype("<i2").tobytes())


def frame_stream(stream):
    """Split into 160-sample frames; the last one is zero-padded."""
    samples = stream.samples if isinstance(stream, PcmStream) else np.asarray(stream, dtype=np.int16)
    n_frames = -(-samples.size // FRAME_SAMPLES)
    padded = np.zeros(n_frames * FRAME_SAMPLES, dtype=np.int16)
    padded[:samples.size] = samples
    return list(padded.reshape(n_frames, FRAME_SAMPLES))


def join_frames(frames, n_samples=None):
    if len(frames) == 0:
        return PcmStream(np.zeros(0, dtype=np.int16))
    samples = np.concatenate([np.asarray(f, dtype=np.int16) for f in frames])
    if n_samples is not None:
        samples = samples[:n_samples]
    return PcmStream(samples)
