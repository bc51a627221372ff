"""Deterministic speech-like test material.

The experiments need several ~30 s, 8 kHz recordings of male and female
talkers.  No speech corpus ships with the package, so this module synthesizes
a source-filter approximation: a jittered glottal pulse train (or noise, for
fricatives) shaped by vowel formant resonators, grouped into syllables and
phrases with pauses and a faint background floor.  It is not intelligible
speech, but its level, spectral tilt, pauses and amplitude statistics are in
the range codecs and byte-histogram analyses care about.
"""

import numpy as np
from scipy.signal import lfilter

from .audio_io import SAMPLE_RATE, PcmStream, write_wav

# F1, F2, F3 (Hz) for a handful of adult-male vowels
_VOWELS = np.array([
    [730, 1090, 2440],   # a
    [530, 1840, 2480],   # e
    [270, 2290, 3010],   # i
    [570, 840, 2410],    # o
    [300, 870, 2240],    # u
    [660, 1720, 2410],   # ae
    [520, 1190, 2390],   # schwa
])
_BANDWIDTHS = np.array([80.0, 110.0, 160.0])

N_FIXTURES = 7
FIXTURE_SECONDS = 30.0


def _resonator(freq, bw):
    r = np.exp(-np.pi * bw / SAMPLE_RATE)
    theta = 2 * np.pi * freq / SAMPLE_RATE
    a = [1.0, -2 * r * np.cos(theta), r * r]
    b = [sum(a)]  # unity gain at DC
    return b, a


def _voiced(rng, n, f0, formants):
    period_jitter = rng.normal(0, 0.01, size=n)
    phase = np.cumsum(f0 * (1 + period_jitter) / SAMPLE_RATE)
    pulses = np.diff(np.floor(phase), prepend=0.0)
    # glottal shaping: two real poles give the -12 dB/octave source tilt
    src = lfilter([1.0], [1.0, -1.9, 0.9025], pulses)
    src -= src.mean()
    out = src
    for f, bw in zip(formants, _BANDWIDTHS):
        b, a = _resonator(f, bw)
        out = lfilter(b, a, out)
    out = lfilter([1.0, -0.95], [1.0], out)  # lip radiation
    return out


def _fricative(rng, n):
    noise = rng.normal(0, 1, size=n)
    b, a = _resonator(rng.uniform(2500, 3600), 900.0)
    return lfilter(b, a, lfilter([1.0, -0.9], [1.0], noise))


def _envelope(n, attack):
    env = np.ones(n)
    k = min(attack, n // 2)
    if k > 0:
        ramp = 0.5 - 0.5 * np.cos(np.linspace(0, np.pi, k))
        env[:k] = ramp
        env[n - k:] = ramp[::-1]
    return env


def synth_speech(seconds=FIXTURE_SECONDS, seed=0, female=False, level_dbfs=-26.0):
    """Return a PcmStream of synthetic speech of the requested duration."""
    rng = np.random.default_rng(seed)
    total = int(round(seconds * SAMPLE_RATE))
    out = np.zeros(total)
    f0_base = rng.uniform(190, 230) if female else rng.uniform(95, 130)
    formant_scale = 1.17 if female else 1.0
    pos = int(rng.uniform(0.1, 0.4) * SAMPLE_RATE)
    while pos < total:
        n_syll = int(rng.integers(3, 9))
        phrase_gain = rng.uniform(0.5, 1.0)
        for s in range(n_syll):
            if pos >= total:
                break
            dur = int(rng.uniform(0.12, 0.32) * SAMPLE_RATE)
            dur = min(dur, total - pos)
            declination = 1.0 - 0.25 * s / n_syll
            f0 = f0_base * declination * rng.uniform(0.9, 1.15)
            if rng.random() < 0.25:
                seg = 0.35 * _fricative(rng, dur)
            else:
                formants = _VOWELS[rng.integers(len(_VOWELS))] * formant_scale * rng.uniform(0.95, 1.05, 3)
                seg = _voiced(rng, dur, f0, formants)
                seg /= max(np.std(seg), 1e-9)
            seg = seg * _envelope(dur, int(0.03 * SAMPLE_RATE)) * phrase_gain * rng.uniform(0.6, 1.0)
            out[pos:pos + dur] += seg
            pos += dur + int(rng.uniform(0.0, 0.05) * SAMPLE_RATE)
        pos += int(rng.uniform(0.15, 0.7) * SAMPLE_RATE)

    active = np.abs(out) > 1e-6
    rms = np.sqrt(np.mean(out[active] ** 2)) if active.any() else 1.0
    out *= (10 ** (level_dbfs / 20) * 32768) / rms
    out += rng.normal(0, 10 ** (-62 / 20) * 32768, size=total)
    return PcmStream(np.clip(np.round(out), -32768, 32767).astype(np.int16))


def fixture_streams(n=N_FIXTURES, seconds=FIXTURE_SECONDS):
    """The bundled fixture set: alternating male/female talkers, seeds 1..n."""
    return [synth_speech(seconds, seed=i + 1, female=bool(i % 2)) for i in range(n)]


def write_fixtures(directory, n=N_FIXTURES, seconds=FIXTURE_SECONDS):
    from pathlib import Path

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, stream in enumerate(fixture_streams(n, seconds), start=1):
        p = directory / f"speech{i}.wav"
        write_wav(stream, p)
        paths.append(p)
    return paths


_TEXT_WORDS = (
    "the of and to in is was that for it with as his on be at by had this not are but from or have an they "
    "which one you were her all she there would their we him been has when who will more no if out so said "
    "what up its about into than them can only other new some could time these two may then do first any my "
    "now such like our over man me even most made after also did many before must through back years where "
    "much your way well down should because each just those people how too little state good very make world "
    "still own see men work long get here between both life being under never day same another know while "
    "last might us great old year off come since against go came right used take three"
).split()


def sample_text(n_bytes, seed=0):
    """English-like ASCII prose used as an uncompressed steganogram."""
    rng = np.random.default_rng(seed)
    parts = []
    size = 0
    while size < n_bytes:
        words = rng.choice(_TEXT_WORDS, size=int(rng.integers(6, 18)))
        sentence = " ".join(words).capitalize() + (". " if rng.random() < 0.85 else ", ")
        if rng.random() < 0.08:
            sentence += "\n"
        parts.append(sentence)
        size += len(sentence)
    return "".join(parts).encode("ascii")[:n_bytes]
