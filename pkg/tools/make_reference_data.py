"""Regenerate the frozen codec reference data under tests/data/.

    python tools/make_reference_data.py

Needs PyAV (``pip install av``) for the FFmpeg G.726 leg.  Outputs:

* g726_vectors.npz  - reset-state input/code/decoded sequences produced by
  the block-level model in g726_blocks.py
* g726_oracle.json  - segmental SNR of G.711 -> G.726 -> G.711 on every
  fixture, computed with FFmpeg's independent G.726 codec, plus the frozen
  acceptance threshold derived from it
"""

import io
import json
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))
sys.path.insert(0, str(ROOT / "tools"))

from g726_blocks import Blocks  # noqa: E402

from transteg.audio_io import read_wav  # noqa: E402
from transteg.codec import g711  # noqa: E402
from transteg.quality import segmental_snr  # noqa: E402

DATA = ROOT / "tests" / "data"
FIXTURES = sorted((ROOT / "fixtures").glob("speech*.wav"))
SNR_MARGIN_DB = 1.0


def reference_sequences():
    rng = np.random.default_rng(726)
    t = np.arange(16000) / 8000
    speech1 = read_wav(FIXTURES[0]).samples[8000:24000]
    speech2 = read_wav(FIXTURES[1]).samples[40000:56000]
    chirp = 20000 * np.sin(2 * np.pi * (50 * t + (3800 - 50) / (2 * t[-1]) * t ** 2))
    return {
        "speech_mu": g711.expand(g711.compress(speech1, "mu"), "mu"),
        "speech_a": g711.expand(g711.compress(speech2, "a"), "a"),
        "speech_linear": speech1.copy(),
        "noise_fullscale": rng.integers(-32768, 32768, 4800).astype(np.int16),
        "silence": np.zeros(1600, dtype=np.int16),
        "chirp": np.round(chirp).astype(np.int16),
        "square_extreme": np.tile(np.array([32767] * 4 + [-32768] * 4, dtype=np.int16), 200),
    }


def block_model_vectors():
    out = {}
    for name, seq in reference_sequences().items():
        enc = Blocks()
        codes = np.array([enc.encode(int(v)) for v in seq], dtype=np.uint8)
        dec = Blocks()
        decoded = np.array([dec.decode(int(c)) for c in codes], dtype=np.int16)
        out[f"{name}/input"] = seq.astype(np.int16)
        out[f"{name}/codes"] = codes
        out[f"{name}/decoded"] = decoded
        print(f"{name}: {seq.size} samples")
    return out


def ffmpeg_transcode(pcm):
    import av

    enc = av.CodecContext.create("g726le", "w")
    enc.sample_rate = 8000
    enc.format = "s16"
    enc.layout = "mono"
    enc.bit_rate = 32000
    enc.open()
    payload = bytearray()
    for i in range(0, pcm.size, 160):
        frame = av.AudioFrame.from_ndarray(pcm[i:i + 160].reshape(1, -1), format="s16", layout="mono")
        frame.sample_rate = 8000
        for packet in enc.encode(frame):
            payload += bytes(packet)
    for packet in enc.encode(None):
        payload += bytes(packet)
    container = av.open(io.BytesIO(bytes(payload)), format="g726le",
                        options={"code_size": "4", "sample_rate": "8000"})
    decoded = np.concatenate([f.to_ndarray().ravel() for f in container.decode(audio=0)])
    return decoded[:pcm.size].astype(np.int16)


def oracle_snr():
    per_fixture = {}
    for path in FIXTURES:
        x = read_wav(path).samples
        x = x[: x.size // 160 * 160]
        for law in ("mu", "a"):
            ref = g711.expand(g711.compress(x, law), law)
            back = g711.expand(g711.compress(ffmpeg_transcode(ref), law), law)
            per_fixture[f"{path.name}/{law}"] = round(segmental_snr(ref, back), 3)
    threshold = float(np.floor(min(per_fixture.values()) - SNR_MARGIN_DB))
    print(json.dumps(per_fixture, indent=1), "threshold", threshold)
    return {"oracle": "ffmpeg g726le via PyAV", "margin_db": SNR_MARGIN_DB,
            "segmental_snr_db": per_fixture, "threshold_db": threshold}


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(DATA / "g726_vectors.npz", **block_model_vectors())
    (DATA / "g726_oracle.json").write_text(json.dumps(oracle_snr(), indent=2) + "\n")


if __name__ == "__main__":
    main()
