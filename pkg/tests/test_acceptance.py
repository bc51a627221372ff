"""The ten acceptance criteria, each at its stated tolerance.

Run ``pytest tests/test_acceptance.py -v``; the terminal summary ends with
one PASS/FAIL line per criterion.
"""

import json
import os
import time

import numpy as np
import pytest
from capture_scanner import halves, parse_frame, records, scan
from checksum_oracle import verify_native
from conftest import DATA, ROOT
from g726_blocks import Blocks
from scipy.stats import chisquare

from transteg.audio_io import frame_stream, read_wav
from transteg.calibration import calibrate
from transteg.cli import build_scenario, main, read_config
from transteg.codec import g711
from transteg.codec.g726 import AdpcmState, decode_codes, encode_samples
from transteg.masking import mask
from transteg.quality import segmental_snr
from transteg.simulator import ConfigError, ScenarioConfig, run_call
from transteg.warden import WardenPolicy, detect

CONFIG = ROOT / "configs" / "s4_fixture.conf"
KEY = bytes.fromhex("8f1e2d3c4b5a69788796a5b4c3d2e1f0")
EMITTED = []  # every capture file written by the runs below, for criterion 4


@pytest.fixture(scope="module")
def s4_nine_minutes(tmp_path_factory):
    cfg = build_scenario(read_config(CONFIG))
    cfg.capture_dir = str(tmp_path_factory.mktemp("s4") / "caps")
    t0 = time.perf_counter()
    rep = run_call(cfg)
    wall = time.perf_counter() - t0
    EMITTED.extend(rep.capture_files.values())
    return cfg, rep, wall


@pytest.fixture(scope="module")
def s1_run(tmp_path_factory, fixture_wavs, text_steganogram):
    d = tmp_path_factory.mktemp("s1")
    cfg = ScenarioConfig("S1", fixture_wavs[:1], packets=1500, stego_data=text_steganogram[:100000],
                         taps=["before-ss", "after-ss"], capture_dir=str(d))
    rep = run_call(cfg)
    EMITTED.extend(rep.capture_files.values())
    return cfg, rep


def test_1_bandwidth_identity(capsys, acceptance):
    assert main(["bandwidth", "--overt", "g711u", "--covert", "g726-32", "--pps", "50"]) == 0
    rate = capsys.readouterr().out.strip()
    assert main(["bandwidth", "--overt", "g711u", "--covert", "g726-32", "--pps", "50", "--duration", "540"]) == 0
    total = capsys.readouterr().out.strip().splitlines()[-1]
    ok = rate == "32000 bit/s" and total.startswith("2160000 bytes")
    acceptance(1, ok, f"{rate}; {total}")


@pytest.mark.slow
def test_2_s4_nine_minute_call(s4_nine_minutes, acceptance):
    cfg, rep, wall = s4_nine_minutes
    stego = cfg.steganogram()
    # independent check: read the stego stream straight off the after-SS capture
    _, tails = halves(rep.capture_files["after-ss"])
    header, body = parse_frame(tails)
    ok = (rep.packets_sent == 27000 and rep.extraction_ok and body == stego and header["length"] == len(stego)
          and rep.transcode_count == 2 and len(stego) > 2_100_000 and wall < 60)
    acceptance(2, ok, f"{rep.packets_sent} packets, {len(stego)} byte steganogram recovered "
                      f"{'identical' if body == stego else 'DIFFERENT'}, transcodes/packet "
                      f"{rep.transcode_count}, {wall:.1f} s")


def test_3_payload_layout_s1(s1_run, acceptance):
    cfg, rep = s1_run
    before, after = rep.capture_files["before-ss"], rep.capture_files["after-ss"]
    problems = scan(before, after, voice_bytes=80)
    lengths_ok = all(len(r["payload"]) == 160 and r["pt"] == 0 for r in records(after))
    heads, tails = halves(after)
    header, body = parse_frame(tails)
    stego_ok = body == cfg.steganogram()
    # the voice half must be exactly the G.726 stream of the input, per the independent block model
    pcm = np.concatenate(frame_stream(read_wav(cfg.wav_inputs[0])))[:1500 * 160]
    model = Blocks()
    codes = [model.encode(int(v)) for v in pcm]
    packed = bytes(codes[i] | (codes[i + 1] << 4) for i in range(0, len(codes), 2))
    voice_ok = b"".join(heads) == packed
    n = sum(1 for _ in records(after))
    ok = n == 1500 and not problems and lengths_ok and stego_ok and voice_ok
    acceptance(3, ok, f"{n} packets; header fields/length {'unchanged' if not problems else problems[:3]}; "
                      f"80-byte heads {'=' if voice_ok else '!='} block-model G.726; "
                      f"80-byte tails {'=' if stego_ok else '!='} framed steganogram")


@pytest.mark.slow
def test_4_checksums(s4_nine_minutes, s1_run, tmp_path, fixture_wavs, acceptance):
    masked = run_call(ScenarioConfig("S2", fixture_wavs[2:3], mask_key=KEY, stego_data=b"k" * 20000,
                                     taps=["before-ss", "after-ss", "after-sr"], capture_dir=str(tmp_path / "m")))
    files = EMITTED + list(masked.capture_files.values())
    src = s1_run[1].capture_files["before-ss"]
    (tmp_path / "s.bin").write_bytes(os.urandom(5000))
    assert main(["embed", src, str(tmp_path / "cli.tscap"), "--stego", str(tmp_path / "s.bin")]) == 0
    files.append(str(tmp_path / "cli.tscap"))
    checked = bad = 0
    for f in files:
        for _, stored, computed in verify_native(f):
            checked += 1
            bad += stored != computed
    acceptance(4, bad == 0 and checked > 0, f"{checked} packets in {len(files)} captures, {bad} bad checksums")


def test_5_codec_fidelity(fixture_wavs, acceptance):
    codes = np.arange(256, dtype=np.uint8)
    a_ok = bytes(g711.compress(g711.expand(codes, "a"), "a")) == codes.tobytes()
    mu_back = np.frombuffer(g711.compress(g711.expand(codes, "mu"), "mu"), np.uint8)
    mu_fixed = int((mu_back == codes).sum())
    # mu-law 0x7F is "negative zero": decodes to 0 like 0xFF, so it re-encodes as 0xFF
    mu_ok = mu_fixed == 255 and mu_back[0x7F] == 0xFF

    vec = np.load(DATA / "g726_vectors.npz")
    names = sorted({k.split("/")[0] for k in vec.files})
    g726_ok = all(np.array_equal(encode_samples(vec[f"{n}/input"], AdpcmState()), vec[f"{n}/codes"])
                  and np.array_equal(decode_codes(vec[f"{n}/codes"], AdpcmState()), vec[f"{n}/decoded"])
                  for n in names)

    threshold = json.loads((DATA / "g726_oracle.json").read_text())["threshold_db"]
    worst = np.inf
    for path in fixture_wavs:
        x = read_wav(path).samples
        for law in ("mu", "a"):
            ref = g711.expand(g711.compress(x, law), law)
            back = g711.expand(g711.compress(decode_codes(encode_samples(ref, AdpcmState()), AdpcmState()), law),
                               law)
            worst = min(worst, segmental_snr(ref, back))
    ok = a_ok and mu_ok and g726_ok and worst >= threshold
    acceptance(5, ok, f"A-law 256/256 idempotent; mu-law {mu_fixed}/256 (0x7F negative zero aliases 0xFF, "
                      f"see decisions ledger); G.726 {len(names)} reference sequences bit-exact={g726_ok}; "
                      f"worst segSNR {worst:.2f} dB >= {threshold} dB (MOS not reproduced)")


@pytest.mark.slow
def test_6_detection_asymmetry(fixture_wavs, text_steganogram, acceptance):
    policy, summary = calibrate(fixture_wavs, text_steganogram)
    shipped = WardenPolicy.load()
    tau = policy.reference_threshold
    rows = summary["asymmetry"]
    worst_ratio = min(r["raw"] / r["deflate"] for r in rows)
    worst_defl = max(r["deflate"] for r in rows)
    ok = (all(r["raw"] > 2 * r["deflate"] for r in rows) and worst_defl < tau
          and tau == shipped.reference_threshold)
    acceptance(6, ok, f"{len(rows)} cross-call pairs: min raw/deflate TV ratio {worst_ratio:.1f}, "
                      f"max deflate TV {worst_defl:.4f} < tau {tau:.4f}; calibration reproduces shipped policy")


def test_7_single_tap_clean(fixture_wavs, text_steganogram, acceptance):
    policy = WardenPolicy.load()
    verdicts = []
    for scenario in ("S1", "S2", "S3", "S4"):
        for key in (None, KEY):
            if scenario == "S4" and key:
                continue
            taps = ["before-ss", "after-ss"] + (["after-sr"] if scenario in ("S2", "S4") else [])
            rep = run_call(ScenarioConfig(scenario, fixture_wavs[3:4], mask_key=key, packets=500,
                                          stego_data=text_steganogram, taps=taps))
            for tap, recs in rep.tap_records.items():
                verdicts.append(detect({tap: recs}, policy).verdict)
    ok = all(v == "clean" for v in verdicts)
    acceptance(7, ok, f"{verdicts.count('clean')}/{len(verdicts)} single-tap verdicts clean")


def test_8_masking_uniformity(acceptance):
    region = bytes(80)
    masked = b"".join(mask(region, KEY, 0x5EC12E7, i, offset=80) for i in range(12500))
    counts = np.bincount(np.frombuffer(masked, np.uint8), minlength=256)
    p = chisquare(counts).pvalue
    rng = np.random.default_rng(8)
    inv = 0
    for i in range(10_000):
        x = rng.bytes(int(rng.integers(1, 161)))
        ssrc, idx = int(rng.integers(0, 2 ** 32)), int(rng.integers(0, 2 ** 48))
        inv += mask(mask(x, KEY, ssrc, idx), KEY, ssrc, idx) == x
    ok = len(masked) == 1_000_000 and p > 0.01 and inv == 10_000
    acceptance(8, ok, f"chi-square p={p:.3f} on {len(masked)} masked bytes (alpha 0.01); involution {inv}/10000")


def test_9_s4_masking_refused(fixture_wavs, tmp_path, acceptance):
    cfg = ScenarioConfig("S4", fixture_wavs[:1], mask_key=KEY, capture_dir=str(tmp_path / "caps"))
    try:
        run_call(cfg)
        refused, msg = False, "call ran"
    except ConfigError as exc:
        refused, msg = True, str(exc)
    cli = main(["simulate", str(CONFIG), "--key", KEY.hex(), "--out", str(tmp_path / "r.json")])
    ok = refused and "SRTP" in msg and not (tmp_path / "caps").exists() and cli == 4 \
        and not (tmp_path / "r.json").exists()
    acceptance(9, ok, f"refused before packet one (API and CLI exit {cli}): {msg[:60]}...")


@pytest.mark.slow
def test_10_processing_time(s4_nine_minutes, acceptance):
    _, rep, _ = s4_nine_minutes
    added = rep.added_processing_us
    base = rep.passthrough_processing_us
    ok = added > base >= 0 and added > 0 and added <= 5000
    acceptance(10, ok, f"TranSteg stages {added:.1f} us/packet vs forwarding {base:.2f} us (bound 5000 us)")
