import numpy as np
import pytest
from capture_scanner import halves, parse_frame
from checksum_oracle import verify_native

from transteg.audio_io import read_wav
from transteg.simulator import (
    TRANSCODES, ConfigError, Scenario, ScenarioConfig, Tap, aggregate, measure_processing, place_nodes, run_call,
    run_calls, valid_taps,
)

KEY = bytes.fromhex("000102030405060708090a0b0c0d0e0f")
ALL_TAPS = {"S1": ("before-ss", "after-ss"), "S2": ("before-ss", "after-ss", "after-sr"),
            "S3": ("before-ss", "after-ss"), "S4": ("before-ss", "after-ss", "after-sr")}


def _cfg(wavs, scenario="S4", **kw):
    kw.setdefault("packets", 300)
    kw.setdefault("taps", ALL_TAPS[scenario])
    return ScenarioConfig(scenario, wavs[:1], **kw)


def test_placement():
    assert place_nodes("S1") == ["sender-embedder", "receiver-extractor"]
    assert place_nodes("S2") == ["sender-embedder", "intermediate-restorer", "receiver"]
    assert place_nodes("S3") == ["sender", "intermediate-embedder", "receiver-extractor"]
    s4 = place_nodes("S4")
    assert len(s4) == 4 and s4[1:3] == ["intermediate-embedder", "intermediate-restorer"]
    s2 = place_nodes("S2")
    assert s2.index("intermediate-restorer") > s2.index("sender-embedder")


def test_tap_availability():
    assert Tap.AFTER_SR not in valid_taps("S1") and Tap.AFTER_SR in valid_taps("S4")
    with pytest.raises(ConfigError, match="after-sr"):
        ScenarioConfig("S3", ["x.wav"], taps=["after-sr"]).validate(check_files=False)


def test_s4_with_key_refused_before_any_output(fixture_wavs, tmp_path):
    cfg = _cfg(fixture_wavs, mask_key=KEY, capture_dir=str(tmp_path / "caps"))
    with pytest.raises(ConfigError, match="SRTP"):
        run_call(cfg)
    assert not (tmp_path / "caps").exists()


@pytest.mark.parametrize("scenario, masked", [("S1", False), ("S2", False), ("S3", False), ("S4", False),
                                               ("S1", True), ("S2", True), ("S3", True)])
def test_every_scenario_delivers(fixture_wavs, text_steganogram, scenario, masked):
    rep = run_call(_cfg(fixture_wavs, scenario, stego_data=text_steganogram[:15000],
                        mask_key=KEY if masked else None))
    assert rep.extraction_ok, rep.notes
    assert rep.transcode_count == TRANSCODES[Scenario(scenario)]
    assert rep.voice_frames_out == rep.packets_sent == 300


def test_empty_steganogram(fixture_wavs):
    rep = run_call(_cfg(fixture_wavs, "S1", taps=["after-ss"]))
    assert rep.extraction_ok and rep.stego_bytes_delivered == 0 and rep.voice_frames_out == 300


@pytest.mark.parametrize("n", [1, 2, 7, 50])
def test_goodput_is_capacity_minus_header(fixture_wavs, n):
    data = np.random.default_rng(n).bytes(n * 80 - 8)
    rep = run_call(_cfg(fixture_wavs, "S1", packets=n, stego_data=data))
    assert rep.extraction_ok
    assert rep.stego_bytes_delivered * 8 == rep.nominal_bandwidth_bit_s * n // 50 - 64
    assert rep.goodput_bit_s == pytest.approx(32000 - 64 * 50 / n)


def test_oversized_steganogram_reported(fixture_wavs):
    rep = run_call(_cfg(fixture_wavs, "S1", packets=5, stego_data=bytes(1000)))
    assert not rep.extraction_ok and any("did not fit" in n for n in rep.notes)


def test_voice_duration_preserved(fixture_wavs, tmp_path):
    for scenario in ("S1", "S2", "S3", "S4"):
        out = tmp_path / f"{scenario}.wav"
        run_call(ScenarioConfig(scenario, fixture_wavs[:1], output_wav=str(out), taps=["after-ss"]))
        n_in = read_wav(fixture_wavs[0]).samples.size
        assert abs(read_wav(out).samples.size - n_in) < 160


@pytest.mark.parametrize("scenario", ["S2", "S4"])
def test_nothing_recoverable_after_restore(fixture_wavs, text_steganogram, tmp_path, scenario):
    run_call(_cfg(fixture_wavs, scenario, stego_data=text_steganogram, capture_dir=str(tmp_path)))
    _, tails = halves(tmp_path / "tap3_after-sr.tscap")
    header, _ = parse_frame(tails)
    assert header["version"] != 1 or header["reserved"] != 0 or header["compression"] > 1 \
        or header["length"] > len(tails)
    assert text_steganogram[:64] not in tails


def test_runs_are_reproducible(fixture_wavs, text_steganogram):
    a = run_call(_cfg(fixture_wavs, "S4", stego_data=text_steganogram[:9000], filler_seed=3))
    b = run_call(_cfg(fixture_wavs, "S4", stego_data=text_steganogram[:9000], filler_seed=3))
    for tap in a.tap_records:
        assert [r.rtp_bytes for r in a.tap_records[tap]] == [r.rtp_bytes for r in b.tap_records[tap]]


def test_captures_pass_independent_checksums(fixture_wavs, tmp_path):
    rep = run_call(_cfg(fixture_wavs, "S2", mask_key=KEY, stego_data=b"x" * 3000, capture_dir=str(tmp_path)))
    for path in rep.capture_files.values():
        assert all(stored == computed for _, stored, computed in verify_native(path))


def test_sequence_rollover_in_masked_call(fixture_wavs):
    rep = run_call(_cfg(fixture_wavs, "S2", mask_key=KEY, seq_start=65400, stego_data=bytes(range(256)) * 50))
    assert rep.extraction_ok


def test_inputs_cycle_to_reach_packet_count(fixture_wavs):
    rep = run_call(ScenarioConfig("S1", fixture_wavs[:1], packets=1600, taps=["after-ss"]))
    assert rep.packets_sent == 1600


def test_measure_processing():
    outs, stats = measure_processing(lambda p: p, range(1000))
    assert outs == list(range(1000))
    assert stats.count == 1000 and stats.mean_us * 1000 == pytest.approx(stats.total_us)
    assert stats.mean_us < 50


def test_transteg_stages_cost_more_than_forwarding(fixture_wavs):
    rep = run_call(_cfg(fixture_wavs, "S4"))
    assert rep.added_processing_us > rep.passthrough_processing_us > 0


def test_report_json_shape(fixture_wavs):
    d = run_call(_cfg(fixture_wavs, "S1", taps=["after-ss"])).to_dict()
    assert d["schema"] == 1 and len(d["tap_histograms"]["after-ss"]) == 256


def test_parallel_calls_aggregate(fixture_wavs):
    cfgs = [_cfg(fixture_wavs, "S4", packets=100, stego_data=b"a" * 5000, ssrc=i) for i in range(2)]
    reps = run_calls(cfgs, max_workers=2)
    agg = aggregate(reps)
    assert agg["calls"] == 2 and agg["extraction_ok"] and agg["stego_bytes_delivered"] == 10000
