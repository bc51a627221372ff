import json
import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from transteg.simulator import ScenarioConfig, run_call
from transteg.warden import (
    ByteHistogram, ByteHistogramTransformer, TapPairDetector, WardenError, WardenPolicy, detect, divergence,
    histogram,
)

POLICY = WardenPolicy.load()
hists = st.lists(st.integers(0, 1000), min_size=256, max_size=256).map(lambda c: ByteHistogram(np.array(c)))


def test_basic_histograms():
    assert histogram([]).total == 0
    h = histogram([b"\xff" * 160])
    assert h.counts[255] == 160 and h.total == 160 and h.counts[:255].sum() == 0


@given(st.binary(), st.binary())
def test_additivity(a, b):
    assert histogram(a + b) == histogram(a).merge(histogram(b))


@given(hists, hists, hists)
def test_merge_laws(a, b, c):
    assert a + b == b + a
    assert (a + b) + c == a + (b + c)


@given(hists, hists)
def test_metric_properties(a, b):
    if a.total == 0 or b.total == 0:
        return
    for m in ("tv", "chi-square", "kl-smoothed"):
        assert divergence(a, a, m) == pytest.approx(0, abs=1e-12)
        assert divergence(a, b, m) >= 0
    assert divergence(a, b) == pytest.approx(divergence(b, a))
    assert divergence(a, b) <= 1


def test_disjoint_support_gives_tv_one():
    assert divergence(histogram(b"\x00" * 10), histogram(b"\x01" * 3)) == 1.0


def test_metric_errors():
    with pytest.raises(WardenError):
        divergence(histogram(b""), histogram(b"a"))
    with pytest.raises(WardenError):
        divergence(histogram(b"a"), histogram(b"a"), "hamming")


def test_csv_output(tmp_path):
    histogram(b"abc").write_csv(tmp_path / "h.csv")
    rows = (tmp_path / "h.csv").read_text().splitlines()
    assert len(rows) == 257 and rows[0] == "byte_value,count" and rows[1 + ord("a")] == "97,1"


@pytest.fixture(scope="module")
def s4_taps(fixture_wavs, text_steganogram):
    cfg = ScenarioConfig("S4", fixture_wavs[:1], stego_data=text_steganogram,
                         taps=["before-ss", "after-ss", "after-sr"])
    return run_call(cfg).tap_records


def test_single_tap_is_clean(s4_taps):
    for recs in s4_taps.values():
        v = detect({1: recs}, POLICY)
        assert v.verdict == "clean" and v.rationale == "single localization"


def test_straddling_the_ss_is_suspicious(s4_taps):
    v = detect({1: s4_taps["before-ss"], 2: s4_taps["after-ss"]}, POLICY)
    assert v.suspicious and "1-2" in v.rationale
    assert v.metrics["1-2"]["tv"] > POLICY.format_threshold


def test_ends_of_s4_sit_in_transcoding_band(s4_taps):
    v = detect({1: s4_taps["before-ss"], 3: s4_taps["after-sr"]}, POLICY)
    tv = v.metrics["1-3"]["tv"]
    assert 0 < tv <= POLICY.same_format_threshold and v.verdict == "clean"


def test_identical_captures_are_clean(s4_taps):
    v = detect({1: s4_taps["after-ss"], 2: s4_taps["after-ss"]}, POLICY)
    assert v.verdict == "clean" and all(x == 0 for x in v.metrics["1-2"].values())


def test_packet_count_mismatch(s4_taps):
    with pytest.raises(WardenError, match="tolerance"):
        detect({1: s4_taps["before-ss"][:100], 2: s4_taps["after-ss"]}, POLICY)
    with pytest.raises(WardenError):
        detect({}, POLICY)


@pytest.mark.parametrize("scenario", ["S1", "S2", "S3"])
def test_masked_taps_look_alike(fixture_wavs, text_steganogram, scenario):
    taps = ["before-ss", "after-ss"] + (["after-sr"] if scenario == "S2" else [])
    rep = run_call(ScenarioConfig(scenario, fixture_wavs[1:2], mask_key=os.urandom(16),
                                  stego_data=text_steganogram, taps=taps))
    band_min = POLICY.provenance["same_format"]["band_min"]
    hs = list(rep.tap_histograms.values())
    for i in range(len(hs)):
        for j in range(i + 1, len(hs)):
            assert divergence(hs[i], hs[j]) < band_min
    assert detect(rep.tap_records, POLICY).verdict == "clean"


def test_transformer_rows():
    X = [[b"\x00\x01", b"\x01"], [b"\xff" * 4]]
    rows = ByteHistogramTransformer().fit_transform(X)
    assert rows.shape == (2, 256) and rows[0, 1] == 2 and rows[1, 255] == 4
    norm = ByteHistogramTransformer(normalize=True).fit(X).transform(X)
    assert np.allclose(norm.sum(axis=1), 1)


def _pairs(scale, n=5, seed=0):
    rng = np.random.default_rng(seed)
    base = rng.integers(50, 100, 256)
    out = []
    for _ in range(n):
        other = base + rng.integers(0, 1 + scale, 256)
        out.append([base, other])
    return out


def test_detector_midpoint_and_api():
    clean, stego = _pairs(5), _pairs(400, seed=1)
    det = TapPairDetector().fit(clean + stego, [0] * 5 + [1] * 5)
    assert det.clean_max_ < det.threshold_ < det.stego_min_ and det.separable_
    assert det.threshold_ == pytest.approx((det.clean_max_ + det.stego_min_) / 2)
    assert det.predict(clean).tolist() == [0] * 5 and det.predict(stego).tolist() == [1] * 5
    assert det.score(clean + stego, [0] * 5 + [1] * 5) == 1.0
    assert det.get_params() == {"margin": 0.0, "metric": "tv", "rule": "midpoint"}
    assert not hasattr(clone(det), "threshold_")


def test_detector_band_rule_and_validation():
    det = TapPairDetector(rule="band", margin=0.5).fit(_pairs(5))
    assert det.threshold_ == pytest.approx(det.clean_max_ * 1.5)
    with pytest.raises(NotFittedError):
        TapPairDetector().predict(_pairs(5))
    with pytest.raises(WardenError):
        TapPairDetector().fit(np.zeros((3, 256)))
    with pytest.raises(WardenError):
        TapPairDetector().fit(_pairs(5))  # midpoint needs stego pairs


def test_policy_round_trip(tmp_path):
    POLICY.save(tmp_path / "p.json")
    again = WardenPolicy.load(tmp_path / "p.json")
    assert again == POLICY
    assert json.loads((tmp_path / "p.json").read_text())["schema"] == 1


def test_shipped_policy_ordering():
    assert POLICY.same_format_threshold < POLICY.reference_threshold < POLICY.format_threshold
