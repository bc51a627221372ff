"""Warden threshold calibration on the bundled fixtures.

Three thresholds come out of here:

* format pairs (1-2, 2-3): clean = two overt streams of different calls,
  stego = the same call before and after an SS; midpoint rule.
* same-format pair (1-3): clean = a call before and after one legitimate
  G.711 -> G.726 -> G.711 transcoding hop (codec artifacts only); band rule.
* reference profile: clean = TranSteg streams with nothing to send (voice
  plus filler) from different calls; stego = the same against streams
  carrying raw text; midpoint rule.  Deflated steganograms are held out and
  only scored afterwards.
"""

from dataclasses import dataclass
from itertools import permutations
from pathlib import Path

import numpy as np

from .simulator import ScenarioConfig, run_call
from .warden import TapPairDetector, WardenPolicy, divergence

BAND_MARGIN = 0.25
CALIBRATION_FILLER_SEED = 2011


@dataclass
class FixtureTaps:
    name: str
    overt: object          # tap 1 histogram
    transcoded: object     # tap 3 of a call through a TranSteg pair with nothing to send
    clean: object          # tap 2, TranSteg stream carrying no steganogram
    raw: object            # tap 2 carrying the raw text steganogram
    deflate: object        # tap 2 carrying the deflated steganogram


def fixture_taps(wav, steganogram, filler_seed=CALIBRATION_FILLER_SEED):
    def run(data, comp):
        cfg = ScenarioConfig("S4", [wav], stego_data=data, compression=comp, filler_seed=filler_seed,
                             taps=("before-ss", "after-ss", "after-sr"))
        return run_call(cfg).tap_histograms
    empty, raw, defl = run(b"", 0), run(steganogram, 0), run(steganogram, 1)
    return FixtureTaps(Path(wav).name, empty["before-ss"], empty["after-sr"], empty["after-ss"],
                       raw["after-ss"], defl["after-ss"])


def _pairs(a, b):
    return [[x.counts, y.counts] for x, y in zip(a, b)]


def calibrate(wavs, steganogram, metric="tv", band_margin=BAND_MARGIN):
    """Fit the three detectors; returns (WardenPolicy, summary dict)."""
    taps = [fixture_taps(w, steganogram) for w in wavs]
    if len(taps) < 2:
        raise ValueError("calibration needs at least two fixtures")
    cross = list(permutations(range(len(taps)), 2))

    fmt_clean = _pairs([taps[i].overt for i, _ in cross], [taps[j].overt for _, j in cross])
    fmt_stego = _pairs([t.overt for t in taps] * 3,
                       [t.clean for t in taps] + [t.raw for t in taps] + [t.deflate for t in taps])
    fmt = TapPairDetector(metric, "midpoint").fit(fmt_clean + fmt_stego,
                                                  [0] * len(fmt_clean) + [1] * len(fmt_stego))

    band = TapPairDetector(metric, "band", band_margin).fit(_pairs([t.overt for t in taps],
                                                                   [t.transcoded for t in taps]))
    band_scores = band.score_pairs(_pairs([t.overt for t in taps], [t.transcoded for t in taps]))

    ref_clean = _pairs([taps[i].clean for i, _ in cross], [taps[j].clean for _, j in cross])
    ref_stego = _pairs([taps[i].clean for i, _ in cross], [taps[j].raw for _, j in cross])
    ref = TapPairDetector(metric, "midpoint").fit(ref_clean + ref_stego,
                                                  [0] * len(ref_clean) + [1] * len(ref_stego))

    asym = asymmetry(taps, metric)
    policy = WardenPolicy(
        format_threshold=round(fmt.threshold_, 6),
        same_format_threshold=round(band.threshold_, 6),
        reference_threshold=round(ref.threshold_, 6),
        metric=metric,
        provenance={
            "fixtures": [t.name for t in taps],
            "filler_seed": CALIBRATION_FILLER_SEED,
            "format": {"rule": "midpoint", "clean_max": fmt.clean_max_, "stego_min": fmt.stego_min_},
            "same_format": {"rule": "band", "margin": band_margin, "band_min": float(band_scores.min()),
                            "band_max": float(band_scores.max())},
            "reference": {"rule": "midpoint", "clean_max": ref.clean_max_, "stego_min": ref.stego_min_},
        },
    )
    return policy, {"asymmetry": asym, "taps": taps}


def asymmetry(taps, metric="tv"):
    """Raw vs deflated steganogram streams scored against nothing-sent streams of other calls.

    The reference comes from a different call than the stego stream, so the
    talker difference is part of every score (a same-call pair would cancel
    the voice half exactly).
    """
    rows = []
    for i, j in permutations(range(len(taps)), 2):
        raw = divergence(taps[i].clean, taps[j].raw, metric)
        defl = divergence(taps[i].clean, taps[j].deflate, metric)
        rows.append({"reference": taps[i].name, "fixture": taps[j].name, "raw": raw, "deflate": defl,
                     "ratio": raw / defl if defl else np.inf})
    return rows


def main(argv=None):
    import argparse
    import json

    ap = argparse.ArgumentParser(description="calibrate warden thresholds on speech fixtures")
    ap.add_argument("--fixtures", default="fixtures")
    ap.add_argument("--steganogram", default=None, help="defaults to <fixtures>/steganogram.txt")
    ap.add_argument("--out", default=None, help="policy JSON path (default: print)")
    args = ap.parse_args(argv)
    d = Path(args.fixtures)
    wavs = sorted(d.glob("speech*.wav"))
    stego = Path(args.steganogram or d / "steganogram.txt").read_bytes()
    policy, summary = calibrate(wavs, stego)
    text = json.dumps(policy.to_dict(), indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    for row in summary["asymmetry"]:
        print(f"{row['reference']} vs {row['fixture']}: raw {row['raw']:.4f}  deflate {row['deflate']:.4f}  ratio {row['ratio']:.1f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
