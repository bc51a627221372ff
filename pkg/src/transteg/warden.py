"""Passive warden: byte-value histograms per tap and pairwise comparison.

Taps follow the three observation points of a TranSteg path::

    1 before the SS      2 after the SS      3 after the SR

Pairs 1-2 and 2-3 straddle exactly one TranSteg node, so the streams differ
in format when the technique is active.  Pair 1-3 compares two overt streams;
the only legitimate difference there is transcoding artifacts, so it gets a
tighter, one-sided band.  A single tap gives nothing to compare and is always
judged clean.
"""

import csv
import json
from dataclasses import dataclass, field
from importlib import resources
from itertools import combinations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

METRICS = ("tv", "chi-square", "kl-smoothed")
TAP_LABELS = {1: "before-ss", 2: "after-ss", 3: "after-sr"}
_TAP_IDS = {v: k for k, v in TAP_LABELS.items()}
FORMAT_PAIRS = ((1, 2), (2, 3))
SAME_FORMAT_PAIRS = ((1, 3),)


class WardenError(ValueError):
    pass


def tap_id(tap):
    """1, 2 or 3 from an int, an enum, or a label such as ``after-ss``."""
    if hasattr(tap, "value") and isinstance(tap.value, int):
        return int(tap.value)
    if isinstance(tap, int) or str(tap).isdigit():
        t = int(tap)
    else:
        t = _TAP_IDS.get(str(tap).strip().lower().replace("_", "-"))
    if t not in TAP_LABELS:
        raise WardenError(f"unknown tap {tap!r}")
    return t


@dataclass
class ByteHistogram:
    counts: np.ndarray = field(default_factory=lambda: np.zeros(256, dtype=np.int64))
    tap_id: str = ""
    packets: int = 0

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (256,) or (self.counts < 0).any():
            raise WardenError("histogram needs 256 non-negative counts")

    @property
    def total(self):
        return int(self.counts.sum())

    @classmethod
    def from_bytes(cls, data, tap_id=""):
        counts = np.bincount(np.frombuffer(bytes(data), dtype=np.uint8), minlength=256)
        return cls(counts, tap_id, 1 if len(data) else 0)

    @classmethod
    def from_payloads(cls, payloads, tap_id=""):
        h = cls(tap_id=tap_id)
        for p in payloads:
            h.add(p)
        return h

    def add(self, payload):
        self.counts += np.bincount(np.frombuffer(bytes(payload), dtype=np.uint8), minlength=256)
        self.packets += 1
        return self

    def merge(self, other):
        return ByteHistogram(self.counts + other.counts, self.tap_id or other.tap_id, self.packets + other.packets)

    __add__ = merge

    def frequencies(self):
        t = self.total
        if t == 0:
            raise WardenError("empty histogram")
        return self.counts / t

    def __eq__(self, other):
        return isinstance(other, ByteHistogram) and np.array_equal(self.counts, other.counts)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["byte_value", "count"])
            for b, c in enumerate(self.counts):
                w.writerow([b, int(c)])


def histogram(payloads, tap_id=""):
    """Byte histogram over every payload in a stream (bytes, records or packets)."""
    if isinstance(payloads, (bytes, bytearray, memoryview)):
        return ByteHistogram.from_bytes(payloads, tap_id)
    return ByteHistogram.from_payloads((_payload_of(p) for p in payloads), tap_id)


def _payload_of(item):
    if hasattr(item, "rtp"):
        return item.rtp.payload
    if hasattr(item, "payload"):
        return item.payload
    return item


def _as_counts(h):
    c = h.counts if isinstance(h, ByteHistogram) else np.asarray(h, dtype=np.float64)
    if c.shape != (256,):
        raise WardenError("histogram needs 256 bins")
    if c.sum() <= 0:
        raise WardenError("empty histogram")
    return c.astype(np.float64)


def divergence(h1, h2, metric="tv"):
    """Distance between two byte distributions.

    tv           half the L1 distance of the frequencies, in [0, 1]
    chi-square   symmetric chi-square distance, 0.5 * sum (p-q)^2 / (p+q), in [0, 1]
    kl-smoothed  add-one smoothed KL divergence, larger of the two directions
    """
    a, b = _as_counts(h1), _as_counts(h2)
    if metric == "tv":
        return float(0.5 * np.abs(a / a.sum() - b / b.sum()).sum())
    if metric == "chi-square":
        p, q = a / a.sum(), b / b.sum()
        s = p + q
        nz = s > 0
        return float(0.5 * ((p[nz] - q[nz]) ** 2 / s[nz]).sum())
    if metric == "kl-smoothed":
        p = (a + 1) / (a.sum() + 256)
        q = (b + 1) / (b.sum() + 256)
        return float(max((p * np.log(p / q)).sum(), (q * np.log(q / p)).sum()))
    raise WardenError(f"unknown metric {metric!r}; choose from {', '.join(METRICS)}")


def all_metrics(h1, h2):
    return {m: divergence(h1, h2, m) for m in METRICS}


# sklearn-shaped pieces: the histogram builder and a threshold detector per tap pair

def _check_pairs(X):
    """Validate an (n, 2, 256) stack of histogram pairs."""
    if isinstance(X, (list, tuple)) and X and isinstance(X[0], (list, tuple)) \
            and isinstance(X[0][0], ByteHistogram):
        X = [[a.counts, b.counts] for a, b in X]
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 3 or X.shape[1:] != (2, 256):
        raise WardenError(f"expected histogram pairs of shape (n, 2, 256), got {X.shape}")
    if (X < 0).any() or (X.sum(axis=2) <= 0).any():
        raise WardenError("histogram pairs need non-negative, non-empty counts")
    return X


class ByteHistogramTransformer(BaseEstimator, TransformerMixin):
    """Payload streams in, one 256-bin row per stream out."""

    def __init__(self, normalize=False):
        self.normalize = normalize

    def fit(self, X, y=None):
        self.n_features_out_ = 256
        return self

    def transform(self, X):
        rows = np.array([histogram(stream).counts for stream in X], dtype=np.float64).reshape(-1, 256)
        if self.normalize:
            tot = rows.sum(axis=1, keepdims=True)
            rows = np.divide(rows, tot, out=np.zeros_like(rows), where=tot > 0)
        return rows


class TapPairDetector(BaseEstimator, ClassifierMixin):
    """Flags a pair of tap histograms whose divergence is over a fitted threshold.

    rule="midpoint" needs clean (0) and stego (1) pairs and puts the threshold
    halfway between the largest clean and the smallest stego score.
    rule="band" needs only clean pairs: threshold = max clean score * (1 + margin).
    """

    def __init__(self, metric="tv", rule="midpoint", margin=0.0):
        self.metric = metric
        self.rule = rule
        self.margin = margin

    def score_pairs(self, X):
        X = _check_pairs(X)
        return np.array([divergence(a, b, self.metric) for a, b in X])

    def fit(self, X, y=None):
        scores = self.score_pairs(X)
        y = np.zeros(len(scores), dtype=int) if y is None else np.asarray(y, dtype=int)
        if y.shape != scores.shape:
            raise WardenError("y must have one label per histogram pair")
        clean, stego = scores[y == 0], scores[y == 1]
        if clean.size == 0:
            raise WardenError("calibration needs at least one clean pair")
        self.clean_max_ = float(clean.max())
        self.classes_ = np.array([0, 1])
        if self.rule == "band":
            self.threshold_ = self.clean_max_ * (1.0 + self.margin)
            self.stego_min_ = float(stego.min()) if stego.size else None
        elif self.rule == "midpoint":
            if stego.size == 0:
                raise WardenError("midpoint rule needs stego pairs too")
            self.stego_min_ = float(stego.min())
            self.threshold_ = 0.5 * (self.clean_max_ + self.stego_min_)
        else:
            raise WardenError(f"unknown rule {self.rule!r}")
        self.separable_ = self.stego_min_ is None or self.stego_min_ > self.clean_max_
        return self

    def decision_function(self, X):
        check_is_fitted(self, "threshold_")
        return self.score_pairs(X) - self.threshold_

    def predict(self, X):
        return (self.decision_function(X) > 0).astype(int)


@dataclass
class WardenPolicy:
    """Per tap-pair thresholds (on ``metric``) plus the packet-count tolerance."""

    format_threshold: float
    same_format_threshold: float
    reference_threshold: float | None = None
    metric: str = "tv"
    packet_tolerance: int = 1
    provenance: dict = field(default_factory=dict)

    def threshold_for(self, pair):
        return self.same_format_threshold if tuple(pair) in SAME_FORMAT_PAIRS else self.format_threshold

    def to_dict(self):
        return {"schema": 1, "metric": self.metric, "format_threshold": self.format_threshold,
                "same_format_threshold": self.same_format_threshold,
                "reference_threshold": self.reference_threshold,
                "packet_tolerance": self.packet_tolerance, "provenance": self.provenance}

    @classmethod
    def from_dict(cls, d):
        return cls(d["format_threshold"], d["same_format_threshold"], d.get("reference_threshold"),
                   d.get("metric", "tv"), d.get("packet_tolerance", 1), d.get("provenance", {}))

    @classmethod
    def load(cls, path=None):
        if path is None:
            text = resources.files("transteg").joinpath("data/warden_policy.json").read_text()
        else:
            with open(path) as fh:
                text = fh.read()
        return cls.from_dict(json.loads(text))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


@dataclass
class DetectionVerdict:
    stream_id: str
    metrics: dict
    thresholds: dict
    verdict: str
    rationale: str

    @property
    def suspicious(self):
        return self.verdict == "suspicious"

    def to_dict(self):
        return {"schema": 1, "stream_id": self.stream_id, "metrics": self.metrics,
                "thresholds": self.thresholds, "verdict": self.verdict, "rationale": self.rationale}


def _tap_histogram(capture, label):
    if isinstance(capture, ByteHistogram):
        return capture
    return histogram(capture, tap_id=label)


def detect(tap_captures, policy=None, stream_id="stream"):
    """Compare every pair of taps and flag the stream if any pair exceeds its threshold."""
    if not tap_captures:
        raise WardenError("detect needs at least one tap")
    policy = policy or WardenPolicy.load()
    hists = {}
    for tap, cap in tap_captures.items():
        t = tap_id(tap)
        hists[t] = _tap_histogram(cap, TAP_LABELS[t])
    if len(hists) == 1:
        return DetectionVerdict(stream_id, {}, {}, "clean", "single localization")

    counts = {t: h.packets for t, h in hists.items()}
    if max(counts.values()) - min(counts.values()) > policy.packet_tolerance:
        raise WardenError(f"tap packet counts differ beyond tolerance {policy.packet_tolerance}: "
                          + ", ".join(f"tap {t}={n}" for t, n in sorted(counts.items())))
    metrics, thresholds, triggered = {}, {}, []
    for a, b in combinations(sorted(hists), 2):
        key = f"{a}-{b}"
        metrics[key] = all_metrics(hists[a], hists[b])
        thresholds[key] = policy.threshold_for((a, b))
        if metrics[key][policy.metric] > thresholds[key]:
            kind = "same-format band" if (a, b) in SAME_FORMAT_PAIRS else "format change"
            triggered.append(f"taps {key} ({kind}): {policy.metric} {metrics[key][policy.metric]:.4f} "
                             f"> {thresholds[key]:.4f}")
    if triggered:
        return DetectionVerdict(stream_id, metrics, thresholds, "suspicious", "; ".join(triggered))
    return DetectionVerdict(stream_id, metrics, thresholds, "clean", "all tap pairs within thresholds")


def compare_to_reference(hist, reference, policy=None):
    """Score one tap against a known TranSteg-without-payload profile.

    Returns (metric value, exceeds reference threshold).
    """
    policy = policy or WardenPolicy.load()
    if policy.reference_threshold is None:
        raise WardenError("policy has no reference threshold")
    v = divergence(hist, reference, policy.metric)
    return v, v > policy.reference_threshold
