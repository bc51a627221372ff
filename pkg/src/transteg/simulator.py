"""In-process call simulation with TranSteg nodes placed per scenario.

A call is a chain of stages that each own their StreamState.  Packets go
through back to back at a logical 50 packets/s (timestamps are synthetic);
only the time spent inside each stage is measured.

Observation taps (numbered like the warden expects)::

    1 before-SS   overt stream as it would look without TranSteg
    2 after-SS    stream leaving the steganogram sender
    3 after-SR    stream leaving an intermediate steganogram receiver (S2, S4)
"""

import enum
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio_io import FRAME_SAMPLES, SAMPLE_RATE, PcmStream, frame_stream, read_wav, write_wav
from .channel import Compression, StegoChannel
from .codec import g711
from .codec.registry import PACKETS_PER_SECOND, codec_by_name, g726_with_pt
from .engine import (
    CodecPair, StreamState, TranStegError, bootstrap_keys, covert_map, expect_bootstrap, role_step, steg_bandwidth,
)
from .masking import KEY_LEN, mask
from .rtp import PacketRecord, RtpPacket, write_capture
from .warden import ByteHistogram

REPORT_SCHEMA = 1
FRAME_US = 1_000_000 // PACKETS_PER_SECOND


class Scenario(str, enum.Enum):
    S1 = "S1"
    S2 = "S2"
    S3 = "S3"
    S4 = "S4"


class Tap(enum.IntEnum):
    BEFORE_SS = 1
    AFTER_SS = 2
    AFTER_SR = 3

    @property
    def label(self):
        return self.name.lower().replace("_", "-")

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        if isinstance(value, int) or str(value).isdigit():
            return cls(int(value))
        key = str(value).strip().upper().replace("-", "_")
        try:
            return cls[key]
        except KeyError:
            raise ConfigError(f"unknown tap {value!r}; use before-ss, after-ss or after-sr") from None


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, index, role, cause):
        super().__init__(f"stage {index} ({role}): {cause}")
        self.index = index
        self.role = role
        self.cause = cause


# expected transcodes per packet for each scenario
TRANSCODES = {Scenario.S1: 0, Scenario.S2: 1, Scenario.S3: 1, Scenario.S4: 2}

_PLACEMENT = {
    Scenario.S1: ("sender-embedder", "receiver-extractor"),
    Scenario.S2: ("sender-embedder", "intermediate-restorer", "receiver"),
    Scenario.S3: ("sender", "intermediate-embedder", "receiver-extractor"),
    Scenario.S4: ("sender", "intermediate-embedder", "intermediate-restorer", "receiver"),
}
_EMBEDDERS = ("sender-embedder", "intermediate-embedder")
_TRANSTEG_ROLES = ("sender-embedder", "intermediate-embedder", "intermediate-restorer", "receiver-extractor")


def place_nodes(scenario):
    """Ordered roles along the path from caller to callee."""
    return list(_PLACEMENT[Scenario(scenario)])


def valid_taps(scenario):
    roles = place_nodes(scenario)
    taps = {Tap.BEFORE_SS, Tap.AFTER_SS}
    if "intermediate-restorer" in roles:
        taps.add(Tap.AFTER_SR)
    return taps


@dataclass
class ScenarioConfig:
    scenario: Scenario = Scenario.S4
    wav_inputs: list = field(default_factory=list)
    overt: str = "g711u"
    covert_pt: int = 96
    mask_key: bytes | None = None
    stego_input: str | None = None
    stego_data: bytes | None = None
    compression: Compression = Compression.NONE
    filler_seed: int = 0
    packets: int | None = None
    duration_s: float | None = None
    taps: tuple = (Tap.BEFORE_SS, Tap.AFTER_SS)
    ssrc: int = 0x5EC12E7
    seq_start: int = 0
    ts_start: int = 0
    capture_dir: str | None = None
    output_wav: str | None = None

    def __post_init__(self):
        self.scenario = Scenario(self.scenario)
        self.compression = Compression(self.compression)
        self.taps = tuple(sorted({Tap.parse(t) for t in self.taps}))
        self.wav_inputs = [str(p) for p in self.wav_inputs]

    @property
    def codec_pair(self):
        overt = codec_by_name(self.overt)
        covert = covert_map(overt)
        if covert.payload_type != self.covert_pt:
            covert = g726_with_pt(self.covert_pt)
        return CodecPair(overt, covert)

    def validate(self, check_files=True):
        """Raise ConfigError for anything that must be refused before packet one."""
        if self.scenario is Scenario.S4 and self.mask_key is not None:
            raise ConfigError("S4 with payload masking (SRTP) is refused: the intermediate SS cannot "
                              "transcode encrypted voice, so SRTP prevents TranSteg in S4")
        if self.mask_key is not None and len(self.mask_key) != KEY_LEN:
            raise ConfigError(f"mask key must be {KEY_LEN} bytes ({2 * KEY_LEN} hex digits)")
        bad = [t.label for t in self.taps if t not in valid_taps(self.scenario)]
        if bad:
            raise ConfigError(f"tap(s) {', '.join(bad)} not available in {self.scenario.value}")
        if not self.wav_inputs:
            raise ConfigError("no wav inputs given")
        if self.packets is not None and self.packets <= 0:
            raise ConfigError("packet count must be positive")
        if self.duration_s is not None and self.duration_s <= 0:
            raise ConfigError("duration must be positive")
        if self.stego_input is not None and self.stego_data is not None:
            raise ConfigError("give either stego_input or stego_data, not both")
        try:
            self.codec_pair
        except (KeyError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        if check_files:
            for p in self.wav_inputs + ([self.stego_input] if self.stego_input else []):
                if not Path(p).is_file():
                    raise ConfigError(f"input not found: {p}")
        return self

    def packet_count(self, available):
        if self.packets is not None:
            return self.packets
        if self.duration_s is not None:
            return int(round(self.duration_s * PACKETS_PER_SECOND))
        return available

    def steganogram(self):
        if self.stego_data is not None:
            return bytes(self.stego_data)
        if self.stego_input is not None:
            return Path(self.stego_input).read_bytes()
        return b""


@dataclass
class TimingStats:
    count: int = 0
    total_us: float = 0.0
    mean_us: float = 0.0
    stddev_us: float = 0.0
    max_us: float = 0.0

    @classmethod
    def from_ns(cls, samples_ns):
        if not samples_ns:
            return cls()
        us = [s / 1000.0 for s in samples_ns]
        return cls(len(us), sum(us), statistics.fmean(us),
                   statistics.pstdev(us) if len(us) > 1 else 0.0, max(us))

    def as_dict(self):
        return {"count": self.count, "total_us": self.total_us, "mean_us": self.mean_us,
                "stddev_us": self.stddev_us, "max_us": self.max_us}


def measure_processing(stage, packets):
    """Run ``stage`` over ``packets`` and time each call; returns (outputs, TimingStats)."""
    outputs, samples = [], []
    clock = time.perf_counter_ns
    for p in packets:
        t0 = clock()
        outputs.append(stage(p))
        samples.append(clock() - t0)
    return outputs, TimingStats.from_ns(samples)


@dataclass
class CallReport:
    scenario: str
    stages: list
    packets_sent: int
    duration_s: float
    capacity_bytes_per_packet: int
    nominal_bandwidth_bit_s: int
    stego_bytes_expected: int
    stego_bytes_delivered: int
    goodput_bit_s: float
    transcode_count: int
    extraction_ok: bool
    masked: bool
    per_stage_processing_us: dict
    added_processing_us: float
    passthrough_processing_us: float
    tap_histograms: dict
    voice_frames_out: int
    capture_files: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    # full tap streams, kept in memory for the warden; not serialized
    tap_records: dict = field(default_factory=dict, repr=False)

    def to_dict(self):
        return {
            "schema": REPORT_SCHEMA,
            "scenario": self.scenario,
            "stages": self.stages,
            "packets_sent": self.packets_sent,
            "duration_s": self.duration_s,
            "capacity_bytes_per_packet": self.capacity_bytes_per_packet,
            "nominal_bandwidth_bit_s": self.nominal_bandwidth_bit_s,
            "stego_bytes_expected": self.stego_bytes_expected,
            "stego_bytes_delivered": self.stego_bytes_delivered,
            "goodput_bit_s": self.goodput_bit_s,
            "transcode_count": self.transcode_count,
            "extraction_ok": self.extraction_ok,
            "masked": self.masked,
            "per_stage_processing_us": self.per_stage_processing_us,
            "added_processing_us": self.added_processing_us,
            "passthrough_processing_us": self.passthrough_processing_us,
            "tap_histograms": {k: h.counts.tolist() for k, h in self.tap_histograms.items()},
            "voice_frames_out": self.voice_frames_out,
            "capture_files": self.capture_files,
            "notes": self.notes,
        }


def _load_frames(paths):
    frames = []
    for p in paths:
        frames.extend(frame_stream(read_wav(p)))
    return frames


def _node_states(cfg, roles, pair, stego):
    """One StreamState per stage, keyed according to who knows the SRTP key in each scenario."""
    key = cfg.mask_key
    states = []
    for role in roles:
        st = StreamState(pair, filler_seed=cfg.filler_seed, mask_key=key)
        if role in _EMBEDDERS:
            st.stego = StegoChannel.embedder(stego, cfg.compression, cfg.filler_seed)
        elif role in ("intermediate-restorer", "receiver-extractor"):
            st.stego = StegoChannel.extractor(cfg.compression, cfg.filler_seed)
        states.append(st)
    if key is not None and cfg.scenario is Scenario.S2:
        # the SR sits mid-path and has no SRTP key: the caller smuggles it in the first packets
        bootstrap_keys(states[0], key)
        expect_bootstrap(states[1])
    return states


def run_call(cfg):
    """Simulate one call and return its CallReport."""
    cfg.validate()
    pair = cfg.codec_pair
    roles = place_nodes(cfg.scenario)
    stego = cfg.steganogram()
    states = _node_states(cfg, roles, pair, stego)

    frames = _load_frames(cfg.wav_inputs)
    n_packets = cfg.packet_count(len(frames))
    if not frames:
        raise ConfigError("wav inputs contain no samples")

    taps = {t: [] for t in cfg.taps}
    timings = {i: [] for i in range(len(roles))}
    passthrough = []
    pcm_out = []
    clock = time.perf_counter_ns
    masked = cfg.mask_key is not None
    law = pair.overt.law
    src_ip, dst_ip, sport, dport = "10.0.0.1", "10.0.0.2", 40000, 40002

    def record(tap, pkt, ts_us):
        taps[tap].append(PacketRecord.build(pkt, ts_us, src_ip, dst_ip, sport, dport))

    for n in range(n_packets):
        pcm = frames[n % len(frames)]
        ts_us = n * FRAME_US
        pkt = RtpPacket(pair.overt.payload_type, (cfg.seq_start + n) & 0xFFFF,
                        (cfg.ts_start + n * FRAME_SAMPLES) & 0xFFFFFFFF, cfg.ssrc,
                        b"\x00" * pair.overt.bytes_per_frame)
        if Tap.BEFORE_SS in taps and roles[0] == "sender-embedder":
            # the SS lives inside the caller: tap 1 is what the caller would send without it
            plain = g711.g711_encode(pcm, law)
            if masked:
                plain = mask(plain, cfg.mask_key, cfg.ssrc, states[0]._index.peek(pkt.sequence_number))
            record(Tap.BEFORE_SS, pkt.with_payload(plain), ts_us)

        for i, (role, st) in enumerate(zip(roles, states)):
            t0 = clock()
            try:
                res = role_step(role, pkt, st, pcm=pcm if i == 0 else None)
            except (TranStegError, ValueError) as exc:
                raise StageError(i, role, exc) from exc
            timings[i].append(clock() - t0)
            pkt = res.packet
            if res.pcm is not None:
                pcm_out.append(res.pcm)
            if role == "sender" and Tap.BEFORE_SS in taps:
                record(Tap.BEFORE_SS, pkt, ts_us)
            elif role in _EMBEDDERS and Tap.AFTER_SS in taps:
                record(Tap.AFTER_SS, pkt, ts_us)
            elif role == "intermediate-restorer" and Tap.AFTER_SR in taps:
                record(Tap.AFTER_SR, pkt, ts_us)

        # a forwarding hop that does nothing, timed the same way, as the baseline
        t0 = clock()
        _ = pkt.with_payload(pkt.payload)
        passthrough.append(clock() - t0)

    extractor = next(st for role, st in zip(roles, states) if role in ("intermediate-restorer", "receiver-extractor"))
    embedder = next(st for role, st in zip(roles, states) if role in _EMBEDDERS)
    ch = extractor.stego
    expected = len(stego)
    extraction_ok = False
    delivered = ch.received
    notes = []
    try:
        extraction_ok = ch.payload() == stego
    except Exception as exc:  # incomplete, bad header, inflate failure
        notes.append(f"extraction: {exc}")
    if embedder.stego.cursor < embedder.stego.framed_length:
        notes.append(f"steganogram did not fit: {embedder.stego.framed_length - embedder.stego.cursor} "
                     f"framed bytes unsent")

    total_transcodes = sum(st.transcodes for st in states)
    if total_transcodes % n_packets:
        raise StageError(-1, "bookkeeping", f"uneven transcode count {total_transcodes} over {n_packets} packets")
    transcode_count = total_transcodes // n_packets
    if transcode_count != TRANSCODES[cfg.scenario]:
        raise StageError(-1, "bookkeeping", f"{transcode_count} transcodes per packet, "
                                            f"{cfg.scenario.value} needs {TRANSCODES[cfg.scenario]}")

    per_stage = {f"{i}:{role}": TimingStats.from_ns(timings[i]).as_dict() for i, role in enumerate(roles)}
    added = sum(TimingStats.from_ns(timings[i]).mean_us for i, r in enumerate(roles) if r in _TRANSTEG_ROLES)
    duration = n_packets / PACKETS_PER_SECOND

    hists = {t.label: ByteHistogram.from_payloads((r.rtp.payload for r in recs), tap_id=t.label)
             for t, recs in taps.items()}
    capture_files = {}
    if cfg.capture_dir:
        out = Path(cfg.capture_dir)
        out.mkdir(parents=True, exist_ok=True)
        for t, recs in taps.items():
            path = out / f"tap{int(t)}_{t.label}.tscap"
            write_capture(recs, path)
            capture_files[t.label] = str(path)
    if cfg.output_wav:
        samples = np.concatenate(pcm_out) if pcm_out else np.zeros(0, dtype=np.int16)
        write_wav(PcmStream(samples.astype(np.int16)), cfg.output_wav)

    return CallReport(
        scenario=cfg.scenario.value,
        stages=roles,
        packets_sent=n_packets,
        duration_s=duration,
        capacity_bytes_per_packet=pair.capacity_bytes,
        nominal_bandwidth_bit_s=steg_bandwidth(pair),
        stego_bytes_expected=expected,
        stego_bytes_delivered=delivered,
        goodput_bit_s=delivered * 8 / duration,
        transcode_count=transcode_count,
        extraction_ok=extraction_ok,
        masked=masked,
        per_stage_processing_us=per_stage,
        added_processing_us=added,
        passthrough_processing_us=TimingStats.from_ns(passthrough).mean_us,
        tap_histograms=hists,
        voice_frames_out=len(pcm_out),
        capture_files=capture_files,
        notes=notes,
        tap_records={t.label: recs for t, recs in taps.items()},
    )


def _run_detached(cfg):
    rep = run_call(cfg)
    rep.tap_records = {}
    return rep


def run_calls(configs, max_workers=None):
    """Run independent calls in parallel processes (tap records are dropped)."""
    with ProcessPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(_run_detached, configs))


def aggregate(reports):
    """Sum independent calls; how one steganogram would be split across them is left open."""
    total_bytes = sum(r.stego_bytes_delivered for r in reports)
    duration = max((r.duration_s for r in reports), default=0.0)
    return {
        "schema": REPORT_SCHEMA,
        "calls": len(reports),
        "stego_bytes_delivered": total_bytes,
        "goodput_bit_s": sum(r.goodput_bit_s for r in reports),
        "wall_duration_s": duration,
        "extraction_ok": all(r.extraction_ok for r in reports),
    }


def fixture_samples(cfg):
    """Sample count of the concatenated inputs, for duration checks."""
    return sum(read_wav(p).samples.size for p in cfg.wav_inputs)


__all__ = [
    "CallReport", "ConfigError", "REPORT_SCHEMA", "SAMPLE_RATE", "Scenario", "ScenarioConfig", "StageError",
    "TRANSCODES", "Tap", "TimingStats", "aggregate", "measure_processing", "place_nodes", "run_call",
    "run_calls", "valid_taps",
]
